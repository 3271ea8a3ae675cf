use thiserror::Error;

use crate::scattering::ResonanceReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown potential `{0}`")]
    UnknownPotential(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("integral diverges: tail estimate {tail:e} exceeds tolerance {tol:e}")]
    Divergent { tail: f64, tol: f64 },

    #[error("cutoff failure: tail {eta:e} still above {tol:e} at x = {x}")]
    CutoffFailure { x: f64, eta: f64, tol: f64 },

    #[error("step size underflow at x = {x} (k = {k})")]
    StepUnderflow { x: f64, k: num_complex::Complex64 },

    #[error("inconsistent grids: {0}")]
    Grid(String),

    #[error("Wronskian cross-check spread {spread:e} exceeds {tol:e} at k = {k}")]
    WronskianSpread { k: f64, spread: f64, tol: f64 },

    #[error("Wronskian vanishes at k = {k} (|W| = {w:e})")]
    VanishingWronskian { k: f64, w: f64 },

    #[error("root refinement failed to converge on [{lo}, {hi}]")]
    RootNotConverged { lo: f64, hi: f64 },

    #[error("zero energy is not resonant (|W(0)| = {w0:e})")]
    NotResonant { w0: f64 },

    #[error("ambiguous resonance classification: |W(0)| = {w0:e}, threshold {threshold:e}")]
    AmbiguousResonance {
        w0: f64,
        threshold: f64,
        resonant: Box<ResonanceReport>,
        non_resonant: Box<ResonanceReport>,
    },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("residual {what} = {value:e} exceeds tolerance {tol:e}")]
    Residual { what: String, value: f64, tol: f64 },

    #[error("fit requires at least {need} samples spanning {decades} decades")]
    InsufficientSamples { need: usize, decades: f64 },

    #[error("non-monotone decay data; widen the time window")]
    NonMonotone,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
