//! The dispersive decay experiment: weighted sup norms of `G(·,·,t)` over a
//! square grid, and a log-log fit of their decay in `t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jost::JostConfig;
use crate::numeric::fit::linear_fit;
use crate::potential::Potential;
use crate::propagator::{kernel_slices, KernelSlice, PropagatorConfig, PropagatorData};

/// Fewest time samples, and fewest decades, a fit is attempted with.
pub const MIN_SAMPLES: usize = 8;
pub const MIN_DECADES: f64 = 1.5;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DecayConfig {
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_step: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_times: usize,
    /// Weight exponent of `(1+|x|)^{-σ}(1+|y|)^{-σ}`.
    pub sigma: f64,
    pub subtract_p0: bool,
    /// Quadrature error allowed at the maximiser, relative to `|G|` there.
    pub error_fraction: f64,
    pub propagator: PropagatorConfig,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            grid_min: -8.0,
            grid_max: 8.0,
            grid_step: 0.25,
            t_min: 10.0,
            t_max: 1000.0,
            n_times: 12,
            sigma: 2.0,
            subtract_p0: true,
            error_fraction: 0.1,
            propagator: PropagatorConfig::default(),
        }
    }
}

impl DecayConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.grid_step > 0.0 && self.grid_max > self.grid_min) {
            return Err(Error::Config("decay grid needs grid_max > grid_min and grid_step > 0".into()));
        }
        let n = ((self.grid_max - self.grid_min) / self.grid_step).round() as usize;
        Ok((0..=n).map(|i| self.grid_min + i as f64 * self.grid_step).collect())
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.n_times >= 2) {
            return Err(Error::Config("decay times need 0 < t_min < t_max and n_times ≥ 2".into()));
        }
        Ok(log_times(self.t_min, self.t_max, self.n_times))
    }
}

/// `n` log-spaced times on `[t_min, t_max]`.
pub fn log_times(t_min: f64, t_max: f64, n: usize) -> Vec<f64> {
    let r = (t_max / t_min).ln();
    (0..n).map(|i| t_min * (r * i as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub points: usize,
}

/// Grid supremum of the weighted kernel and where it sits.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeightedNorm {
    pub value: f64,
    pub x: f64,
    pub y: f64,
    /// Quadrature error estimate at the maximiser, weighted the same way.
    pub error: f64,
}

/// `sup (1+|x|)^{-σ} |K(x,y)| (1+|y|)^{-σ}` of `G` (or of the propagator
/// kernel itself when `use_pac`).
pub fn weighted_norm(ks: &KernelSlice, sigma: f64, use_pac: bool) -> WeightedNorm {
    let field = if use_pac { &ks.pac } else { &ks.g };
    let mut best = WeightedNorm { value: 0.0, x: f64::NAN, y: f64::NAN, error: 0.0 };
    for (i, &x) in ks.x_grid.iter().enumerate() {
        for (j, &y) in ks.y_grid.iter().enumerate() {
            let w = ((1.0 + x.abs()) * (1.0 + y.abs())).powf(-sigma);
            let idx = ks.at(i, j);
            let v = w * field[idx].norm();
            if v > best.value {
                best = WeightedNorm { value: v, x, y, error: w * ks.quadrature_error[idx] };
            }
        }
    }
    best
}

/// Least-squares slope `p` of `log norm = c - p log t`, with half-width
/// `2·SE(p)`.
pub fn decay_fit(times: &[f64], norms: &[f64]) -> Result<(f64, f64)> {
    if times.len() != norms.len() {
        return Err(Error::Grid("times and norms differ in length".into()));
    }
    let decades = if times.is_empty() { 0.0 } else { (times[times.len() - 1] / times[0]).log10() };
    if times.len() < MIN_SAMPLES || decades < MIN_DECADES {
        return Err(Error::InsufficientSamples { need: MIN_SAMPLES, decades: MIN_DECADES });
    }
    if norms.iter().any(|&n| !(n > 0.0 && n.is_finite())) {
        return Err(Error::Degenerate("weighted norms must be positive and finite".into()));
    }
    if norms.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::NonMonotone);
    }
    let pts: Vec<(f64, f64)> = times.iter().zip(norms).map(|(t, n)| (t.ln(), n.ln())).collect();
    let fit = linear_fit(&pts);
    Ok((-fit.slope, 2.0 * fit.slope_se))
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub potential_label: String,
    pub resonant: bool,
    /// Whether `(4πit)^{-1/2}P₀` was subtracted.
    pub p0_subtracted: bool,
    pub times: Vec<f64>,
    pub weighted_norms: Vec<f64>,
    pub maximisers: Vec<(f64, f64)>,
    pub errors_at_maximiser: Vec<f64>,
    /// Some maximiser carries a quadrature error above `error_fraction` of the norm.
    pub error_flagged: bool,
    pub fitted_exponent: f64,
    pub confidence: f64,
    pub fit_window: (f64, f64),
    pub grid_spec: GridSpec,
}

fn report(data: &PropagatorData, cfg: &DecayConfig, slices: &[KernelSlice], subtract: bool) -> Result<DecayReport> {
    let grid = &slices[0].x_grid;
    let times: Vec<f64> = slices.iter().map(|s| s.t).collect();
    let norms: Vec<WeightedNorm> = slices.iter().map(|s| weighted_norm(s, cfg.sigma, !subtract)).collect();
    let values: Vec<f64> = norms.iter().map(|n| n.value).collect();
    let (fitted_exponent, confidence) = decay_fit(&times, &values)?;
    Ok(DecayReport {
        potential_label: data.label.clone(),
        resonant: data.is_resonant(),
        p0_subtracted: subtract && data.is_resonant(),
        error_flagged: norms.iter().any(|n| n.error > cfg.error_fraction * n.value),
        maximisers: norms.iter().map(|n| (n.x, n.y)).collect(),
        errors_at_maximiser: norms.iter().map(|n| n.error).collect(),
        weighted_norms: values,
        fitted_exponent,
        confidence,
        fit_window: (times[0], times[times.len() - 1]),
        grid_spec: GridSpec { min: grid[0], max: grid[grid.len() - 1], step: cfg.grid_step, points: grid.len() },
        times,
    })
}

/// The experiment with and without the projection term, from one set of
/// kernel evaluations. The second report is `None` for non-resonant data,
/// where the two coincide.
pub fn decay_reports(data: &PropagatorData, cfg: &DecayConfig) -> Result<(DecayReport, Option<DecayReport>)> {
    decay_reports_from_slices(data, cfg, &kernel_slices(data, &cfg.grid()?, &cfg.times()?, true)?)
}

/// As [`decay_reports`], for slices already evaluated on the configured grid
/// and times.
pub fn decay_reports_from_slices(
    data: &PropagatorData,
    cfg: &DecayConfig,
    slices: &[KernelSlice],
) -> Result<(DecayReport, Option<DecayReport>)> {
    if slices.is_empty() {
        return Err(Error::Grid("no kernel slices".into()));
    }
    let with = report(data, cfg, slices, true)?;
    let without = if data.is_resonant() { Some(report(data, cfg, slices, false)?) } else { None };
    Ok((with, without))
}

/// Builds the Jost data on the configured grid and runs the experiment
/// (with the projection term subtracted iff `cfg.subtract_p0`).
pub fn run_experiment(v: &Potential, cfg: &DecayConfig, jcfg: &JostConfig) -> Result<DecayReport> {
    let data = PropagatorData::new(v, &cfg.grid()?, &cfg.propagator, jcfg)?;
    let (with, without) = decay_reports(&data, cfg)?;
    Ok(match (cfg.subtract_p0, without) {
        (false, Some(w)) => w,
        _ => with,
    })
}
