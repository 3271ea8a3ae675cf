//! Real potentials `V(x)` with declared tail bounds, weighted moment norms
//! and a small catalog of reference potentials.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::quad::{adaptive, gauss_legendre_composite, Quad};
use crate::numeric::spline::CubicSpline;

/// Truncation target for moment integrals.
pub const TAIL_TOL: f64 = 1e-12;
const MAX_CUTOFF: f64 = 1e9;

/// Which half-line a quantity refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Analytic majorant for `|V(x)|`, valid for all `x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailBound {
    /// `V = 0` for `|x| > radius`.
    Compact { radius: f64 },
    /// `|V(x)| ≤ amp·e^{-rate|x|}`.
    Exponential { amp: f64, rate: f64 },
    /// `|V(x)| ≤ amp·e^{-x²/width²}`.
    Gaussian { amp: f64, width: f64 },
    /// `|V(x)| ≤ amp·(1+|x|)^{-power}`.
    PowerLaw { amp: f64, power: f64 },
}

impl TailBound {
    /// Upper bound for `∫_X^∞ (1+x)^σ |V(x)| dx`, `X ≥ 0`.
    pub fn tail_integral(&self, x: f64, sigma: f64) -> f64 {
        let w = (1.0 + x).powf(sigma);
        match *self {
            TailBound::Compact { radius } => {
                if x >= radius {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            TailBound::Exponential { amp, rate } => {
                let r = rate - sigma / (1.0 + x);
                if r <= 0.0 {
                    f64::INFINITY
                } else {
                    amp * w * (-rate * x).exp() / r
                }
            }
            TailBound::Gaussian { amp, width } => {
                let r = 2.0 * x / (width * width) - sigma / (1.0 + x);
                if r <= 0.0 {
                    f64::INFINITY
                } else {
                    amp * w * (-(x * x) / (width * width)).exp() / r
                }
            }
            TailBound::PowerLaw { amp, power } => {
                let e = power - sigma - 1.0;
                if e <= 0.0 {
                    f64::INFINITY
                } else {
                    amp * (1.0 + x).powf(-e) / e
                }
            }
        }
    }

    /// Largest σ with a finite `L¹_σ` norm (exclusive for power laws).
    pub fn moment_order(&self) -> f64 {
        match *self {
            TailBound::PowerLaw { power, .. } => power - 1.0,
            _ => f64::INFINITY,
        }
    }

    fn scaled(self, s: f64) -> Self {
        let s = s.abs();
        match self {
            TailBound::Compact { radius } => TailBound::Compact { radius },
            TailBound::Exponential { amp, rate } => TailBound::Exponential { amp: amp * s, rate },
            TailBound::Gaussian { amp, width } => TailBound::Gaussian { amp: amp * s, width },
            TailBound::PowerLaw { amp, power } => TailBound::PowerLaw { amp: amp * s, power },
        }
    }
}

#[derive(Clone, Debug)]
struct Sampled {
    spline: CubicSpline,
    left: (f64, f64, f64),  // (x0, V(x0), rate)
    right: (f64, f64, f64), // (xn, V(xn), rate)
}

#[derive(Clone, Debug)]
enum Shape {
    Free,
    PoeschlTeller { l: f64 },
    SquareWell { v0: f64, a: f64 },
    GaussianWell { depth: f64, width: f64 },
    Sampled(Box<Sampled>),
}

/// An evaluable real potential together with its tail majorant.
#[derive(Clone, Debug)]
pub struct Potential {
    label: String,
    shape: Shape,
    scale: f64,
    tail: TailBound,
}

impl Potential {
    pub fn free() -> Self {
        Self { label: "free".into(), shape: Shape::Free, scale: 1.0, tail: TailBound::Compact { radius: 0.0 } }
    }

    /// `V(x) = -l(l+1) sech²x`.
    pub fn poeschl_teller(l: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(invalid("l", "must be positive"));
        }
        let c = l * (l + 1.0);
        Ok(Self {
            label: format!("poeschl_teller(l={l})"),
            shape: Shape::PoeschlTeller { l },
            scale: 1.0,
            // sech²x ≤ 4e^{-2|x|}
            tail: TailBound::Exponential { amp: 4.0 * c, rate: 2.0 },
        })
    }

    /// `V(x) = -V₀` on `[-a, a]`, zero outside.
    pub fn square_well(v0: f64, a: f64) -> Result<Self> {
        if !(v0.is_finite() && v0 >= 0.0) {
            return Err(invalid("v0", "must be a non-negative depth"));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(invalid("a", "must be positive"));
        }
        Ok(Self {
            label: format!("square_well(v0={v0},a={a})"),
            shape: Shape::SquareWell { v0, a },
            scale: 1.0,
            tail: TailBound::Compact { radius: a },
        })
    }

    /// The well at its first zero-energy resonance, `√V₀·a = π/2`.
    pub fn resonant_square_well() -> Self {
        Self::square_well(PI * PI / 4.0, 1.0).expect("valid parameters")
    }

    /// `V(x) = -depth·e^{-x²/width²}`.
    pub fn gaussian_well(depth: f64, width: f64) -> Result<Self> {
        if !(depth.is_finite() && depth >= 0.0) {
            return Err(invalid("depth", "must be non-negative"));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(invalid("width", "must be positive"));
        }
        Ok(Self {
            label: format!("gaussian_well(depth={depth},width={width})"),
            shape: Shape::GaussianWell { depth, width },
            scale: 1.0,
            tail: TailBound::Gaussian { amp: depth, width },
        })
    }

    /// Cubic interpolation of samples with exponential extrapolation beyond
    /// the sampled range. The decay rate on each side is read off the last
    /// two samples and floored at `min_rate`.
    pub fn from_samples(label: &str, x: Vec<f64>, v: Vec<f64>, min_rate: f64) -> Result<Self> {
        if v.iter().chain(&x).any(|s| !s.is_finite()) {
            return Err(Error::Grid("non-finite potential sample".into()));
        }
        let n = x.len();
        let spline = CubicSpline::new(x.clone(), v.clone())?;
        let rate = |i: usize, j: usize| {
            let (a, b) = (v[i], v[j]);
            let d = (x[j] - x[i]).abs();
            if a != 0.0 && b != 0.0 && a.signum() == b.signum() && b.abs() < a.abs() {
                ((a / b).abs().ln() / d).max(min_rate)
            } else {
                min_rate
            }
        };
        let left = (x[0], v[0], rate(1, 0));
        let right = (x[n - 1], v[n - 1], rate(n - 2, n - 1));
        let vmax = v.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let rho = left.2.min(right.2);
        let reach = x[0].abs().max(x[n - 1].abs());
        Ok(Self {
            label: label.to_string(),
            shape: Shape::Sampled(Box::new(Sampled { spline, left, right })),
            scale: 1.0,
            tail: TailBound::Exponential { amp: vmax * (rho * reach).exp(), rate: rho },
        })
    }

    /// Two-column CSV `(x, V(x))` with increasing `x`; non-numeric rows
    /// (headers) are skipped.
    pub fn from_csv(path: &Path, min_rate: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let (mut xs, mut vs) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() < 2 {
                continue;
            }
            if let (Ok(a), Ok(b)) = (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                xs.push(a);
                vs.push(b);
            }
        }
        let label = format!("sampled({})", path.display());
        Self::from_samples(&label, xs, vs, min_rate)
    }

    /// `s·V`.
    pub fn scaled(mut self, s: f64) -> Result<Self> {
        if !s.is_finite() {
            return Err(invalid("s", "must be finite"));
        }
        self.label = format!("scaled({},{s})", self.label);
        self.scale *= s;
        self.tail = self.tail.scaled(s);
        Ok(self)
    }

    /// Replace the declared tail majorant.
    pub fn with_tail_bound(mut self, tail: TailBound) -> Self {
        self.tail = tail;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tail_bound(&self) -> TailBound {
        self.tail
    }

    pub fn moment_order(&self) -> f64 {
        self.tail.moment_order()
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.shape, Shape::Free) || self.scale == 0.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        let v = match &self.shape {
            Shape::Free => 0.0,
            Shape::PoeschlTeller { l } => {
                let s = 1.0 / x.cosh();
                -l * (l + 1.0) * s * s
            }
            Shape::SquareWell { v0, a } => {
                if x.abs() <= *a {
                    -v0
                } else {
                    0.0
                }
            }
            Shape::GaussianWell { depth, width } => -depth * (-(x / width).powi(2)).exp(),
            Shape::Sampled(s) => {
                if x < s.left.0 {
                    s.left.1 * (-s.left.2 * (s.left.0 - x)).exp()
                } else if x > s.right.0 {
                    s.right.1 * (-s.right.2 * (x - s.right.0)).exp()
                } else {
                    s.spline.eval(x)
                }
            }
        };
        self.scale * v
    }

    /// Points where `V` or its low derivatives jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::SquareWell { a, .. } => vec![-a, *a],
            Shape::Sampled(s) => vec![s.left.0, s.right.0],
            _ => Vec::new(),
        }
    }

    /// Smallest `X ≥ 0` (on a geometric ladder) such that the declared tail
    /// bound gives `∫_{|x|>X} (1+|x|)^σ |V| < tol` on each side.
    pub fn cutoff(&self, sigma: f64, tol: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        if let TailBound::Compact { radius } = self.tail {
            return Ok(radius);
        }
        if sigma >= self.moment_order() {
            return Err(Error::Divergent { tail: f64::INFINITY, tol });
        }
        let mut x = 0.5;
        loop {
            let t = self.tail.tail_integral(x, sigma);
            if t < tol {
                return Ok(x);
            }
            if x > MAX_CUTOFF {
                return Err(Error::Divergent { tail: t, tol });
            }
            x *= 1.05;
        }
    }

    /// `X∞` for the Jost integration: `η±(X∞) < tol` on both sides.
    pub fn x_infinity(&self, tol: f64) -> Result<f64> {
        let x = self.cutoff(0.0, tol)?;
        let eta = self.tail.tail_integral(x, 0.0);
        if eta >= tol {
            return Err(Error::CutoffFailure { x, eta, tol });
        }
        Ok(x.max(1.0))
    }

    /// Integration breakpoints covering `[a, b]`: the ends, interior
    /// discontinuities of `V`, zero, and a geometric ladder for long ranges.
    fn points(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = vec![a, b];
        pts.extend(self.breakpoints().into_iter().filter(|p| *p > a && *p < b));
        if a < 0.0 && b > 0.0 {
            pts.push(0.0);
        }
        let mut r = 1.0;
        while r < a.abs().max(b.abs()) {
            for p in [r, -r] {
                if p > a && p < b {
                    pts.push(p);
                }
            }
            r *= 2.0;
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Quad {
        let pts = self.points(a, b);
        pts.windows(2).fold(Quad { value: 0.0, error: 0.0 }, |acc, w| {
            let q = adaptive(&f, w[0], w[1], 1e-15, 1e-13);
            Quad { value: acc.value + q.value, error: acc.error + q.error }
        })
    }

    fn integrate_gl<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.points(a, b)
            .windows(2)
            .map(|w| gauss_legendre_composite(&f, w[0], w[1], 1e-15, 1e-12).value)
            .sum()
    }

    /// `‖V‖_{L^p_σ}` for `p ∈ {1, ∞}` (pass `f64::INFINITY` for the sup norm).
    pub fn moment_norm(&self, sigma: f64, p: f64) -> Result<f64> {
        if sigma < 0.0 {
            return Err(invalid("sigma", "must be non-negative"));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        let x = self.cutoff(sigma, TAIL_TOL)?;
        let w = |t: f64| (1.0 + t.abs()).powf(sigma) * self.eval(t).abs();
        if p == 1.0 {
            Ok(self.integrate(w, -x, x).value)
        } else if p.is_infinite() {
            let n = ((2.0 * x / 1e-3) as usize).clamp(1000, 2_000_000);
            let h = 2.0 * x / n as f64;
            let grid = (0..=n).map(|i| -x + i as f64 * h).chain(self.breakpoints());
            Ok(grid.map(w).fold(0.0, f64::max))
        } else {
            Err(invalid("p", "only p = 1 and p = ∞ are supported"))
        }
    }

    /// `‖V‖_{L¹_σ}` by composite Gauss–Legendre, independent of [`moment_norm`](Self::moment_norm).
    pub fn moment_norm_crosscheck(&self, sigma: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let x = self.cutoff(sigma, TAIL_TOL)?;
        Ok(self.integrate_gl(|t| (1.0 + t.abs()).powf(sigma) * self.eval(t).abs(), -x, x))
    }

    /// Integration range `[x, end]` (or `[end, x]`) towards `±∞`.
    fn tail_range(&self, x: f64, side: Side, sigma: f64) -> Result<Option<(f64, f64)>> {
        let cut = self.cutoff(sigma, TAIL_TOL)?;
        let s = side.sign();
        if s * x >= cut {
            if matches!(self.tail, TailBound::Compact { .. }) || self.is_zero() {
                return Ok(None);
            }
            // deep in the tail: integrate over a generous stretch past x
            let end = x + s * (cut + 10.0 + x.abs());
            return Ok(Some(if s > 0.0 { (x, end) } else { (end, x) }));
        }
        Ok(Some(if s > 0.0 { (x, cut) } else { (-cut, x) }))
    }

    /// `η±(x) = ±∫_x^{±∞} |V(y)| dy`.
    pub fn eta(&self, x: f64, side: Side) -> Result<f64> {
        Ok(match self.tail_range(x, side, 0.0)? {
            None => 0.0,
            Some((a, b)) => self.integrate(|t| self.eval(t).abs(), a, b).value,
        })
    }

    /// `γ±(x) = ∫_x^{±∞} (y - x)|V(y)| dy`, non-negative on both sides.
    pub fn gamma_moment(&self, x: f64, side: Side) -> Result<f64> {
        Ok(match self.tail_range(x, side, 1.0)? {
            None => 0.0,
            Some((a, b)) => self.integrate(|t| (t - x).abs() * self.eval(t).abs(), a, b).value,
        })
    }

    /// `∫_x^{±∞} V(y) dy` with orientation: `+∫_x^∞ V` or `∫_{-∞}^x V`.
    pub fn signed_tail(&self, x: f64, side: Side) -> Result<f64> {
        Ok(match self.tail_range(x, side, 0.0)? {
            None => 0.0,
            Some((a, b)) => self.integrate(|t| self.eval(t), a, b).value,
        })
    }

    /// `min V`, sampled.
    pub fn min_value(&self) -> Result<f64> {
        let x = self.x_infinity(1e-10)?;
        let n = 20_000;
        let grid = (0..=n).map(|i| -x + 2.0 * x * i as f64 / n as f64).chain(self.breakpoints());
        Ok(grid.map(|t| self.eval(t)).fold(0.0, f64::min))
    }
}

fn invalid(name: &str, reason: &str) -> Error {
    Error::InvalidParameter { name: name.into(), reason: reason.into() }
}

/// First and second moment tails tabulated on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct MomentProfile {
    pub x: Vec<f64>,
    pub eta_plus: Vec<f64>,
    pub eta_minus: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
}

impl MomentProfile {
    pub fn new(v: &Potential, x: &[f64]) -> Result<Self> {
        let tab = |f: &dyn Fn(f64) -> Result<f64>| x.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>();
        Ok(Self {
            x: x.to_vec(),
            eta_plus: tab(&|t| v.eta(t, Side::Plus))?,
            eta_minus: tab(&|t| v.eta(t, Side::Minus))?,
            gamma_plus: tab(&|t| v.gamma_moment(t, Side::Plus))?,
            gamma_minus: tab(&|t| v.gamma_moment(t, Side::Minus))?,
        })
    }
}

/// JSON description of a potential.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PotentialSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub tail_bound: Option<TailBound>,
    /// Wrapped potential for `scaled`.
    #[serde(default)]
    pub inner: Option<Box<PotentialSpec>>,
    /// CSV path for `sampled`.
    #[serde(default)]
    pub path: Option<String>,
}

impl PotentialSpec {
    pub fn named(name: &str) -> Self {
        Self { name: name.into(), params: BTreeMap::new(), tail_bound: None, inner: None, path: None }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn build(&self) -> Result<Potential> {
        let v = if self.name == "scaled" {
            let inner = self.inner.as_ref().ok_or_else(|| Error::Config("`scaled` needs an `inner` potential".into()))?;
            inner.build()?.scaled(self.param("s", 1.0))?
        } else if self.name == "sampled" {
            let path = self.path.as_ref().ok_or_else(|| Error::Config("`sampled` needs a `path`".into()))?;
            Potential::from_csv(Path::new(path), self.param("min_rate", 0.5))?
        } else {
            catalog(&self.name, &self.params)?
        };
        Ok(match self.tail_bound {
            Some(t) => v.with_tail_bound(t),
            None => v,
        })
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }
}

/// Look up a closed-form catalog potential.
pub fn catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<Potential> {
    let p = |k: &str, d: f64| params.get(k).copied().unwrap_or(d);
    let allowed: &[&str] = match name {
        "free" => &[],
        "poeschl_teller" => &["l"],
        "square_well" => &["v0", "a"],
        "gaussian_well" => &["depth", "width"],
        _ => return Err(Error::UnknownPotential(name.to_string())),
    };
    if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(invalid(k, &format!("not a parameter of `{name}`")));
    }
    match name {
        "free" => Ok(Potential::free()),
        "poeschl_teller" => Potential::poeschl_teller(p("l", 1.0)),
        "square_well" => Potential::square_well(p("v0", PI * PI / 4.0), p("a", 1.0)),
        _ => Potential::gaussian_well(p("depth", 1.0), p("width", 1.0)),
    }
}

/// Catalog entries with their expected zero-energy behaviour.
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub properties: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry { name: "free", params: "", properties: "V = 0; resonant with gamma = 1, T = 1, R = 0" },
    CatalogEntry {
        name: "poeschl_teller",
        params: "l (default 1)",
        properties: "V = -l(l+1) sech^2 x; l = 1 is reflectionless, resonant with gamma = -1, one bound state E = -1",
    },
    CatalogEntry {
        name: "square_well",
        params: "v0 (default pi^2/4), a (default 1)",
        properties: "V = -v0 on [-a, a]; resonant iff sqrt(v0)*a is a multiple of pi/2",
    },
    CatalogEntry {
        name: "gaussian_well",
        params: "depth (default 1), width (default 1)",
        properties: "V = -depth exp(-x^2/width^2); generic depths are non-resonant",
    },
    CatalogEntry { name: "scaled", params: "s, inner", properties: "s times the inner potential" },
    CatalogEntry {
        name: "sampled",
        params: "path, min_rate (default 0.5)",
        properties: "two-column CSV, cubic interpolation with exponential tails",
    },
];
