//! Transformation-operator kernels recovered from Jost data.
//!
//! On each side, with `τ = ±y ≥ 0` and `b(τ) = B±(x, ±τ)`,
//! `h±(x,k) - 1 = ∫₀^∞ b(τ) e^{2ikτ} dτ`, hence
//! `b(τ) = (1/π) ∫ (h±(x,k) - 1) e^{-2ikτ} dk`.
//!
//! `b` jumps from 0 to `b(0) = ±∫_x^{±∞} V` at `τ = 0`, so `h - 1` only
//! decays like `1/k`. Before transforming we subtract the exact transform of
//! `m(τ) = a e^{-2λτ} + c e^{-4λτ}` with `m(0) = b(0)` and
//! `m'(0) = b(0)²/2 - V(x)` (the first two coefficients of the large-`k`
//! expansion of `h`). What is left decays like `k⁻³` for smooth `V`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::jost::{compute_h, JostConfig, JostField};
use crate::numeric::filon::filon_richardson;
use crate::potential::{Potential, Side};
use crate::scattering::bound_states;
use crate::wiener::{sample_scattering, symmetric_grid, WienerConfig};

/// Imaginary part of the recovered `B` above which the transform is not trusted.
pub const IMAG_TOL: f64 = 1e-4;
/// Half-width of the band around jumps of `V` left out of the `∂ₓB` bound.
pub const EST11_EXCLUSION: f64 = 0.1;
/// Tolerance on `Φ± = ∓2ikΨ±`.
pub const IDENTITY_TOL: f64 = 1e-4;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    pub k_max: f64,
    pub dk: f64,
    pub taper: f64,
    pub dy: f64,
    /// Defaults to the distance from `x` to the cutoff `X∞`, plus the
    /// `14/λ` the subtracted exponentials need to fall below 1e-12.
    pub tau_max: Option<f64>,
    /// Step of the Richardson difference in `x`.
    pub fd_step: f64,
    pub lambda: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { k_max: 200.0, dk: 0.025, taper: 0.1, dy: 0.01, tau_max: None, fd_step: 1e-4, lambda: 1.0 }
    }
}

/// Analytic pieces of a kernel profile, with `u = τ - at`.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum Term {
    /// `c·e^{-r·u}` for `u ≥ 0`, `c` for `u < 0`.
    Step { c: f64, r: f64, at: f64 },
    /// `c·u·e^{-r·u}` for `u ≥ 0`, zero before.
    Ramp { c: f64, r: f64, at: f64 },
    /// `c·(u²/2)·e^{-r·u}` for `u ≥ 0`, zero before.
    Quad { c: f64, r: f64, at: f64 },
}

impl Term {
    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            Term::Step { c, r, at } => c * (-r * (tau - at).max(0.0)).exp(),
            Term::Ramp { c, r, at } => {
                let u = (tau - at).max(0.0);
                c * u * (-r * u).exp()
            }
            Term::Quad { c, r, at } => {
                let u = (tau - at).max(0.0);
                c * 0.5 * u * u * (-r * u).exp()
            }
        }
    }

    /// `∫₀^∞ term(τ) e^{iωτ} dτ`.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        let iw = Complex64::new(0.0, omega);
        match *self {
            Term::Step { c, r, at } => {
                let e = (iw * at).exp();
                let flat = if at == 0.0 { Complex64::new(0.0, 0.0) } else if omega == 0.0 { Complex64::new(at, 0.0) } else { (e - 1.0) / iw };
                c * (flat + e / (r - iw))
            }
            Term::Ramp { c, r, at } => c * (iw * at).exp() / ((r - iw) * (r - iw)),
            Term::Quad { c, r, at } => c * (iw * at).exp() / ((r - iw) * (r - iw) * (r - iw)),
        }
    }

    /// `∫_τ^∞ term`, valid for `τ ≥ 0`; steps must start at `τ = 0`.
    fn tail(&self) -> Vec<Term> {
        match *self {
            Term::Step { c, r, at } => {
                debug_assert!(at == 0.0, "tail of a delayed step");
                vec![Term::Step { c: c / r, r, at }]
            }
            Term::Ramp { c, r, at } => vec![Term::Ramp { c: c / r, r, at }, Term::Step { c: c / (r * r), r, at }],
            Term::Quad { c, r, at } => vec![
                Term::Quad { c: c / r, r, at },
                Term::Ramp { c: c / (r * r), r, at },
                Term::Step { c: c / (r * r * r), r, at },
            ],
        }
    }

    fn scaled(&self, s: f64) -> Term {
        match *self {
            Term::Step { c, r, at } => Term::Step { c: s * c, r, at },
            Term::Ramp { c, r, at } => Term::Ramp { c: s * c, r, at },
            Term::Quad { c, r, at } => Term::Quad { c: s * c, r, at },
        }
    }
}

/// Sum of analytic [`Term`]s plus `rem(τ)` sampled on `τ_j = j·dy`.
#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    pub terms: Vec<Term>,
    pub dy: f64,
    pub rem: Vec<f64>,
}

impl Profile {
    pub fn model(&self, tau: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(tau)).sum()
    }

    pub fn value(&self, j: usize) -> f64 {
        self.model(j as f64 * self.dy) + self.rem[j]
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.rem.len()).map(|j| self.value(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.rem.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rem.is_empty()
    }

    /// `∫_τ^∞`: exact for the terms; for the remainder (taken as zero beyond
    /// the last sample) a cumulative trapezoid with the Euler–Maclaurin
    /// correction `-h²/12 (f'(τ_max) - f'(τ))`.
    pub fn tail(&self) -> Profile {
        let n = self.rem.len();
        let h = self.dy;
        let f = &self.rem;
        let mut rem = vec![0.0; n];
        if n >= 3 {
            let fp = |j: usize| -> f64 {
                if j == 0 {
                    (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
                } else if j == n - 1 {
                    (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h)
                } else {
                    (f[j + 1] - f[j - 1]) / (2.0 * h)
                }
            };
            let mut trap = 0.0;
            let end = fp(n - 1);
            for j in (0..n - 1).rev() {
                trap += 0.5 * h * (f[j] + f[j + 1]);
                rem[j] = trap - h * h / 12.0 * (end - fp(j));
            }
        }
        Profile { terms: self.terms.iter().flat_map(Term::tail).collect(), dy: self.dy, rem }
    }

    /// `α·self + β·other` on the same grid.
    pub fn combine(&self, alpha: f64, other: &Profile, beta: f64) -> Profile {
        Profile {
            terms: self.terms.iter().map(|t| t.scaled(alpha)).chain(other.terms.iter().map(|t| t.scaled(beta))).collect(),
            dy: self.dy,
            rem: self.rem.iter().zip(&other.rem).map(|(p, q)| alpha * p + beta * q).collect(),
        }
    }

    /// `∫₀^{τ_max} profile(τ) e^{iωτ} dτ`, the terms taken to infinity.
    pub fn fourier(&self, omega: f64) -> Complex64 {
        self.terms.iter().map(|t| t.fourier(omega)).sum::<Complex64>() + filon_richardson(&self.rem, 0.0, self.dy, omega)
    }
}

/// Kernels at one `x`, as functions of `τ = ±y`.
#[derive(Clone, Debug, Serialize)]
pub struct KernelSlice {
    pub x: f64,
    pub b: Profile,
    pub dxb: Profile,
    /// `K±(x,y) = ±∫_y^{±∞} B±(x,z) dz`.
    pub k: Profile,
    /// `D±(x,y) = ±∫_y^{±∞} ∂ₓB±(x,z) dz`.
    pub d: Profile,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelTable {
    pub side: Side,
    pub dy: f64,
    pub slices: Vec<KernelSlice>,
    /// Largest `|Im B|` seen before the real part was taken.
    pub imag_residual: f64,
}

impl KernelTable {
    pub fn slice(&self, x: f64) -> Option<&KernelSlice> {
        self.slices.iter().find(|s| (s.x - x).abs() < 1e-12)
    }

    /// Signed `y` for a slice.
    pub fn y_grid(&self, slice: &KernelSlice) -> Vec<f64> {
        (0..slice.b.len()).map(|j| self.side.sign() * j as f64 * self.dy).collect()
    }
}

/// `x` together with the four Richardson neighbours.
pub fn stencil_points(xs: &[f64], delta: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = xs.iter().flat_map(|&x| [x - 2.0 * delta, x - delta, x, x + delta, x + 2.0 * delta]).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    pts
}

/// `h±` on the symmetric `k` grid at every point the kernels at `xs` need.
/// Negative `k` are solved independently so that `Im B` measures real error.
pub fn kernel_jost(v: &Potential, side: Side, xs: &[f64], cfg: &KernelConfig, jcfg: &JostConfig) -> Result<JostField> {
    compute_h(v, &stencil_points(xs, cfg.fd_step), &symmetric_grid(cfg.k_max, cfg.dk), side, jcfg)
}

/// Offset used to read `V` on either side of a jump.
const SIDE_EPS: f64 = 1e-12;

/// Slope and curvature jumps that a jump of `V` at `p` leaves on the
/// characteristic `τ = ±(p - x)` of `B±(x,·)`, in the direction of growing
/// `τ`. The slope jump is constant along the characteristic; the curvature
/// jump picks up `-J ∫V` over the stretch between `x` and `p`.
struct Jump {
    value: f64,
    slope: f64,
}

fn jump_at(v: &Potential, side: Side, p: f64) -> Jump {
    const H: f64 = 1e-6;
    let s = side.sign();
    let inside = p - s * SIDE_EPS;
    let outside = p + s * SIDE_EPS;
    let d_in = (v.eval(inside) - v.eval(inside - s * H)) / H;
    let d_out = (v.eval(outside + s * H) - v.eval(outside)) / H;
    Jump { value: v.eval(inside) - v.eval(outside), slope: d_in - d_out }
}

/// Ramps with slope jump `c1` and curvature jump `c2`; the `Quad` term also
/// cancels the `-2r·c1` curvature of the plain ramp.
fn kink_terms(c1: f64, c2: f64, r: f64, at: f64) -> [Term; 2] {
    [Term::Ramp { c: c1, r, at }, Term::Quad { c: c2 + 2.0 * r * c1, r, at }]
}

/// Terms matching `b(0)`, `b'(0)` and the kinks of `b` on characteristics.
fn model_terms(v: &Potential, side: Side, x: f64, lambda: f64) -> Result<Vec<Term>> {
    let s = side.sign();
    let b0 = v.signed_tail(x, side)?;
    // V on the side τ grows into, so a jump sitting at x is read correctly
    let b1 = 0.5 * b0 * b0 - v.eval(x + s * SIDE_EPS);
    // a + c = b0, -2λa - 4λc = b1
    let c = -(b1 / lambda + 2.0 * b0) / 2.0;
    let mut terms = vec![Term::Step { c: b0 - c, r: 2.0 * lambda, at: 0.0 }, Term::Step { c, r: 4.0 * lambda, at: 0.0 }];
    for p in v.breakpoints() {
        let at = s * (p - x);
        if at > 0.0 {
            let j = jump_at(v, side, p);
            let stretch = b0 - v.signed_tail(p, side)?;
            terms.extend(kink_terms(j.value, j.slope - j.value * stretch, 2.0 * lambda, at));
        }
    }
    Ok(terms)
}

fn terms_hat(terms: &[Term], k: f64) -> Complex64 {
    terms.iter().map(|t| t.fourier(2.0 * k)).sum()
}

fn raised_cosine(j: usize, n: usize, frac: f64) -> f64 {
    let edge = ((n as f64) * frac).max(1.0);
    let d = j.min(n - 1 - j) as f64;
    if d >= edge {
        1.0
    } else {
        0.5 * (1.0 - (PI * d / edge).cos())
    }
}

fn check_symmetric(k: &[f64]) -> Result<f64> {
    let n = k.len();
    if n < 5 || n % 2 == 0 {
        return Err(Error::Grid("kernel transforms need an odd, symmetric k grid".into()));
    }
    let dk = k[1] - k[0];
    if (k[0] + k[n - 1]).abs() > 1e-9 * dk || k.windows(2).any(|w| ((w[1] - w[0]) - dk).abs() > 1e-9 * dk) {
        return Err(Error::Grid("kernel transforms need a uniform k grid symmetric about 0".into()));
    }
    Ok(dk)
}

/// `(1/π) Σ w_j r_j e^{-2ik_jτ} δk` on `τ = 0, dy, …`; returns the real part
/// and the largest imaginary part.
fn inverse(k: &[f64], r: &[Complex64], taper: f64, dy: f64, n: usize) -> (Vec<f64>, f64) {
    let dk = k[1] - k[0];
    let m = k.len();
    let wr: Vec<Complex64> = r.iter().enumerate().map(|(j, z)| z * raised_cosine(j, m, taper) * dk / PI).collect();
    let mut out = Vec::with_capacity(n);
    let mut imag = 0.0f64;
    for i in 0..n {
        let tau = i as f64 * dy;
        let step = Complex64::new(0.0, -2.0 * dk * tau).exp();
        let mut phase = Complex64::new(0.0, -2.0 * k[0] * tau).exp();
        let mut sum = Complex64::new(0.0, 0.0);
        for (j, w) in wr.iter().enumerate() {
            sum += w * phase;
            phase *= step;
            if j % 256 == 255 {
                phase = Complex64::new(0.0, -2.0 * k[j + 1] * tau).exp();
            }
        }
        out.push(sum.re);
        imag = imag.max(sum.im.abs());
    }
    (out, imag)
}

/// Weights on `x + {-2,-1,0,1,2}δ` for `∂ₓ`: the central fourth-order
/// stencil, or a one-sided second-order one when a jump of `V` lies inside
/// it (preferring the side `dir`, the one `B` looks into).
fn stencil_weights(jumps: &[f64], x: f64, dir: f64, delta: f64) -> [f64; 5] {
    let near = |p: f64| (p - x).abs() < 2.0 * delta * (1.0 + 1e-9);
    if !jumps.iter().any(|&p| near(p)) {
        return [1.0, -8.0, 0.0, 8.0, -1.0].map(|w| w / (12.0 * delta));
    }
    // a jump strictly inside the preferred half forces the other one
    let blocked = |d: f64| jumps.iter().any(|&p| near(p) && d * (p - x) > 1e-12);
    let d = if blocked(dir) { -dir } else { dir };
    let w = if d > 0.0 { [0.0, 0.0, -3.0, 4.0, -1.0] } else { [1.0, -4.0, 3.0, 0.0, 0.0] };
    w.map(|w| w / (2.0 * delta))
}

/// `B±`, `∂ₓB±`, `K±`, `D±` at each `x` of `xs`; `jf` must come from
/// [`kernel_jost`] (or contain the same stencil).
pub fn b_kernel(v: &Potential, jf: &JostField, xs: &[f64], cfg: &KernelConfig) -> Result<KernelTable> {
    check_symmetric(&jf.k_grid)?;
    let side = jf.side;
    let s = side.sign();
    let x_inf = v.x_infinity(1e-12)?;
    let delta = cfg.fd_step;
    let mut slices = Vec::with_capacity(xs.len());
    let mut imag_residual = 0.0f64;
    for &x in xs {
        let tau_max = cfg.tau_max.unwrap_or((x_inf - s * x).max(0.0) + 14.0 / cfg.lambda);
        let n = 2 * ((tau_max / cfg.dy / 2.0).ceil() as usize) + 1;
        let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let weights = stencil_weights(&v.breakpoints(), x, s, delta);
        let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(5);
        let mut models = Vec::with_capacity(5);
        for o in offsets {
            let xo = x + o * delta;
            let ix = jf.x_index(xo).ok_or_else(|| Error::Grid(format!("Jost field lacks x = {xo}")))?;
            let terms = model_terms(v, side, xo, cfg.lambda)?;
            rows.push(jf.k_grid.iter().enumerate().map(|(ik, &k)| jf.h(ik, ix) - 1.0 - terms_hat(&terms, k)).collect());
            models.push(terms);
        }
        let d_rows: Vec<Complex64> =
            (0..jf.k_grid.len()).map(|ik| (0..5).map(|r| weights[r] * rows[r][ik]).sum()).collect();
        let d_terms: Vec<Term> =
            (0..5).filter(|&r| weights[r] != 0.0).flat_map(|r| models[r].iter().map(move |t| t.scaled(weights[r]))).collect();

        let (rem_b, im_b) = inverse(&jf.k_grid, &rows[2], cfg.taper, cfg.dy, n);
        let (rem_d, _) = inverse(&jf.k_grid, &d_rows, cfg.taper, cfg.dy, n);
        imag_residual = imag_residual.max(im_b);
        let b = Profile { terms: models.swap_remove(2), dy: cfg.dy, rem: rem_b };
        let dxb = Profile { terms: d_terms, dy: cfg.dy, rem: rem_d };
        let (k, d) = (b.tail(), dxb.tail());
        slices.push(KernelSlice { x, b, dxb, k, d });
    }
    if imag_residual > IMAG_TOL {
        return Err(Error::Residual { what: "imaginary part of B".into(), value: imag_residual, tol: IMAG_TOL });
    }
    Ok(KernelTable { side, dy: cfg.dy, slices, imag_residual })
}

/// `max |h(x,k) - 1 - ∫ b(τ) e^{2ikτ} dτ|` over `|k| ≤ k_check`.
pub fn round_trip(kt: &KernelTable, jf: &JostField, k_check: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for sl in &kt.slices {
        let ix = jf.x_index(sl.x).ok_or_else(|| Error::Grid(format!("Jost field lacks x = {}", sl.x)))?;
        for (ik, &k) in jf.k_grid.iter().enumerate() {
            if k.abs() <= k_check {
                worst = worst.max((jf.h(ik, ix) - 1.0 - sl.b.fourier(2.0 * k)).norm());
            }
        }
    }
    Ok(worst)
}

/// Outcome of checking a pointwise bound `|lhs| ≤ rhs` on a kernel table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BoundCheck {
    /// `max |lhs| / rhs` over points where `rhs` exceeds the tolerance.
    pub max_ratio: f64,
    /// `max (|lhs| - rhs - tol·(1 + rhs))`; the bound holds iff this is `≤ 0`.
    pub max_excess: f64,
    pub worst_x: f64,
    pub worst_y: f64,
    pub points: usize,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.max_excess <= 0.0
    }

    fn new() -> Self {
        Self { max_ratio: 0.0, max_excess: f64::NEG_INFINITY, worst_x: f64::NAN, worst_y: f64::NAN, points: 0 }
    }

    fn add(&mut self, x: f64, y: f64, lhs: f64, rhs: f64, tol: f64) {
        self.points += 1;
        if rhs > tol {
            self.max_ratio = self.max_ratio.max(lhs / rhs);
        }
        let excess = lhs - rhs - tol * (1.0 + rhs);
        if excess > self.max_excess {
            self.max_excess = excess;
            self.worst_x = x;
            self.worst_y = y;
        }
    }
}

/// `|B±(x,y)| ≤ e^{γ±(x)} η±(x+y)`.
pub fn est1_check(v: &Potential, kt: &KernelTable, tol: f64) -> Result<BoundCheck> {
    let mut chk = BoundCheck::new();
    for sl in &kt.slices {
        let eg = v.gamma_moment(sl.x, kt.side)?.exp();
        for (j, y) in kt.y_grid(sl).into_iter().enumerate() {
            chk.add(sl.x, y, sl.b.value(j).abs(), eg * v.eta(sl.x + y, kt.side)?, tol);
        }
    }
    Ok(chk)
}

/// `|∂ₓB±(x,y) ± V(x+y)| ≤ 2 e^{γ±(x)} η±(x+y) η±(x)`, skipping points with
/// `x + y` within `exclusion` of a jump of `V` (where the truncated transform
/// of the differenced remainder still rings; [`EST11_EXCLUSION`] suffices at
/// the default resolution).
pub fn est11_check(v: &Potential, kt: &KernelTable, tol: f64, exclusion: f64) -> Result<BoundCheck> {
    let s = kt.side.sign();
    let jumps = v.breakpoints();
    let mut chk = BoundCheck::new();
    for sl in &kt.slices {
        let eg = v.gamma_moment(sl.x, kt.side)?.exp();
        let eta_x = v.eta(sl.x, kt.side)?;
        for (j, y) in kt.y_grid(sl).into_iter().enumerate() {
            let z = sl.x + y;
            if j == 0 || jumps.iter().any(|p| (p - z).abs() < exclusion) {
                continue;
            }
            let lhs = (sl.dxb.value(j) + s * v.eval(z)).abs();
            chk.add(sl.x, y, lhs, 2.0 * eg * v.eta(z, kt.side)? * eta_x, tol);
        }
    }
    Ok(chk)
}

#[derive(Clone, Debug, Serialize)]
pub struct ResonanceFunctionals {
    pub side: Side,
    /// `H±` on `±y ≥ 0` at spacing `dy`.
    pub h: Profile,
    pub h0: f64,
    pub hp0: f64,
    /// Grid maximum of `|H±(y)|/η±(y)` over `η±(y) > 1e-4·η±(0)`.
    pub c_hat: f64,
    pub k: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub phi: Vec<Complex64>,
    /// `max_k |Φ± ± 2ikΨ±|`.
    pub identity_residual: f64,
    /// The same with `+2ikΨ±` on both sides; nonzero on the `+` side.
    pub unsigned_residual: f64,
}

/// `H± = D± h±(0) - K± h'±(0)` from the `x = 0` slice, `Ψ±` by quadrature and
/// `Φ±(k) = h±(k) h'±(0) - h'±(k) h±(0)` straight from the Jost field, for
/// `0 ≤ k ≤ k_check`.
pub fn resonance_functionals(v: &Potential, kt: &KernelTable, jf: &JostField, k_check: f64) -> Result<ResonanceFunctionals> {
    let side = kt.side;
    let s = side.sign();
    let sl = kt.slice(0.0).ok_or_else(|| Error::Grid("kernel table lacks x = 0".into()))?;
    let ix = jf.x_index(0.0).ok_or_else(|| Error::Grid("Jost field lacks x = 0".into()))?;
    let k0 = jf.k_index(0.0).ok_or_else(|| Error::Grid("Jost field lacks k = 0".into()))?;
    let (h0, hp0) = (jf.h(k0, ix).re, jf.hp(k0, ix).re);
    let h = sl.d.combine(h0, &sl.k, -hp0);

    let eta0 = v.eta(0.0, side)?;
    let mut c_hat = 0.0f64;
    for j in 0..h.len() {
        let e = v.eta(s * j as f64 * h.dy, side)?;
        if e > 1e-4 * eta0 && e > 0.0 {
            c_hat = c_hat.max(h.value(j).abs() / e);
        }
    }

    let (mut k, mut psi, mut phi) = (Vec::new(), Vec::new(), Vec::new());
    let (mut identity_residual, mut unsigned_residual) = (0.0f64, 0.0f64);
    for (ik, &kk) in jf.k_grid.iter().enumerate() {
        if !(0.0..=k_check).contains(&kk) {
            continue;
        }
        let ps = s * h.fourier(2.0 * kk);
        let ph = jf.h(ik, ix) * hp0 - jf.hp(ik, ix) * h0;
        let two_ik = Complex64::new(0.0, 2.0 * kk);
        identity_residual = identity_residual.max((ph + s * two_ik * ps).norm());
        unsigned_residual = unsigned_residual.max((ph - two_ik * ps).norm());
        k.push(kk);
        psi.push(ps);
        phi.push(ph);
    }
    if identity_residual > IDENTITY_TOL {
        return Err(Error::Residual { what: "Φ = ∓2ikΨ".into(), value: identity_residual, tol: IDENTITY_TOL });
    }
    Ok(ResonanceFunctionals { side, h, h0, hp0, c_hat, k, psi, phi, identity_residual, unsigned_residual })
}

/// `F±(s) = (1/π) ∫ R±(k) e^{±2iks} dk + 2 Σ m±² e^{∓2κs}` with
/// `m±² = (∫ f±(x,iκ)² dx)^{-1}`.
///
/// A jump of `V` at `p` puts a kink into `F±` at `s = p`; ramps carrying its
/// slope and curvature jumps are taken out of `R±` before the truncated
/// transform and added back exactly.
#[derive(Clone, Debug, Serialize)]
pub struct MarchenkoF {
    pub side: Side,
    pub k: Vec<f64>,
    pub r: Vec<Complex64>,
    /// `(κ, m²)` per bound state.
    pub bound: Vec<(f64, f64)>,
    /// Ramps in the variable `±s`.
    pub ramps: Vec<Term>,
    pub taper: f64,
}

/// Largest `|R|` tolerated on the tapered edge of the `k` window.
pub const F_EDGE_TOL: f64 = 1e-3;

impl MarchenkoF {
    /// `∫ ramp(s) e^{∓2iks} ds`.
    fn ramp_hat(&self, k: f64) -> Complex64 {
        self.ramps
            .iter()
            .map(|t| match *t {
                Term::Ramp { c, r, at } => {
                    let z = Complex64::new(r, 2.0 * k);
                    c * Complex64::new(0.0, -2.0 * k * at).exp() / (z * z)
                }
                Term::Quad { c, r, at } => {
                    let z = Complex64::new(r, 2.0 * k);
                    c * Complex64::new(0.0, -2.0 * k * at).exp() / (z * z * z)
                }
                Term::Step { .. } => unreachable!("F carries ramps only"),
            })
            .sum::<Complex64>()
    }

    /// `F` on `s₀ + j·ds`, `j < n`.
    pub fn grid(&self, s0: f64, ds: f64, n: usize) -> Vec<f64> {
        let sg = self.side.sign();
        let dk = self.k[1] - self.k[0];
        let m = self.k.len();
        let wr: Vec<Complex64> = self
            .r
            .iter()
            .zip(&self.k)
            .enumerate()
            .map(|(j, (z, &k))| (z - self.ramp_hat(k)) * raised_cosine(j, m, self.taper) * dk / PI)
            .collect();
        (0..n)
            .map(|i| {
                let s = s0 + i as f64 * ds;
                let step = Complex64::new(0.0, 2.0 * sg * dk * s).exp();
                let mut phase = Complex64::new(0.0, 2.0 * sg * self.k[0] * s).exp();
                let mut sum = Complex64::new(0.0, 0.0);
                for (j, w) in wr.iter().enumerate() {
                    sum += w * phase;
                    phase *= step;
                    if j % 256 == 255 {
                        phase = Complex64::new(0.0, 2.0 * sg * self.k[j + 1] * s).exp();
                    }
                }
                let ramps: f64 = self.ramps.iter().map(|t| t.eval(sg * s)).sum();
                let bound: f64 = self.bound.iter().map(|&(kap, m2)| 2.0 * m2 * (-2.0 * sg * kap * s).exp()).sum();
                sum.re + ramps + bound
            })
            .collect()
    }
}

pub fn marchenko_f(v: &Potential, side: Side, cfg: &KernelConfig, jcfg: &JostConfig) -> Result<MarchenkoF> {
    let wc = WienerConfig { k_max: cfg.k_max, dk: cfg.dk, taper: cfg.taper, ..WienerConfig::default() };
    let s = sample_scattering(v, &wc, jcfg)?;
    let r = match side {
        Side::Plus => s.r_plus,
        Side::Minus => s.r_minus,
    };
    let edge = (r.len() as f64 * cfg.taper) as usize;
    let edge_max = r[..edge].iter().chain(&r[r.len() - edge..]).map(|z| z.norm()).fold(0.0, f64::max);
    if edge_max > F_EDGE_TOL {
        return Err(Error::Residual { what: "reflection coefficient on the window edge".into(), value: edge_max, tol: F_EDGE_TOL });
    }
    let bound = bound_states(v, None, &[], jcfg)?
        .states
        .iter()
        .map(|b| (b.kappa, if side == Side::Plus { b.norming_plus } else { b.norming_minus }))
        .collect();
    let sg = side.sign();
    let mut ramps = Vec::new();
    for p in v.breakpoints() {
        let j = jump_at(v, side, p);
        let tail = v.signed_tail(p, side)?;
        ramps.extend(kink_terms(-j.value, -j.slope - j.value * tail, 2.0 * cfg.lambda, sg * p));
    }
    Ok(MarchenkoF { side, k: s.k, r, bound, ramps, taper: cfg.taper })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GlmResidual {
    pub max: f64,
    pub worst_x: f64,
    pub worst_y: f64,
}

/// `F±(x+y) + B±(x,y) ± ∫₀^{±∞} B±(x,t) F±(x+y+t) dt` on the table grid.
/// The integral is split where `B` or `F` has a kink and each piece done by
/// Simpson's rule.
pub fn glm_residual(v: &Potential, kt: &KernelTable, f: &MarchenkoF) -> Result<GlmResidual> {
    if f.side != kt.side {
        return Err(Error::InvalidParameter { name: "side".into(), reason: "F and B belong to different sides".into() });
    }
    let s = kt.side.sign();
    let jumps = v.breakpoints();
    let mut out = GlmResidual { max: 0.0, worst_x: f64::NAN, worst_y: f64::NAN };
    for sl in &kt.slices {
        let b = sl.b.values();
        let n = b.len();
        let fs = f.grid(sl.x, s * kt.dy, 2 * n - 1);
        let kinks: Vec<f64> = jumps.iter().map(|p| s * (p - sl.x) / kt.dy).filter(|&m| m > 0.0).collect();
        for i in 0..n {
            let integrand: Vec<f64> = (0..n).map(|j| b[j] * fs[i + j]).collect();
            let cuts: Vec<usize> = kinks
                .iter()
                .flat_map(|&m| [m, m - i as f64])
                .filter(|&m| m > 0.0 && m < (n - 1) as f64)
                .map(|m| m.round() as usize)
                .collect();
            let r = (fs[i] + b[i] + simpson_split(kt.dy, &integrand, cuts)).abs();
            if r > out.max {
                out = GlmResidual { max: r, worst_x: sl.x, worst_y: s * i as f64 * kt.dy };
            }
        }
    }
    Ok(out)
}

/// Composite Simpson on each piece between cut nodes, closing odd pieces
/// with the 3/8 rule.
fn simpson_split(h: f64, y: &[f64], mut cuts: Vec<usize>) -> f64 {
    let n = y.len() - 1;
    cuts.push(0);
    cuts.push(n);
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2).map(|w| piece(h, &y[w[0]..=w[1]])).sum()
}

fn piece(h: f64, y: &[f64]) -> f64 {
    let n = y.len() - 1;
    match n {
        0 => 0.0,
        1 => 0.5 * h * (y[0] + y[1]),
        _ if n % 2 == 0 => {
            let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 * y[i] } else { 2.0 * y[i] }).sum();
            h / 3.0 * (y[0] + y[n] + inner)
        }
        _ => piece(h, &y[..=n - 3]) + 3.0 * h / 8.0 * (y[n - 3] + 3.0 * y[n - 2] + 3.0 * y[n - 1] + y[n]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> KernelConfig {
        KernelConfig { k_max: 100.0, dk: 0.05, dy: 0.02, ..KernelConfig::default() }
    }

    fn table(v: &Potential, side: Side, xs: &[f64], cfg: &KernelConfig) -> (KernelTable, JostField) {
        let jf = kernel_jost(v, side, xs, cfg, &JostConfig::default()).unwrap();
        (b_kernel(v, &jf, xs, cfg).unwrap(), jf)
    }

    #[test]
    fn free_kernels_vanish() {
        let v = Potential::free();
        let (kt, jf) = table(&v, Side::Plus, &[0.0], &small());
        let sl = &kt.slices[0];
        assert!(sl.b.values().iter().chain(&sl.k.values()).chain(&sl.d.values()).all(|&z| z == 0.0));
        let rf = resonance_functionals(&v, &kt, &jf, 5.0).unwrap();
        assert!(rf.psi.iter().chain(&rf.phi).all(|z| z.norm() == 0.0));
        assert_eq!(rf.c_hat, 0.0);
    }

    #[test]
    fn poeschl_teller_closed_form() {
        // B₊(x,y) = -2(1 - tanh x) e^{-2y}, ∂ₓB₊ = 2 sech²x e^{-2y}; B₋ by reflection
        let v = Potential::poeschl_teller(1.0).unwrap();
        let cfg = small();
        for side in [Side::Plus, Side::Minus] {
            let s = side.sign();
            let (kt, _) = table(&v, side, &[0.0, s * 1.0], &cfg);
            for sl in &kt.slices {
                let xs = s * sl.x;
                for j in (0..sl.b.len()).step_by(7) {
                    let tau = j as f64 * cfg.dy;
                    let b = -2.0 * (1.0 - xs.tanh()) * (-2.0 * tau).exp();
                    let db = s * 2.0 / xs.cosh().powi(2) * (-2.0 * tau).exp();
                    assert!((sl.b.value(j) - b).abs() < 1e-7, "{side:?} x={} τ={tau}", sl.x);
                    assert!((sl.dxb.value(j) - db).abs() < 1e-5);
                    assert!((sl.k.value(j) - b / 2.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn slice_on_the_jump_of_the_well() {
        // x = a: B₊(a,·) and ∂ₓB₊(a,·) (one-sided, from the right) vanish for y > 0
        let v = Potential::resonant_square_well();
        let (kt, jf) = table(&v, Side::Plus, &[1.0], &small());
        let sl = &kt.slices[0];
        for j in 1..sl.b.len() {
            assert!(sl.b.value(j).abs() < 1e-8 && sl.dxb.value(j).abs() < 1e-8, "j={j}");
        }
        assert!(sl.b.value(0).abs() < 1e-6);
        assert!(est1_check(&v, &kt, 1e-6).unwrap().holds());
        assert!(round_trip(&kt, &jf, 10.0).unwrap() < 1e-6);
    }

    #[test]
    fn square_well_kernels_live_inside_the_well() {
        let v = Potential::resonant_square_well();
        let cfg = small();
        let (kt, jf) = table(&v, Side::Plus, &[0.0, 0.5], &cfg);
        for sl in &kt.slices {
            for (j, y) in kt.y_grid(sl).into_iter().enumerate() {
                if sl.x + y > 1.1 {
                    assert!(sl.b.value(j).abs() < 1e-4 && sl.k.value(j).abs() < 1e-4, "x={} y={y}", sl.x);
                }
            }
        }
        assert!(round_trip(&kt, &jf, 10.0).unwrap() < 1e-6);
    }

    #[test]
    fn phi_psi_identity_and_glm_for_poeschl_teller() {
        let v = Potential::poeschl_teller(1.0).unwrap();
        let cfg = small();
        let (kt, jf) = table(&v, Side::Plus, &[0.0], &cfg);
        let rf = resonance_functionals(&v, &kt, &jf, 10.0).unwrap();
        assert!(rf.identity_residual < 1e-6);
        // H₊(y) = e^{-2y}, η₊(y) = 2(1 - tanh y)
        assert!((rf.h.value(50) - (-2.0f64).exp()).abs() < 1e-6);
        let f = marchenko_f(&v, Side::Plus, &cfg, &JostConfig::default()).unwrap();
        assert_eq!(f.bound.len(), 1);
        assert!((f.bound[0].1 - 2.0).abs() < 1e-6);
        assert!(glm_residual(&v, &kt, &f).unwrap().max < 1e-5);
    }

    #[test]
    fn stencil_is_sorted_and_unique() {
        let p = stencil_points(&[0.0, 1e-4], 1e-4);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p.len(), 6);
    }
}
