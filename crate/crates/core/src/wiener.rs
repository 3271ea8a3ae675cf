//! Numerical Wiener-algebra norms.
//!
//! A function `f(k) = c + ∫ e^{ikp} ĝ(p) dp` is sampled on a uniform
//! symmetric grid, `f - c` is tapered and transformed, and
//! `‖ĝ‖_{L¹} ≈ δp Σ|ĝ(p_m)|`. Membership in the algebra is not decidable from
//! samples; the proxy is that the `p`-window mass converges, i.e. the mass on
//! `|p| ≤ P` exceeds the mass on `|p| ≤ P/2` by less than 5%.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jost::{compute_h, JostConfig};
use crate::numeric::quad::adaptive;
use crate::potential::{Potential, Side};
use crate::scattering::{classify_resonance, scattering_matrix, wronskians, ResonanceReport};

/// van der Corput constant bound `C₂ ≤ 2^{8/3}`.
pub const VDC_CONSTANT: f64 = 6.349_604_207_872_798;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct WienerConfig {
    pub k_max: f64,
    pub dk: f64,
    /// Fraction of the window (on each end) under the raised-cosine taper.
    pub taper: f64,
    /// Allowed relative growth when the `p`-window doubles.
    pub growth_tol: f64,
    /// Pointwise accuracy of the samples; masses below the matching noise
    /// floor count as an identically zero function.
    pub sample_noise: f64,
}

impl Default for WienerConfig {
    fn default() -> Self {
        Self { k_max: 60.0, dk: 0.005, taper: 0.1, growth_tol: 0.05, sample_noise: 1e-10 }
    }
}

impl WienerConfig {
    /// `[-K, K]` with spacing `δk`, always containing `k = 0`.
    pub fn grid(&self) -> Vec<f64> {
        symmetric_grid(self.k_max, self.dk)
    }

    /// Mass of white noise of size `sample_noise` on `n` points after an
    /// order-`l` difference stencil.
    pub fn noise_floor(&self, n: usize, l: usize) -> f64 {
        const GAIN: [f64; 4] = [1.0, 1.5, 64.0 / 12.0, 5.5];
        self.sample_noise * (n as f64).sqrt() * GAIN[l.min(3)] / self.dk.powi(l as i32)
    }
}

pub fn symmetric_grid(k_max: f64, dk: f64) -> Vec<f64> {
    let n = (k_max / dk).round() as i64;
    (-n..=n).map(|j| j as f64 * dk).collect()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WienerEstimate {
    pub constant_part: Complex64,
    pub hat_l1: f64,
    /// Share of `hat_l1` carried by `P/2 < |p| ≤ P`.
    pub tail_fraction: f64,
    pub converged: bool,
}

impl WienerEstimate {
    /// `|c| + ‖ĝ‖_{L¹}`.
    pub fn a1_norm(&self) -> f64 {
        self.constant_part.norm() + self.hat_l1
    }
}

fn check_grid(k: &[f64], n: usize) -> Result<f64> {
    if k.len() != n || n < 5 {
        return Err(Error::Grid("samples and grid differ in length (or fewer than 5)".into()));
    }
    let dk = k[1] - k[0];
    let uniform = k.windows(2).all(|w| ((w[1] - w[0]) - dk).abs() < 1e-9 * dk);
    if !uniform || (k[0] + k[n - 1]).abs() > 1e-9 * dk || dk <= 0.0 {
        return Err(Error::Grid("Wiener estimates need a uniform grid symmetric about 0".into()));
    }
    Ok(dk)
}

fn raised_cosine(j: usize, n: usize, frac: f64) -> f64 {
    let edge = ((n as f64) * frac).max(1.0);
    let d = j.min(n - 1 - j) as f64;
    if d >= edge {
        1.0
    } else {
        0.5 * (1.0 - (std::f64::consts::PI * d / edge).cos())
    }
}

/// `𝒜₁` decomposition of samples `f` on a symmetric grid `k`.
pub fn a_norm(k: &[f64], f: &[Complex64], limit_at_infinity: Complex64, cfg: &WienerConfig) -> Result<WienerEstimate> {
    a_norm_with_floor(k, f, limit_at_infinity, cfg, cfg.noise_floor(f.len(), 0))
}

fn a_norm_with_floor(
    k: &[f64],
    f: &[Complex64],
    limit_at_infinity: Complex64,
    cfg: &WienerConfig,
    floor: f64,
) -> Result<WienerEstimate> {
    let n = f.len();
    check_grid(k, n)?;
    let m = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..n {
        buf[j] = (f[j] - limit_at_infinity) * raised_cosine(j, n, cfg.taper);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    // ĝ(p_m) = (δk/2π) Σ g_j e^{-ik_j p_m} and δp = 2π/(M δk), so δp|ĝ| = |X_m|/M
    let (mut full, mut half) = (0.0, 0.0);
    for (i, x) in buf.iter().enumerate() {
        let idx = if i < m / 2 { i } else { m - i };
        let a = x.norm() / m as f64;
        full += a;
        if idx <= m / 4 {
            half += a;
        }
    }
    let tail_fraction = if full > 0.0 { (full - half) / full } else { 0.0 };
    let growth = if half > 0.0 { full / half - 1.0 } else { 0.0 };
    Ok(WienerEstimate { constant_part: limit_at_infinity, hat_l1: full, tail_fraction, converged: full < floor || growth < cfg.growth_tol })
}

/// Fourth-order central difference of order `l ∈ {1,2,3}`; the result lives
/// on the grid shrunk by three points at each end.
pub fn derivative(f: &[Complex64], h: f64, l: usize) -> Result<Vec<Complex64>> {
    let n = f.len();
    if n < 7 {
        return Err(Error::Grid("need at least 7 samples to differentiate".into()));
    }
    let d = |j: usize| -> Complex64 {
        let g = |o: i64| f[(j as i64 + o) as usize];
        match l {
            1 => (-g(2) + 8.0 * g(1) - 8.0 * g(-1) + g(-2)) / (12.0 * h),
            2 => (-g(2) + 16.0 * g(1) - 30.0 * g(0) + 16.0 * g(-1) - g(-2)) / (12.0 * h * h),
            _ => (-g(3) + 8.0 * g(2) - 13.0 * g(1) + 13.0 * g(-1) - 8.0 * g(-2) + g(-3)) / (8.0 * h * h * h),
        }
    };
    if !(1..=3).contains(&l) {
        return Err(Error::InvalidParameter { name: "order".into(), reason: "derivatives of order 1..=3 only".into() });
    }
    Ok((3..n - 3).map(d).collect())
}

/// Estimates for `dˡ/dkˡ f`, `l = 0..=max_order`; `l = 0` subtracts `c`.
pub fn derivative_a_norms(
    k: &[f64],
    f: &[Complex64],
    max_order: usize,
    limit_at_infinity: Complex64,
    cfg: &WienerConfig,
) -> Result<Vec<WienerEstimate>> {
    let h = check_grid(k, f.len())?;
    let mut out = vec![a_norm(k, f, limit_at_infinity, cfg)?];
    for l in 1..=max_order {
        let d = derivative(f, h, l)?;
        let floor = cfg.noise_floor(d.len(), l);
        out.push(a_norm_with_floor(&k[3..k.len() - 3], &d, Complex64::new(0.0, 0.0), cfg, floor)?);
    }
    Ok(out)
}

/// `(f(k) - f₀)/k`, with the derivative at `k = 0`.
pub fn difference_quotient(k: &[f64], f: &[Complex64], f0: Complex64) -> Result<Vec<Complex64>> {
    let h = check_grid(k, f.len())?;
    let i0 = k.len() / 2;
    let mut q: Vec<Complex64> = k.iter().zip(f).map(|(&kk, &v)| if kk == 0.0 { v } else { (v - f0) / kk }).collect();
    if i0 < 2 || i0 + 2 >= k.len() {
        return Err(Error::Grid("k = 0 needs two neighbours on each side".into()));
    }
    q[i0] = (-f[i0 + 2] + 8.0 * f[i0 + 1] - 8.0 * f[i0 - 1] + f[i0 - 2]) / (12.0 * h);
    Ok(q)
}

pub fn difference_quotient_norm(
    k: &[f64],
    f: &[Complex64],
    f0: Complex64,
    limit_at_infinity: Complex64,
    cfg: &WienerConfig,
) -> Result<WienerEstimate> {
    // division by k near 0 amplifies noise like a first difference
    a_norm_with_floor(k, &difference_quotient(k, f, f0)?, limit_at_infinity, cfg, cfg.noise_floor(f.len(), 1))
}

/// `‖f‖_{𝒜₁}` for a closure, sampled on the configured grid.
pub fn a1_norm_of<F: Fn(f64) -> Complex64>(f: F, limit_at_infinity: Complex64, cfg: &WienerConfig) -> Result<WienerEstimate> {
    let k = cfg.grid();
    let s: Vec<Complex64> = k.iter().map(|&x| f(x)).collect();
    a_norm(&k, &s, limit_at_infinity, cfg)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VdcResult {
    pub integral: Complex64,
    pub bound: f64,
    pub ratio: f64,
    pub min_phi2: f64,
}

/// `I(t) = ∫_a^b e^{itφ(k)} f(k) dk` against `C₂ (t min|φ''|)^{-1/2} ‖f‖_{𝒜₁}`.
pub fn vdc_check<P, F>(phi: P, f: F, a: f64, b: f64, t: f64, f_a1_norm: f64) -> Result<VdcResult>
where
    P: Fn(f64) -> f64,
    F: Fn(f64) -> Complex64,
{
    if t < 1.0 || b <= a {
        return Err(Error::InvalidParameter { name: "t".into(), reason: "need t ≥ 1 and a < b".into() });
    }
    let samples = 2000;
    let h = 1e-4 * (b - a);
    let (mut min_phi2, mut max_phi1) = (f64::INFINITY, 0.0f64);
    for i in 0..=samples {
        let x = (a + (b - a) * i as f64 / samples as f64).clamp(a + h, b - h);
        let (lo, mid, hi) = (phi(x - h), phi(x), phi(x + h));
        min_phi2 = min_phi2.min(((hi - 2.0 * mid + lo) / (h * h)).abs());
        max_phi1 = max_phi1.max(((hi - lo) / (2.0 * h)).abs());
    }
    if min_phi2 < 1e-8 {
        return Err(Error::Degenerate("phase has a vanishing second derivative".into()));
    }
    // panels across which t·φ turns by at most about π
    let panels = ((t * max_phi1 * (b - a) / std::f64::consts::PI).ceil() as usize).max(8);
    let w = (b - a) / panels as f64;
    let mut integral = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for p in 0..panels {
        let (lo, hi) = (a + p as f64 * w, a + (p + 1) as f64 * w);
        let g = |x: f64| Complex64::new(0.0, t * phi(x)).exp() * f(x);
        let re = adaptive(|x| g(x).re, lo, hi, 1e-14, 1e-12);
        let im = adaptive(|x| g(x).im, lo, hi, 1e-14, 1e-12);
        integral += Complex64::new(re.value, im.value);
        err += re.error + im.error;
    }
    if !(err < 1e-6 * (1.0 + integral.norm())) {
        return Err(Error::Residual { what: "oscillatory quadrature error".into(), value: err, tol: 1e-6 });
    }
    let bound = VDC_CONSTANT * (t * min_phi2).powf(-0.5) * f_a1_norm;
    let ratio = if integral.norm() == 0.0 { 0.0 } else { integral.norm() / bound };
    Ok(VdcResult { integral, bound, ratio, min_phi2 })
}

/// `T`, `R±` on the symmetric grid, from a Jost solve at `k ≥ 0` and
/// conjugation for `k < 0`.
#[derive(Clone, Debug)]
pub struct ScatteringSamples {
    pub k: Vec<f64>,
    pub t: Vec<Complex64>,
    pub r_plus: Vec<Complex64>,
    pub r_minus: Vec<Complex64>,
    pub resonance: ResonanceReport,
}

pub fn sample_scattering(v: &Potential, cfg: &WienerConfig, jcfg: &JostConfig) -> Result<ScatteringSamples> {
    let k = cfg.grid();
    let i0 = k.len() / 2;
    let positive = &k[i0..];
    let xs = [-2.0, 0.0, 2.0];
    let jp = compute_h(v, &xs, positive, Side::Plus, jcfg)?;
    let jm = compute_h(v, &xs, positive, Side::Minus, jcfg)?;
    let resonance = classify_resonance(v, jcfg)?;
    let sd = scattering_matrix(&wronskians(&jp, &jm)?, &resonance)?;
    let mirror = |half: &[Complex64]| -> Vec<Complex64> {
        half[1..].iter().rev().map(|z| z.conj()).chain(half.iter().copied()).collect()
    };
    Ok(ScatteringSamples { t: mirror(&sd.t), r_plus: mirror(&sd.r_plus), r_minus: mirror(&sd.r_minus), k, resonance })
}

/// Window-convergence estimates for the scattering data of one potential.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub label: String,
    /// `dˡ/dkˡ (T - 1)`, `l = 0, 1, 2`.
    pub t_minus_one: Vec<WienerEstimate>,
    pub r_plus: Vec<WienerEstimate>,
    pub r_minus: Vec<WienerEstimate>,
    /// `(T(k) - T(0))/k`, then `(R±(k) - R±(0))/k`.
    pub t_quotient: WienerEstimate,
    pub r_plus_quotient: WienerEstimate,
    pub r_minus_quotient: WienerEstimate,
}

impl RegularityReport {
    pub fn all_converged(&self) -> bool {
        self.t_minus_one
            .iter()
            .chain(&self.r_plus)
            .chain(&self.r_minus)
            .chain([&self.t_quotient, &self.r_plus_quotient, &self.r_minus_quotient])
            .all(|e| e.converged)
    }
}

pub fn regularity_report(v: &Potential, max_order: usize, cfg: &WienerConfig, jcfg: &JostConfig) -> Result<RegularityReport> {
    let s = sample_scattering(v, cfg, jcfg)?;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let rz = &s.resonance;
    let c = |x: f64| Complex64::new(x, 0.0);
    Ok(RegularityReport {
        label: v.label().to_string(),
        t_minus_one: derivative_a_norms(&s.k, &s.t, max_order, one, cfg)?,
        r_plus: derivative_a_norms(&s.k, &s.r_plus, max_order, zero, cfg)?,
        r_minus: derivative_a_norms(&s.k, &s.r_minus, max_order, zero, cfg)?,
        t_quotient: difference_quotient_norm(&s.k, &s.t, c(rz.t0), zero, cfg)?,
        r_plus_quotient: difference_quotient_norm(&s.k, &s.r_plus, c(rz.r0_plus), zero, cfg)?,
        r_minus_quotient: difference_quotient_norm(&s.k, &s.r_minus, c(rz.r0_minus), zero, cfg)?,
    })
}

/// `𝒜`-norms of `h±(x,·) - 1`, `∂ₖ h±(x,·)` and `(h±(x,k) - h±(x,0))/k` at each `x`.
#[derive(Clone, Debug, Serialize)]
pub struct JostNorms {
    pub x: f64,
    pub h_minus_one: WienerEstimate,
    pub dk_h: WienerEstimate,
    pub quotient: WienerEstimate,
}

pub fn jost_norms(v: &Potential, side: Side, xs: &[f64], cfg: &WienerConfig, jcfg: &JostConfig) -> Result<Vec<JostNorms>> {
    let k = cfg.grid();
    let i0 = k.len() / 2;
    let jf = compute_h(v, xs, &k[i0..], side, jcfg)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(xs.len());
    for (ix, &x) in xs.iter().enumerate() {
        let half: Vec<Complex64> = (0..k.len() - i0).map(|ik| jf.h(ik, ix)).collect();
        let full: Vec<Complex64> = half[1..].iter().rev().map(|z| z.conj()).chain(half.iter().copied()).collect();
        let d = derivative(&full, cfg.dk, 1)?;
        out.push(JostNorms {
            x,
            h_minus_one: a_norm(&k, &full, Complex64::new(1.0, 0.0), cfg)?,
            dk_h: a_norm_with_floor(&k[3..k.len() - 3], &d, zero, cfg, cfg.noise_floor(d.len(), 1))?,
            quotient: difference_quotient_norm(&k, &full, half[0], zero, cfg)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> WienerConfig {
        WienerConfig::default()
    }

    fn sample(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<Complex64>) {
        let k = cfg().grid();
        let s = k.iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        (k, s)
    }

    #[test]
    fn lorentzian_and_gaussian_have_unit_norm() {
        // ĝ = e^{-|p|}/2 and e^{-p²/4}/(2√π), both of unit mass
        let (k, f) = sample(|k| 1.0 / (1.0 + k * k));
        let e = a_norm(&k, &f, Complex64::new(0.0, 0.0), &cfg()).unwrap();
        assert!((e.hat_l1 - 1.0).abs() < 2e-3, "{}", e.hat_l1);
        assert!(e.converged);
        let (k, f) = sample(|k| (-k * k).exp());
        let e = a_norm(&k, &f, Complex64::new(0.0, 0.0), &cfg()).unwrap();
        assert!((e.hat_l1 - 1.0).abs() < 1e-6, "{}", e.hat_l1);
    }

    #[test]
    fn constant_is_pure_constant_part() {
        let (k, f) = sample(|_| 1.0);
        let e = a_norm(&k, &f, Complex64::new(1.0, 0.0), &cfg()).unwrap();
        assert_eq!(e.hat_l1, 0.0);
        assert_eq!(e.a1_norm(), 1.0);
    }

    #[test]
    fn derivatives_of_a_gaussian() {
        // d/dk e^{-k²} = -2k e^{-k²}: ĝ = -ip e^{-p²/4}/(2√π), mass 2/√π; the
        // kink of |p| at 0 limits the p-grid sum to about 1e-5
        let (k, f) = sample(|k| (-k * k).exp());
        let e = derivative_a_norms(&k, &f, 2, Complex64::new(0.0, 0.0), &cfg()).unwrap();
        assert!((e[1].hat_l1 - 2.0 / PI.sqrt()).abs() < 1e-4, "{}", e[1].hat_l1);
        assert!(e.iter().all(|x| x.converged));
    }

    #[test]
    fn quotient_of_identity_is_constant() {
        let (k, f) = sample(|k| k);
        let e = difference_quotient_norm(&k, &f, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), &cfg()).unwrap();
        assert!(e.hat_l1 < 1e-12);
        assert_eq!(e.constant_part, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let k = vec![-1.0, -0.5, 0.0, 0.6, 1.0];
        let f = vec![Complex64::new(0.0, 0.0); 5];
        assert!(matches!(a_norm(&k, &f, Complex64::new(0.0, 0.0), &cfg()), Err(Error::Grid(_))));
    }

    #[test]
    fn inverse_of_nonvanishing_element_converges() {
        let (k, f) = sample(|k| 2.0 + 1.0 / (1.0 + k * k));
        let inv: Vec<Complex64> = f.iter().map(|z| 1.0 / z).collect();
        let e = a_norm(&k, &inv, Complex64::new(0.5, 0.0), &cfg()).unwrap();
        assert!(e.converged);
        assert!(e.hat_l1 > 0.0 && e.hat_l1 < 0.5);
    }

    #[test]
    fn vdc_fresnel_case() {
        let one = |_: f64| Complex64::new(1.0, 0.0);
        let r = vdc_check(|k| -k * k, one, -10.0, 10.0, 100.0, 1.0).unwrap();
        assert!((r.integral.norm() - (PI / 100.0).sqrt()).abs() < 1e-2);
        assert!((r.bound - VDC_CONSTANT / 200f64.sqrt()).abs() < 1e-9);
        assert!(r.ratio < 1.0);
        let zero = |_: f64| Complex64::new(0.0, 0.0);
        assert_eq!(vdc_check(|k| -k * k, zero, -10.0, 10.0, 10.0, 0.0).unwrap().ratio, 0.0);
    }

    #[test]
    fn vdc_lorentzian_amplitude() {
        let f = |k: f64| Complex64::new(1.0 / (1.0 + k * k), 0.0);
        let norm = a1_norm_of(f, Complex64::new(0.0, 0.0), &cfg()).unwrap().a1_norm();
        for t in [1.0, 10.0, 100.0] {
            let r = vdc_check(|k| -k * k, f, -10.0, 10.0, t, norm).unwrap();
            assert!(r.ratio < 1.0, "t={t} ratio={}", r.ratio);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn smooth(a: f64, s: f64, b: f64, u: f64, c: f64) -> impl Fn(f64) -> Complex64 {
            move |k: f64| Complex64::new(c + a / (1.0 + (k - s).powi(2)), b * (-(k - u).powi(2)).exp())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(12))]

            #[test]
            fn submultiplicative(a in -2.0f64..2.0, s in -3.0f64..3.0, b in -2.0f64..2.0, u in -3.0f64..3.0, c in -1.0f64..1.0,
                                 a2 in -2.0f64..2.0, s2 in -3.0f64..3.0, b2 in -2.0f64..2.0, u2 in -3.0f64..3.0, c2 in -1.0f64..1.0) {
                let cfg = WienerConfig { dk: 0.02, ..WienerConfig::default() };
                let f = smooth(a, s, b, u, c);
                let g = smooth(a2, s2, b2, u2, c2);
                let nf = a1_norm_of(&f, Complex64::new(c, 0.0), &cfg).unwrap().a1_norm();
                let ng = a1_norm_of(&g, Complex64::new(c2, 0.0), &cfg).unwrap().a1_norm();
                let nfg = a1_norm_of(|k| f(k) * g(k), Complex64::new(c * c2, 0.0), &cfg).unwrap().a1_norm();
                prop_assert!(nfg <= nf * ng * 1.05 + 1e-9);
            }

            #[test]
            fn vdc_ratio_below_one(t in 1.0f64..100.0, w in 0.5f64..3.0, shift in -2.0f64..2.0) {
                let f = move |k: f64| Complex64::new(1.0 / (1.0 + ((k - shift) / w).powi(2)), 0.0);
                let cfg = WienerConfig { dk: 0.02, ..WienerConfig::default() };
                let norm = a1_norm_of(f, Complex64::new(0.0, 0.0), &cfg).unwrap().a1_norm();
                let r = vdc_check(|k| -k * k, f, -6.0, 6.0, t, norm).unwrap();
                prop_assert!(r.ratio <= 1.0);
            }
        }
    }
}
