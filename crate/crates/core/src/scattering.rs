//! Wronskians, transmission and reflection coefficients, bound states and
//! the zero-energy resonance classification.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jost::{compute_h, jost_at_zero, solve, JostConfig, JostField};
use crate::numeric::roots::brent;
use crate::potential::{Potential, Side};

/// Relative threshold on `|W(0)|` below which zero energy counts as resonant.
pub const EPS_RES: f64 = 1e-6;
/// Cross-check tolerance for Wronskians evaluated at several `x`.
pub const WRONSKIAN_TOL: f64 = 1e-6;

/// `W(k)` and `W±(k)` on a shared grid of real `k`.
#[derive(Clone, Debug)]
pub struct Wronskians {
    pub k_grid: Vec<f64>,
    pub w: Vec<Complex64>,
    pub w_plus: Vec<Complex64>,
    pub w_minus: Vec<Complex64>,
    /// Largest relative disagreement between `x = 0` and the direct
    /// Wronskians at the other available points of `{-2, 0, 2}`.
    pub spread: f64,
}

/// `h±(k)`, `h'±(k)` at `x = 0` turned into `W`, `W₊`, `W₋`; `h(-k) = conj h(k)`.
fn wronskian_triple(hp: Complex64, hpp: Complex64, hm: Complex64, hmp: Complex64, k: f64) -> [Complex64; 3] {
    let w = Complex64::new(0.0, 2.0 * k) * hp * hm + hm * hpp - hmp * hp;
    let w_plus = hm * hpp.conj() - hp.conj() * hmp;
    let w_minus = hp * hmp.conj() - hm.conj() * hpp;
    [w, w_plus, w_minus]
}

pub fn wronskians(jp: &JostField, jm: &JostField) -> Result<Wronskians> {
    if jp.side != Side::Plus || jm.side != Side::Minus {
        return Err(Error::Grid("expected a plus and a minus Jost field".into()));
    }
    if jp.k_grid != jm.k_grid {
        return Err(Error::Grid("Jost fields use different k grids".into()));
    }
    let (Some(p0), Some(m0)) = (jp.x_index(0.0), jm.x_index(0.0)) else {
        return Err(Error::Grid("x = 0 missing from a Jost grid".into()));
    };
    let checks: Vec<(usize, usize)> =
        [-2.0, 2.0].iter().filter_map(|&x| Some((jp.x_index(x)?, jm.x_index(x)?))).collect();
    let n = jp.k_grid.len();
    let (mut w, mut wp, mut wm) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    let mut spread = 0.0f64;
    let mut worst_k = 0.0;
    for (ik, &k) in jp.k_grid.iter().enumerate() {
        let (hp, hpp, hm, hmp) = (jp.h(ik, p0), jp.hp(ik, p0), jm.h(ik, m0), jm.hp(ik, m0));
        let [a, b, c] = wronskian_triple(hp, hpp, hm, hmp, k);
        // magnitude of the solution data, which is what the errors scale with
        let mut scale = (hm.norm() + hmp.norm()) * (hp.norm() * (1.0 + k.abs()) + hpp.norm());
        for &(ip, im) in &checks {
            let (fp, fpp, fm, fmp) = (jp.f(ik, ip), jp.fp(ik, ip), jm.f(ik, im), jm.fp(ik, im));
            scale = scale.max((fm.norm() + fmp.norm()) * (fp.norm() + fpp.norm()));
        }
        for &(ip, im) in &checks {
            let (fp, fpp, fm, fmp) = (jp.f(ik, ip), jp.fp(ik, ip), jm.f(ik, im), jm.fp(ik, im));
            let direct = fm * fpp - fmp * fp;
            let direct_plus = fm * fpp.conj() - fmp * fp.conj();
            let direct_minus = fp * fmp.conj() - fpp * fm.conj();
            let e = (direct - a).norm().max((direct_plus - b).norm()).max((direct_minus - c).norm());
            if e / scale.max(1e-300) > spread {
                spread = e / scale.max(1e-300);
                worst_k = k;
            }
        }
        w.push(a);
        wp.push(b);
        wm.push(c);
    }
    if spread > WRONSKIAN_TOL {
        return Err(Error::WronskianSpread { k: worst_k, spread, tol: WRONSKIAN_TOL });
    }
    Ok(Wronskians { k_grid: jp.k_grid.clone(), w, w_plus: wp, w_minus: wm, spread })
}

/// Scattering matrix entries on a `k` grid.
#[derive(Clone, Debug, Serialize)]
pub struct ScatteringData {
    pub k_grid: Vec<f64>,
    pub w: Vec<Complex64>,
    pub w_plus: Vec<Complex64>,
    pub w_minus: Vec<Complex64>,
    pub t: Vec<Complex64>,
    pub r_plus: Vec<Complex64>,
    pub r_minus: Vec<Complex64>,
    pub bound_states: Vec<BoundState>,
}

/// `T = 2ik/W` and `R± = ∓W±/W`; the `k = 0` entries come from `zero`.
pub fn scattering_matrix(wr: &Wronskians, zero: &ResonanceReport) -> Result<ScatteringData> {
    let n = wr.k_grid.len();
    let (mut t, mut rp, mut rm) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (i, &k) in wr.k_grid.iter().enumerate() {
        if k == 0.0 {
            t.push(Complex64::new(zero.t0, 0.0));
            rp.push(Complex64::new(zero.r0_plus, 0.0));
            rm.push(Complex64::new(zero.r0_minus, 0.0));
            continue;
        }
        let w = wr.w[i];
        if w.norm() < 1e-14 * k.abs() {
            return Err(Error::VanishingWronskian { k, w: w.norm() });
        }
        t.push(Complex64::new(0.0, 2.0 * k) / w);
        rp.push(-wr.w_plus[i] / w);
        rm.push(wr.w_minus[i] / w);
    }
    Ok(ScatteringData {
        k_grid: wr.k_grid.clone(),
        w: wr.w.clone(),
        w_plus: wr.w_plus.clone(),
        w_minus: wr.w_minus.clone(),
        t,
        r_plus: rp,
        r_minus: rm,
        bound_states: Vec::new(),
    })
}

impl ScatteringData {
    /// Jost fields at `x ∈ {-3,-2,0,2,3}`, Wronskians, the resonance
    /// classification for `k = 0`, and the bound states.
    pub fn compute(v: &Potential, k_grid: &[f64], cfg: &JostConfig) -> Result<(Self, ResonanceReport)> {
        let xs = [-3.0, -2.0, 0.0, 2.0, 3.0];
        let jp = compute_h(v, &xs, k_grid, Side::Plus, cfg)?;
        let jm = compute_h(v, &xs, k_grid, Side::Minus, cfg)?;
        let report = classify_resonance(v, cfg)?;
        let mut sd = scattering_matrix(&wronskians(&jp, &jm)?, &report)?;
        sd.bound_states = bound_states(v, None, &[], cfg)?.states;
        Ok((sd, report))
    }

    /// `max_k ||T|² + |R±|² - 1|` for each sign.
    pub fn unitarity_residual(&self) -> (f64, f64) {
        let r = |rr: &[Complex64]| {
            self.t.iter().zip(rr).map(|(t, r)| (t.norm_sqr() + r.norm_sqr() - 1.0).abs()).fold(0.0, f64::max)
        };
        (r(&self.r_plus), r(&self.r_minus))
    }

    /// `max_k |T conj(R₊) + conj(T) R₋|`.
    pub fn off_diagonal_residual(&self) -> f64 {
        self.t
            .iter()
            .zip(self.r_plus.iter().zip(&self.r_minus))
            .map(|(t, (rp, rm))| (t * rp.conj() + t.conj() * rm).norm())
            .fold(0.0, f64::max)
    }

    /// `max |T f± - R∓ f∓ - f∓(·,-k)|` over the common grid of two Jost fields.
    pub fn scattering_relation_residual(&self, jp: &JostField, jm: &JostField) -> Result<f64> {
        if jp.k_grid != self.k_grid || jm.k_grid != self.k_grid || jp.x_grid != jm.x_grid {
            return Err(Error::Grid("Jost fields and scattering data disagree on grids".into()));
        }
        let mut worst = 0.0f64;
        for ik in 0..self.k_grid.len() {
            for ix in 0..jp.x_grid.len() {
                let (fp, fm) = (jp.f(ik, ix), jm.f(ik, ix));
                let a = self.t[ik] * fp - self.r_minus[ik] * fm - fm.conj();
                let b = self.t[ik] * fm - self.r_plus[ik] * fp - fp.conj();
                worst = worst.max(a.norm()).max(b.norm());
            }
        }
        Ok(worst)
    }
}

/// `T`, `R₊`, `R₋` at one real `k ≠ 0` from the Jost data at `x = 0`.
pub fn point_scattering(v: &Potential, k: f64, cfg: &JostConfig) -> Result<[Complex64; 3]> {
    let kc = Complex64::new(k, 0.0);
    let p = solve(v, Side::Plus, kc, &[0.0], cfg)?[0];
    let m = solve(v, Side::Minus, kc, &[0.0], cfg)?[0];
    let [w, wp, wm] = wronskian_triple(p.h, p.hp, m.h, m.hp, k);
    Ok([Complex64::new(0.0, 2.0 * k) / w, -wp / w, wm / w])
}

/// Zero-energy behaviour of the scattering matrix.
#[derive(Clone, Debug, Serialize)]
pub struct ResonanceReport {
    pub resonant: bool,
    pub gamma: Option<f64>,
    #[serde(rename = "T0")]
    pub t0: f64,
    #[serde(rename = "R0_plus")]
    pub r0_plus: f64,
    #[serde(rename = "R0_minus")]
    pub r0_minus: f64,
    /// `max |f₊ - γ f₋| / max |f₊|` over `[-2, 2]`.
    pub gamma_consistency: f64,
    /// Largest gap between the values above and the extrapolated `k → 0⁺`
    /// limits of `T`, `R±`.
    pub limit_consistency: f64,
    pub w0: f64,
    pub threshold: f64,
}

/// Values of `T(0)`, `R±(0)` from `γ`.
pub fn zero_limits(gamma: f64) -> (f64, f64, f64) {
    let d = 1.0 + gamma * gamma;
    (2.0 * gamma / d, (1.0 - gamma * gamma) / d, -(1.0 - gamma * gamma) / d)
}

pub fn classify_resonance(v: &Potential, cfg: &JostConfig) -> Result<ResonanceReport> {
    let xs: Vec<f64> = (-20..=20).map(|j| j as f64 * 0.1).collect();
    let jz = jost_at_zero(v, &xs, cfg)?;
    let scale = jz.w0_scale + v.eta(0.0, Side::Plus)? + v.eta(0.0, Side::Minus)?;
    let threshold = EPS_RES * scale;
    let w0 = jz.w0;

    // k → 0⁺ by linear extrapolation from ε and 2ε
    let eps = 1e-3;
    let (a, b) = (point_scattering(v, eps, cfg)?, point_scattering(v, 2.0 * eps, cfg)?);
    let lim: Vec<Complex64> = (0..3).map(|i| 2.0 * a[i] - b[i]).collect();
    let gap = |t0: f64, rp: f64, rm: f64| {
        (lim[0] - t0).norm().max((lim[1] - rp).norm()).max((lim[2] - rm).norm())
    };

    let resonant = {
        let num: f64 = jz.f_plus.iter().zip(&jz.f_minus).map(|(p, m)| p * m).sum();
        let den: f64 = jz.f_minus.iter().map(|m| m * m).sum();
        let gamma = num / den;
        let fmax = jz.f_plus.iter().fold(0.0f64, |m, f| m.max(f.abs()));
        let consistency =
            jz.f_plus.iter().zip(&jz.f_minus).map(|(p, m)| (p - gamma * m).abs()).fold(0.0, f64::max) / fmax;
        let (t0, rp, rm) = zero_limits(gamma);
        ResonanceReport {
            resonant: true,
            gamma: Some(gamma),
            t0,
            r0_plus: rp,
            r0_minus: rm,
            gamma_consistency: consistency,
            limit_consistency: gap(t0, rp, rm),
            w0,
            threshold,
        }
    };
    let non_resonant = ResonanceReport {
        resonant: false,
        gamma: None,
        t0: 0.0,
        r0_plus: -1.0,
        r0_minus: -1.0,
        gamma_consistency: f64::NAN,
        limit_consistency: gap(0.0, -1.0, -1.0),
        w0,
        threshold,
    };
    let aw = w0.abs();
    if aw > threshold / 10.0 && aw < 10.0 * threshold {
        return Err(Error::AmbiguousResonance {
            w0,
            threshold,
            resonant: Box::new(resonant),
            non_resonant: Box::new(non_resonant),
        });
    }
    Ok(if aw <= threshold { resonant } else { non_resonant })
}

/// Bisection on the sign of `W(0)` along a one-parameter family; returns the
/// parameter at which zero energy becomes resonant.
pub fn resonance_threshold<F: Fn(f64) -> Result<Potential>>(
    family: F,
    lo: f64,
    hi: f64,
    tol: f64,
    cfg: &JostConfig,
) -> Result<f64> {
    let w0 = |p: f64| -> Result<f64> { Ok(jost_at_zero(&family(p)?, &[0.0], cfg)?.w0) };
    let (mut a, mut b) = (lo, hi);
    let (mut wa, wb) = (w0(a)?, w0(b)?);
    if wa.signum() == wb.signum() {
        return Err(Error::RootNotConverged { lo, hi });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        let wm = w0(m)?;
        if wm == 0.0 {
            return Ok(m);
        }
        if wm.signum() == wa.signum() {
            a = m;
            wa = wm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// A bound state `E = -κ²` with its `L²`-normalized eigenfunction.
#[derive(Clone, Debug, Serialize)]
pub struct BoundState {
    pub kappa: f64,
    pub energy: f64,
    pub x: Vec<f64>,
    pub psi: Vec<f64>,
    /// `(∫ f₊(x,iκ)² dx)^{-1}` and the same for `f₋`.
    pub norming_plus: f64,
    pub norming_minus: f64,
    /// `|W(iκ)|` at the refined root.
    pub residual: f64,
}

impl BoundState {
    pub fn value(&self, x: f64) -> Option<f64> {
        self.x.iter().position(|&p| (p - x).abs() < 1e-12).map(|i| self.psi[i])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundStateSearch {
    pub states: Vec<BoundState>,
    /// A root sits so close to `κ = 0` that it may be a resonance in disguise.
    pub near_threshold: bool,
}

const KAPPA_BRACKETS: usize = 64;
const NEAR_THRESHOLD: f64 = 1e-3;

/// `W(iκ)`, real for real `V`.
fn w_imag(v: &Potential, kappa: f64, cfg: &JostConfig) -> Result<f64> {
    let k = Complex64::new(0.0, kappa);
    let p = solve(v, Side::Plus, k, &[0.0], cfg)?[0];
    let m = solve(v, Side::Minus, k, &[0.0], cfg)?[0];
    Ok((-2.0 * kappa * p.h * m.h + m.h * p.hp - m.hp * p.h).re)
}

/// `f±(x, iκ)` on `xs`.
fn f_imag(v: &Potential, side: Side, kappa: f64, xs: &[f64], cfg: &JostConfig) -> Result<Vec<f64>> {
    let pts = solve(v, side, Complex64::new(0.0, kappa), xs, cfg)?;
    Ok(pts.iter().zip(xs).map(|(p, &x)| (-side.sign() * kappa * x).exp() * p.h.re).collect())
}

fn simpson(h: f64, y: &[f64]) -> f64 {
    let n = y.len() - 1;
    debug_assert!(n % 2 == 0);
    let inner: f64 = (1..n).map(|i| if i % 2 == 1 { 4.0 * y[i] } else { 2.0 * y[i] }).sum();
    h / 3.0 * (y[0] + y[n] + inner)
}

pub fn bound_states(v: &Potential, kappa_max: Option<f64>, x_grid: &[f64], cfg: &JostConfig) -> Result<BoundStateSearch> {
    let vmin = v.min_value()?;
    let kmax = match kappa_max {
        Some(k) => k,
        None if vmin < 0.0 => (-vmin).sqrt() * 1.01,
        None => return Ok(BoundStateSearch { states: Vec::new(), near_threshold: false }),
    };
    let kmin = kmax * 1e-6;
    let nodes: Vec<f64> =
        (0..=KAPPA_BRACKETS).map(|j| kmin * (kmax / kmin).powf(j as f64 / KAPPA_BRACKETS as f64)).collect();
    let vals = nodes.iter().map(|&k| w_imag(v, k, cfg)).collect::<Result<Vec<_>>>()?;
    let mut roots = Vec::new();
    for j in 0..KAPPA_BRACKETS {
        if vals[j] == 0.0 {
            roots.push(nodes[j]);
        } else if vals[j].signum() != vals[j + 1].signum() && vals[j + 1] != 0.0 {
            let w = |k: f64| w_imag(v, k, cfg).unwrap_or(f64::NAN);
            roots.push(brent(w, nodes[j], nodes[j + 1], 1e-12, 200)?);
        }
    }
    if vals[KAPPA_BRACKETS] == 0.0 {
        roots.push(kmax);
    }
    let x_inf = v.x_infinity(cfg.eta_tol)?;
    let near_threshold = roots.iter().any(|&k| k < NEAR_THRESHOLD);
    let mut states = Vec::new();
    for kappa in roots.into_iter().rev() {
        // dense half-line grids for the norm, even panel counts for Simpson
        let n = 2 * ((x_inf / 0.005).ceil() as usize / 2).max(2);
        let h = x_inf / n as f64;
        let right: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let left: Vec<f64> = right.iter().map(|x| -x).collect();
        let fp = f_imag(v, Side::Plus, kappa, &right, cfg)?;
        let fm = f_imag(v, Side::Minus, kappa, &left, cfg)?;
        // f₊ = ratio·f₋ for a bound state
        let ratio = fp[0] / fm[0];
        let sq = |f: &[f64], s: f64| simpson(h, &f.iter().map(|y| s * s * y * y).collect::<Vec<_>>());
        // beyond ±X∞ the Jost solutions are e^{∓κx} up to tolerance
        let tails = (fp[n] * fp[n] + ratio * ratio * fm[n] * fm[n]) / (2.0 * kappa);
        let norm_plus = sq(&fp, 1.0) + sq(&fm, ratio) + tails;
        let norm_minus = norm_plus / (ratio * ratio);
        let xs_pos: Vec<f64> = x_grid.iter().copied().filter(|&x| x >= 0.0).collect();
        let xs_neg: Vec<f64> = x_grid.iter().copied().filter(|&x| x < 0.0).collect();
        let gp = f_imag(v, Side::Plus, kappa, &xs_pos, cfg)?;
        let gm = f_imag(v, Side::Minus, kappa, &xs_neg, cfg)?;
        let (mut ip, mut im) = (0, 0);
        let mut psi: Vec<f64> = x_grid
            .iter()
            .map(|&x| {
                if x >= 0.0 {
                    ip += 1;
                    gp[ip - 1]
                } else {
                    im += 1;
                    ratio * gm[im - 1]
                }
            })
            .map(|f| f / norm_plus.sqrt())
            .collect();
        // fix the sign by the value at the origin side with largest weight
        if fp[0] < 0.0 {
            psi.iter_mut().for_each(|p| *p = -*p);
        }
        states.push(BoundState {
            kappa,
            energy: -kappa * kappa,
            x: x_grid.to_vec(),
            psi,
            norming_plus: 1.0 / norm_plus,
            norming_minus: 1.0 / norm_minus,
            residual: w_imag(v, kappa, cfg)?.abs(),
        });
    }
    Ok(BoundStateSearch { states, near_threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const C0: Complex64 = Complex64::new(0.0, 0.0);

    fn grid(k_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| k_max * i as f64 / n as f64).collect()
    }

    /// Transfer-matrix transmission through `-V₀·1_{[-a,a]}`, written out
    /// independently of the Jost machinery.
    fn square_well_t(v0: f64, a: f64, k: f64) -> Complex64 {
        let q = (k * k + v0).sqrt();
        let i = Complex64::i();
        let num = (-2.0 * i * k * a).exp();
        let den = Complex64::new((2.0 * q * a).cos(), 0.0) - i * (k * k + q * q) / (2.0 * k * q) * (2.0 * q * a).sin();
        num / den
    }

    #[test]
    fn free_scattering_is_trivial() {
        let (sd, rep) = ScatteringData::compute(&Potential::free(), &grid(5.0, 10), &JostConfig::default()).unwrap();
        for (i, &k) in sd.k_grid.iter().enumerate() {
            assert!((sd.w[i] - Complex64::new(0.0, 2.0 * k)).norm() < 1e-15);
            assert_eq!(sd.w_plus[i], C0);
            assert_eq!(sd.t[i], Complex64::new(1.0, 0.0));
            assert!(sd.r_plus[i].norm() == 0.0 && sd.r_minus[i].norm() == 0.0);
        }
        assert!(rep.resonant);
        assert_eq!(rep.gamma, Some(1.0));
        assert!(sd.bound_states.is_empty());
    }

    #[test]
    fn poeschl_teller_is_reflectionless_and_resonant() {
        let v = Potential::poeschl_teller(1.0).unwrap();
        let (sd, rep) = ScatteringData::compute(&v, &grid(30.0, 60), &JostConfig::default()).unwrap();
        for (i, &k) in sd.k_grid.iter().enumerate() {
            assert!(sd.r_plus[i].norm() < 1e-6 && sd.r_minus[i].norm() < 1e-6);
            if k > 0.0 {
                // W(k) = 2ik (k - i)/(k + i)... with h = (ik - tanh)/(ik - 1): T = (k + i)/(k - i)
                let t = Complex64::new(k, 1.0) / Complex64::new(k, -1.0);
                assert!((sd.t[i] - t).norm() < 1e-7, "k={k}");
            }
        }
        assert!(rep.resonant);
        assert!((rep.gamma.unwrap() + 1.0).abs() < 1e-8);
        assert!((rep.t0 + 1.0).abs() < 1e-8 && rep.r0_plus.abs() < 1e-8);
        assert!(rep.limit_consistency < 1e-4);
        assert_eq!(sd.bound_states.len(), 1);
        let bs = &sd.bound_states[0];
        assert!((bs.kappa - 1.0).abs() < 1e-8 && (bs.energy + 1.0).abs() < 1e-8);
        // norming constant of sech/2: ∫ sech²/4 = 1/2
        assert!((bs.norming_plus - 2.0).abs() < 1e-6);
    }

    #[test]
    fn bound_state_eigenfunction_is_normalized_sech() {
        let v = Potential::poeschl_teller(1.0).unwrap();
        let xs: Vec<f64> = (-10..=10).map(|j| j as f64 * 0.4).collect();
        let found = bound_states(&v, None, &xs, &JostConfig::default()).unwrap();
        assert!(!found.near_threshold);
        let psi = &found.states[0].psi;
        for (p, x) in psi.iter().zip(&xs) {
            assert!((p - 1.0 / (x.cosh() * 2f64.sqrt())).abs() < 1e-7);
        }
    }

    #[test]
    fn square_well_matches_transfer_matrix() {
        let v = Potential::resonant_square_well();
        let (sd, rep) = ScatteringData::compute(&v, &grid(20.0, 80), &JostConfig::default()).unwrap();
        for (i, &k) in sd.k_grid.iter().enumerate().skip(1) {
            assert!((sd.t[i] - square_well_t(PI * PI / 4.0, 1.0, k)).norm() < 1e-8, "k={k}");
        }
        assert!(rep.resonant && sd.t[0].norm() > 0.5);
        let (u1, u2) = sd.unitarity_residual();
        assert!(u1 < 1e-6 && u2 < 1e-6);
        // the even ground state survives: q tan(qa) = κ with q² + κ² = V₀
        assert_eq!(sd.bound_states.len(), 1);
        let kappa = sd.bound_states[0].kappa;
        let q = (PI * PI / 4.0 - kappa * kappa).sqrt();
        assert!((q * q.tan() - kappa).abs() < 1e-8);
        // f₊(x,iκ) = e^{-κx} outside and A cos(qx) inside, A = e^{-κ}/cos q
        let amp2 = (-2.0 * kappa).exp() / q.cos().powi(2);
        let norm = 2.0 * (amp2 * (0.5 + (2.0 * q).sin() / (4.0 * q)) + (-2.0 * kappa).exp() / (2.0 * kappa));
        let bs = &sd.bound_states[0];
        assert!((bs.norming_plus - 1.0 / norm).abs() < 1e-6, "{}", bs.norming_plus);
        assert!((bs.norming_minus - bs.norming_plus).abs() < 1e-6);
    }

    #[test]
    fn relations_between_scattering_coefficients() {
        let v = Potential::gaussian_well(1.5, 0.7).unwrap();
        let ks = grid(10.0, 40);
        let cfg = JostConfig::default();
        let xs = [-3.0, -2.0, 0.0, 2.0, 3.0];
        let jp = compute_h(&v, &xs, &ks, Side::Plus, &cfg).unwrap();
        let jm = compute_h(&v, &xs, &ks, Side::Minus, &cfg).unwrap();
        let rep = classify_resonance(&v, &cfg).unwrap();
        let sd = scattering_matrix(&wronskians(&jp, &jm).unwrap(), &rep).unwrap();
        let (u1, u2) = sd.unitarity_residual();
        assert!(u1 < 1e-6 && u2 < 1e-6);
        assert!(sd.off_diagonal_residual() < 1e-6);
        assert!(sd.scattering_relation_residual(&jp, &jm).unwrap() < 1e-6);
    }

    #[test]
    fn shallow_gaussian_is_not_resonant() {
        let v = Potential::gaussian_well(0.1, 1.0).unwrap();
        let rep = classify_resonance(&v, &JostConfig::default()).unwrap();
        assert!(!rep.resonant);
        assert_eq!((rep.t0, rep.r0_plus, rep.r0_minus), (0.0, -1.0, -1.0));
        assert!(rep.limit_consistency < 1e-3);
    }

    #[test]
    fn square_well_threshold_by_bisection() {
        let cfg = JostConfig::default();
        let v0 = resonance_threshold(|v0| Potential::square_well(v0, 1.0), 2.0, 3.0, 1e-10, &cfg).unwrap();
        assert!((v0.sqrt() - PI / 2.0).abs() < 1e-4);
        assert!(classify_resonance(&Potential::square_well(v0 * 0.99, 1.0).unwrap(), &cfg).map(|r| !r.resonant).unwrap());
        assert!(classify_resonance(&Potential::square_well(v0, 1.0).unwrap(), &cfg).unwrap().resonant);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let v = Potential::free();
        let cfg = JostConfig::default();
        let jp = compute_h(&v, &[0.0], &[1.0], Side::Plus, &cfg).unwrap();
        let jm = compute_h(&v, &[0.0], &[2.0], Side::Minus, &cfg).unwrap();
        assert!(matches!(wronskians(&jp, &jm), Err(Error::Grid(_))));
    }
}
