//! Jost solutions `f±(x,k) = e^{±ikx} h±(x,k)` and their zero-energy limits.
//!
//! The second-order equation is integrated inward from `±X∞`, where `η±`
//! has dropped below the configured tolerance, with the Magnus integrator
//! applied to `f'' = (V - k²) f`. The initial data are scaled by
//! `e^{∓ikX∞}` so that `h` and `h'` come out directly and nothing overflows
//! on the imaginary axis.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::magnus::{integrate, MagnusConfig};
use crate::potential::{Potential, Side};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct JostConfig {
    /// Start the integration where `η±(X∞)` is below this.
    pub eta_tol: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for JostConfig {
    fn default() -> Self {
        Self { eta_tol: 1e-13, rtol: 1e-10, atol: 1e-12 }
    }
}

impl JostConfig {
    fn magnus(&self) -> MagnusConfig {
        MagnusConfig { rtol: self.rtol, atol: self.atol, ..MagnusConfig::default() }
    }
}

/// `h`, `h'` and an accumulated error estimate at one `(x, k)`.
#[derive(Clone, Copy, Debug)]
pub struct JostPoint {
    pub h: Complex64,
    pub hp: Complex64,
    pub err: f64,
}

/// `h±(x, k)` on the points `xs` (any order) for a single complex `k`.
pub fn solve(v: &Potential, side: Side, k: Complex64, xs: &[f64], cfg: &JostConfig) -> Result<Vec<JostPoint>> {
    if v.is_zero() {
        return Ok(vec![JostPoint { h: Complex64::new(1.0, 0.0), hp: Complex64::new(0.0, 0.0), err: 0.0 }; xs.len()]);
    }
    let s = side.sign();
    let x_inf = v.x_infinity(cfg.eta_tol)?;
    // start beyond every requested point
    let x0 = s * xs.iter().fold(x_inf, |m, &x| m.max(s * x));
    let mut stops: Vec<f64> = xs.to_vec();
    stops.extend(v.breakpoints().into_iter().filter(|b| s * b < s * x0));
    // integrate towards ∓∞: descending for +, ascending for −
    stops.sort_by(|a, b| (s * b).total_cmp(&(s * a)));
    stops.dedup();
    let sk = Complex64::new(0.0, s) * k;
    let y0 = (Complex64::new(1.0, 0.0), sk);
    let out = integrate(&|x| v.eval(x), k, x0, y0, &stops, &cfg.magnus())?;
    let at = |x: f64| {
        let i = stops.binary_search_by(|p| (s * x).total_cmp(&(s * p))).expect("stop present");
        let o = out[i];
        let phase = (sk * (x0 - x)).exp();
        JostPoint { h: phase * o.f, hp: phase * (o.fp - sk * o.f), err: phase.norm() * o.err }
    };
    Ok(xs.iter().map(|&x| at(x)).collect())
}

/// Sampled `h±(x,k)` and `h'±(x,k)` on a grid of real `k`.
#[derive(Clone, Debug)]
pub struct JostField {
    pub side: Side,
    pub x_grid: Vec<f64>,
    pub k_grid: Vec<f64>,
    /// Row-major `[k][x]`.
    pub h: Vec<Complex64>,
    pub h_prime: Vec<Complex64>,
    /// Local error estimates, same layout.
    pub error: Vec<f64>,
}

impl JostField {
    fn idx(&self, ik: usize, ix: usize) -> usize {
        ik * self.x_grid.len() + ix
    }

    pub fn h(&self, ik: usize, ix: usize) -> Complex64 {
        self.h[self.idx(ik, ix)]
    }

    pub fn hp(&self, ik: usize, ix: usize) -> Complex64 {
        self.h_prime[self.idx(ik, ix)]
    }

    /// `f±(x,k) = e^{±ikx} h±(x,k)`.
    pub fn f(&self, ik: usize, ix: usize) -> Complex64 {
        self.phase(ik, ix) * self.h(ik, ix)
    }

    /// `f'±(x,k) = e^{±ikx}(h' ± ik h)`.
    pub fn fp(&self, ik: usize, ix: usize) -> Complex64 {
        let sk = Complex64::new(0.0, self.side.sign() * self.k_grid[ik]);
        self.phase(ik, ix) * (self.hp(ik, ix) + sk * self.h(ik, ix))
    }

    fn phase(&self, ik: usize, ix: usize) -> Complex64 {
        Complex64::new(0.0, self.side.sign() * self.k_grid[ik] * self.x_grid[ix]).exp()
    }

    pub fn x_index(&self, x: f64) -> Option<usize> {
        self.x_grid.iter().position(|&p| (p - x).abs() < 1e-12)
    }

    pub fn k_index(&self, k: f64) -> Option<usize> {
        self.k_grid.iter().position(|&p| (p - k).abs() < 1e-12)
    }

    /// Largest relative error estimate over the field.
    pub fn max_error(&self) -> f64 {
        self.error.iter().zip(&self.h).map(|(e, h)| e / h.norm().max(1.0)).fold(0.0, f64::max)
    }
}

pub fn compute_h(v: &Potential, x_grid: &[f64], k_grid: &[f64], side: Side, cfg: &JostConfig) -> Result<JostField> {
    if k_grid.iter().any(|k| !k.is_finite()) || x_grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Grid("non-finite grid point".into()));
    }
    let n = x_grid.len() * k_grid.len();
    let mut h = Vec::with_capacity(n);
    let mut hp = Vec::with_capacity(n);
    let mut error = Vec::with_capacity(n);
    for &k in k_grid {
        for p in solve(v, side, Complex64::new(k, 0.0), x_grid, cfg)? {
            h.push(p.h);
            hp.push(p.hp);
            error.push(p.err);
        }
    }
    Ok(JostField { side, x_grid: x_grid.to_vec(), k_grid: k_grid.to_vec(), h, h_prime: hp, error })
}

/// Real Jost solutions at `k = 0`.
#[derive(Clone, Debug, Serialize)]
pub struct JostZero {
    pub x: Vec<f64>,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    pub fp_plus: Vec<f64>,
    pub fp_minus: Vec<f64>,
    /// `W(f₋, f₊)` at `x = 0`.
    pub w0: f64,
    /// `|h₋(0)h'₊(0)| + |h'₋(0)h₊(0)|`, the scale against which `W(0)` is judged.
    pub w0_scale: f64,
}

impl JostZero {
    pub fn at(&self, x: f64) -> Option<usize> {
        self.x.iter().position(|&p| (p - x).abs() < 1e-12)
    }
}

/// `f±(·,0)` on `x_grid` (zero is added if missing).
pub fn jost_at_zero(v: &Potential, x_grid: &[f64], cfg: &JostConfig) -> Result<JostZero> {
    let mut x = x_grid.to_vec();
    if !x.contains(&0.0) {
        x.push(0.0);
    }
    x.sort_by(f64::total_cmp);
    let zero = Complex64::new(0.0, 0.0);
    let p = solve(v, Side::Plus, zero, &x, cfg)?;
    let m = solve(v, Side::Minus, zero, &x, cfg)?;
    let i0 = x.iter().position(|&p| p == 0.0).expect("zero inserted");
    let (hp, hm) = (p[i0], m[i0]);
    let w0 = hm.h.re * hp.hp.re - hm.hp.re * hp.h.re;
    let w0_scale = (hm.h.re * hp.hp.re).abs() + (hm.hp.re * hp.h.re).abs();
    Ok(JostZero {
        x,
        f_plus: p.iter().map(|q| q.h.re).collect(),
        f_minus: m.iter().map(|q| q.h.re).collect(),
        fp_plus: p.iter().map(|q| q.hp.re).collect(),
        fp_minus: m.iter().map(|q| q.hp.re).collect(),
        w0,
        w0_scale,
    })
}

/// The bounded zero-energy solution `f₀` with `f±(·,0) = c± f₀`.
#[derive(Clone, Debug, Serialize)]
pub struct ZeroEnergyState {
    pub x: Vec<f64>,
    pub f0: Vec<f64>,
    pub c_plus: f64,
    pub c_minus: f64,
    /// `|f₀(X∞)² + f₀(-X∞)² - 2|`.
    pub normalization_residual: f64,
    /// `max |f₀'' - V f₀|` on the grid, by differencing `f₀'`.
    pub ode_residual: f64,
}

impl ZeroEnergyState {
    /// `f₀` at a grid point.
    pub fn value(&self, x: f64) -> Option<f64> {
        self.x.iter().position(|&p| (p - x).abs() < 1e-12).map(|i| self.f0[i])
    }
}

/// Build `f₀ = f₊(·,0)/c₊` with `c₊² = (1+γ²)/2`, `c₊ > 0` and `c₋ = c₊/γ`.
pub fn zero_energy_state(v: &Potential, gamma: f64, x_grid: &[f64], cfg: &JostConfig) -> Result<ZeroEnergyState> {
    if gamma == 0.0 || !gamma.is_finite() {
        return Err(Error::Degenerate(format!("gamma = {gamma}")));
    }
    let x_inf = v.x_infinity(cfg.eta_tol)?;
    let delta = 1e-3;
    let mut pts: Vec<f64> = x_grid.to_vec();
    for &x in x_grid {
        pts.push(x - delta);
        pts.push(x + delta);
    }
    pts.push(x_inf);
    pts.push(-x_inf);
    let zero = Complex64::new(0.0, 0.0);
    let fp = solve(v, Side::Plus, zero, &pts, cfg)?;
    let fm = solve(v, Side::Minus, zero, &pts, cfg)?;
    // dependence check: f₊ = γ f₋ everywhere
    let scale = fp.iter().map(|p| p.h.re.abs()).fold(1.0, f64::max);
    let mismatch = fp.iter().zip(&fm).map(|(p, m)| (p.h.re - gamma * m.h.re).abs()).fold(0.0, f64::max) / scale;
    if mismatch > 1e-4 {
        return Err(Error::NotResonant { w0: mismatch });
    }
    let c_plus = ((1.0 + gamma * gamma) / 2.0).sqrt();
    let c_minus = c_plus / gamma;
    let n = x_grid.len();
    let f0: Vec<f64> = fp[..n].iter().map(|p| p.h.re / c_plus).collect();
    let at_inf = fp[3 * n].h.re / c_plus;
    let at_minus_inf = fp[3 * n + 1].h.re / c_plus;
    let normalization_residual = (at_inf * at_inf + at_minus_inf * at_minus_inf - 2.0).abs();
    let breaks = v.breakpoints();
    let ode_residual = (0..n)
        .filter(|&i| breaks.iter().all(|b| (b - x_grid[i]).abs() > 2.0 * delta))
        .map(|i| {
            let lo = fp[n + 2 * i].hp.re;
            let hi = fp[n + 2 * i + 1].hp.re;
            ((hi - lo) / (2.0 * delta) - v.eval(x_grid[i]) * fp[i].h.re).abs() / c_plus
        })
        .fold(0.0, f64::max);
    Ok(ZeroEnergyState { x: x_grid.to_vec(), f0, c_plus, c_minus, normalization_residual, ode_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn i() -> Complex64 {
        Complex64::i()
    }

    /// Closed-form `h₊` for `V = -2 sech²x`: `(ik - tanh x)/(ik - 1)`.
    fn pt_h(x: f64, k: f64) -> (Complex64, Complex64) {
        let d = i() * k - 1.0;
        ((i() * k - x.tanh()) / d, -1.0 / (x.cosh().powi(2) * d))
    }

    #[test]
    fn closed_form_oracle_solves_the_equation() {
        // residual of -f'' - 2 sech² f - k² f for f = e^{ikx}(ik - tanh x)/(ik - 1),
        // with f'' by a fine central difference
        let f = |x: f64, k: f64| (i() * k * x).exp() * pt_h(x, k).0;
        for &k in &[0.0, 0.4, 3.0] {
            for &x in &[-2.0, 0.3, 1.7] {
                let d = 1e-4;
                let fpp = (f(x + d, k) - 2.0 * f(x, k) + f(x - d, k)) / (d * d);
                let r = -fpp - 2.0 / x.cosh().powi(2) * f(x, k) - k * k * f(x, k);
                assert!(r.norm() < 1e-6, "k={k} x={x} residual {}", r.norm());
            }
        }
    }

    #[test]
    fn free_field_is_identically_one() {
        let jf = compute_h(&Potential::free(), &[-3.0, 0.0, 2.0], &[0.0, 1.0, 7.0], Side::Minus, &JostConfig::default()).unwrap();
        assert!(jf.h.iter().all(|h| *h == Complex64::new(1.0, 0.0)));
        assert!(jf.h_prime.iter().all(|h| h.norm() == 0.0));
    }

    #[test]
    fn poeschl_teller_matches_closed_form() {
        let v = Potential::poeschl_teller(1.0).unwrap();
        let xs: Vec<f64> = (-8..=8).map(|j| j as f64 * 0.5).collect();
        let ks = [0.0, 0.05, 0.5, 1.0, 4.0, 20.0];
        let jf = compute_h(&v, &xs, &ks, Side::Plus, &JostConfig::default()).unwrap();
        for (ik, &k) in ks.iter().enumerate() {
            for (ix, &x) in xs.iter().enumerate() {
                let (h, hp) = pt_h(x, k);
                assert!((jf.h(ik, ix) - h).norm() < 1e-7, "k={k} x={x}");
                assert!((jf.hp(ik, ix) - hp).norm() < 1e-7);
            }
        }
        // minus side by reflection symmetry: h₋(x,k) = h₊(-x,k) for even V
        let jm = compute_h(&v, &xs, &ks, Side::Minus, &JostConfig::default()).unwrap();
        for ik in 0..ks.len() {
            for (ix, &x) in xs.iter().enumerate() {
                assert!((jm.h(ik, ix) - pt_h(-x, ks[ik]).0).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn boundary_values_at_cutoff() {
        let v = Potential::gaussian_well(1.0, 1.0).unwrap();
        let cfg = JostConfig::default();
        let x_inf = v.x_infinity(cfg.eta_tol).unwrap();
        let p = solve(&v, Side::Plus, Complex64::new(2.0, 0.0), &[x_inf], &cfg).unwrap();
        assert!((p[0].h - 1.0).norm() < 1e-14 && p[0].hp.norm() < 1e-14);
    }

    #[test]
    fn conjugation_symmetry() {
        let v = Potential::resonant_square_well();
        let xs = [-2.0, -0.5, 0.0, 0.9, 3.0];
        let jf = compute_h(&v, &xs, &[-2.5, 2.5], Side::Plus, &JostConfig::default()).unwrap();
        for ix in 0..xs.len() {
            assert!((jf.h(0, ix) - jf.h(1, ix).conj()).norm() < 1e-9);
        }
    }

    #[test]
    fn wronskian_is_constant_in_x() {
        let v = Potential::gaussian_well(2.0, 0.8).unwrap();
        let xs = [-3.0, -1.0, 0.0, 1.5, 4.0];
        for &k in &[0.3, 2.0, 9.0] {
            let jp = compute_h(&v, &xs, &[k], Side::Plus, &JostConfig::default()).unwrap();
            let jm = compute_h(&v, &xs, &[k], Side::Minus, &JostConfig::default()).unwrap();
            let w: Vec<Complex64> = (0..xs.len()).map(|ix| jm.f(0, ix) * jp.fp(0, ix) - jm.fp(0, ix) * jp.f(0, ix)).collect();
            let spread = w.iter().map(|z| (z - w[0]).norm()).fold(0.0, f64::max) / w[0].norm();
            assert!(spread < 1e-7, "k={k} spread {spread:e}");
        }
    }

    #[test]
    fn zero_energy_solutions() {
        let cfg = JostConfig::default();
        let xs = [-3.0, -0.5, 0.0, 0.5, 3.0];
        // free: resonant with f± = 1
        let z = jost_at_zero(&Potential::free(), &xs, &cfg).unwrap();
        assert_eq!(z.w0, 0.0);
        // Pöschl–Teller: f₊(x,0) = tanh x, f₋(x,0) = -tanh x
        let pt = jost_at_zero(&Potential::poeschl_teller(1.0).unwrap(), &xs, &cfg).unwrap();
        for (j, &x) in pt.x.iter().enumerate() {
            assert!((pt.f_plus[j] - x.tanh()).abs() < 1e-8);
            assert!((pt.f_minus[j] + x.tanh()).abs() < 1e-8);
        }
        assert!(pt.w0.abs() < 1e-8);
        // resonant square well: f₊(x,0) = 1 for x ≥ 1, sin(πx/2) inside
        let sw = jost_at_zero(&Potential::resonant_square_well(), &[0.0, 0.3, 1.0, 2.0], &cfg).unwrap();
        for (j, &x) in sw.x.iter().enumerate() {
            let exact = if x >= 1.0 { 1.0 } else { (PI * x / 2.0).sin() };
            assert!((sw.f_plus[j] - exact).abs() < 1e-8, "x={x}");
        }
        assert!(sw.w0.abs() < 1e-8);
        // a generic Gaussian well is not resonant, at two resolutions
        let g = Potential::gaussian_well(0.1, 1.0).unwrap();
        let coarse = jost_at_zero(&g, &xs, &cfg).unwrap().w0;
        let fine = jost_at_zero(&g, &xs, &JostConfig { rtol: 1e-12, atol: 1e-14, ..cfg }).unwrap().w0;
        assert!((coarse - fine).abs() < 1e-8);
        assert!(coarse.abs() > 10.0 * 1e-6);
    }

    #[test]
    fn zero_energy_state_conventions() {
        let cfg = JostConfig::default();
        let xs: Vec<f64> = (-6..=6).map(|j| j as f64 * 0.5).collect();
        let z = zero_energy_state(&Potential::free(), 1.0, &xs, &cfg).unwrap();
        assert!(z.f0.iter().all(|f| (f - 1.0).abs() < 1e-15));
        assert_eq!((z.c_plus, z.c_minus), (1.0, 1.0));

        let pt = zero_energy_state(&Potential::poeschl_teller(1.0).unwrap(), -1.0, &xs, &cfg).unwrap();
        for (f, x) in pt.f0.iter().zip(&xs) {
            assert!((f - x.tanh()).abs() < 1e-8);
        }
        assert!(pt.normalization_residual < 1e-6);
        assert!(pt.ode_residual < 1e-5);
        // c₊ c₋ T(0) = 1 with T(0) = 2γ/(1+γ²)
        let t0 = 2.0 * -1.0 / 2.0;
        assert!((pt.c_plus * pt.c_minus * t0 - 1.0).abs() < 1e-12);

        let sw = zero_energy_state(&Potential::resonant_square_well(), -1.0, &xs, &cfg).unwrap();
        for (j, &x) in xs.iter().enumerate() {
            let mirror = xs.iter().position(|&y| y == -x).unwrap();
            assert!((sw.f0[j] + sw.f0[mirror]).abs() < 1e-8);
        }
        assert!(sw.normalization_residual < 1e-6);

        assert!(matches!(zero_energy_state(&Potential::free(), 0.0, &xs, &cfg), Err(Error::Degenerate(_))));
        let g = Potential::gaussian_well(0.1, 1.0).unwrap();
        assert!(matches!(zero_energy_state(&g, 1.0, &xs, &cfg), Err(Error::NotResonant { .. })));
    }
}
