//! The complex Fresnel integral `F(w) = ∫₀ʷ exp(-i v²) dv` for real `w`.
//!
//! On the diagonal `z = e^{iπ/4} w` the error function gives
//! `F(w) = (√π/2) e^{-iπ/4} erf(z)`. Small `|w|` uses the Maclaurin series
//! of `F`; otherwise `erfc(z)` comes from its continued fraction evaluated
//! with the modified Lentz algorithm.

use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const SERIES_LIMIT: f64 = 2.0;

/// `∫₀^∞ exp(-i v²) dv = (√π/2) e^{-iπ/4}`.
pub fn fresnel_limit() -> Complex64 {
    let r = 0.5 * PI.sqrt();
    Complex64::new(r * FRAC_1_SQRT_2, -r * FRAC_1_SQRT_2)
}

pub fn fresnel(w: f64) -> Complex64 {
    if w < 0.0 {
        return -fresnel(-w);
    }
    if w <= SERIES_LIMIT {
        series(w)
    } else {
        let z = Complex64::new(w * FRAC_1_SQRT_2, w * FRAC_1_SQRT_2);
        fresnel_limit() * (Complex64::new(1.0, 0.0) - erfc_cf(z))
    }
}

/// `∫ (-i)^n w^{2n+1} / (n! (2n+1))`
fn series(w: f64) -> Complex64 {
    let w2 = w * w;
    let mut term = Complex64::new(w, 0.0); // (-i w²)^n w / n!
    let mut sum = term;
    for n in 1..200 {
        term *= Complex64::new(0.0, -w2) / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

/// `∫_w^∞ exp(-i v²) dv`, without the cancellation of `F(∞) - F(w)`.
pub fn fresnel_tail(w: f64) -> Complex64 {
    if w < 0.0 {
        return 2.0 * fresnel_limit() - fresnel_tail(-w);
    }
    if w <= SERIES_LIMIT {
        fresnel_limit() - series(w)
    } else {
        fresnel_limit() * erfc_cf(Complex64::new(w * FRAC_1_SQRT_2, w * FRAC_1_SQRT_2))
    }
}

/// erfc(z) for Re z > 0 via the continued fraction
/// `erfc z = e^{-z²}/√π · 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))`.
pub fn erfc_cf(z: Complex64) -> Complex64 {
    (-z * z).exp() * erfcx_cf(z)
}

/// `e^{z²} erfc(z)` for Re z > 0 (slow to converge for `|z| < 2`).
pub fn erfcx_cf(z: Complex64) -> Complex64 {
    let tiny = 1e-300;
    // b0 = z, a_n = n/2, b_n = z
    let mut f = z;
    if f.norm() < tiny {
        f = Complex64::new(tiny, 0.0);
    }
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for n in 1..5000 {
        let a = n as f64 * 0.5;
        d = z + a * d;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        c = z + a / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            break;
        }
    }
    (PI.sqrt() * f).inv()
}
