//! Filon quadrature for `∫ g(y) e^{iωy} dy` with `g` piecewise linear
//! between uniform samples.

use num_complex::Complex64;

const SERIES_CUTOFF: f64 = 0.1;

/// `(∫₀¹ e^{iθu} du, ∫₀¹ u e^{iθu} du)`.
pub fn moments(theta: f64) -> (Complex64, Complex64) {
    let it = Complex64::new(0.0, theta);
    if theta.abs() < SERIES_CUTOFF {
        // Σ (iθ)ⁿ/(n+1)!  and  Σ (iθ)ⁿ/(n!(n+2))
        let (mut m0, mut m1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut p = Complex64::new(1.0, 0.0); // (iθ)ⁿ/n!
        for n in 0..14 {
            m0 += p / (n + 1) as f64;
            m1 += p / (n + 2) as f64;
            p *= it / (n + 1) as f64;
        }
        (m0, m1)
    } else {
        let e = it.exp();
        let m0 = (e - 1.0) / it;
        (m0, (e - m0) / it)
    }
}

/// `∫_{y₀}^{y₀+(n-1)h} g(y) e^{iωy} dy` for samples `g_j = g(y₀ + jh)`.
pub fn filon_linear<T: Copy + Into<Complex64>>(g: &[T], y0: f64, h: f64, omega: f64) -> Complex64 {
    if g.len() < 2 {
        return Complex64::new(0.0, 0.0);
    }
    let (m0, m1) = moments(omega * h);
    let (w0, w1) = ((m0 - m1) * h, m1 * h);
    let step = Complex64::new(0.0, omega * h).exp();
    let mut phase = Complex64::new(0.0, omega * y0).exp();
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..g.len() - 1 {
        let (a, b): (Complex64, Complex64) = (g[j].into(), g[j + 1].into());
        sum += phase * (a * w0 + b * w1);
        // renormalise so the recurrence does not drift off the unit circle
        phase *= step;
        if j % 64 == 63 {
            phase = Complex64::new(0.0, omega * (y0 + (j + 1) as f64 * h)).exp();
        }
    }
    sum
}

/// Richardson combination of the rules on `h` and `2h`; needs an odd number
/// of samples.
pub fn filon_richardson<T: Copy + Into<Complex64>>(g: &[T], y0: f64, h: f64, omega: f64) -> Complex64 {
    if g.len() < 5 || g.len() % 2 == 0 {
        return filon_linear(g, y0, h, omega);
    }
    let coarse: Vec<T> = g.iter().step_by(2).copied().collect();
    let fine = filon_linear(g, y0, h, omega);
    (4.0 * fine - filon_linear(&coarse, y0, 2.0 * h, omega)) / 3.0
}
