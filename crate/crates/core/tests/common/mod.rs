//! Independent split-step Fourier evolver for `i∂ₜψ = -ψ'' + Vψ`, and the
//! pieces the oracle comparison shares.
#![allow(dead_code)]

use num_complex::Complex64;
use rustfft::FftPlanner;
use scatterlab::jost::JostConfig;
use scatterlab::potential::Potential;
use scatterlab::propagator::{pac_values, PropagatorConfig, PropagatorData};

pub struct Box1d {
    pub half_width: f64,
    pub n: usize,
    /// Width of the absorbing layer at each end.
    pub layer: f64,
}

impl Box1d {
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn x(&self) -> Vec<f64> {
        (0..self.n).map(|j| -self.half_width + j as f64 * self.dx()).collect()
    }

    fn mask(&self, x: f64) -> f64 {
        let inner = self.half_width - self.layer;
        if x.abs() <= inner {
            1.0
        } else {
            (0.5 * std::f64::consts::PI * (x.abs() - inner) / self.layer).cos().abs().powf(0.125)
        }
    }
}

/// Strang splitting, half potential steps around a full kinetic step, with
/// the absorbing mask applied after every step.
pub fn split_step(
    v: impl Fn(f64) -> f64,
    psi0: impl Fn(f64) -> Complex64,
    bx: &Box1d,
    dt: f64,
    t: f64,
) -> (Vec<f64>, Vec<Complex64>) {
    let n = bx.n;
    let xs = bx.x();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let dp = 2.0 * std::f64::consts::PI / (2.0 * bx.half_width);
    let kinetic: Vec<Complex64> = (0..n)
        .map(|j| {
            let p = if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * dp;
            Complex64::new(0.0, -p * p * dt).exp() / n as f64
        })
        .collect();
    let half_v: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(0.0, -0.5 * v(x) * dt).exp()).collect();
    let mask: Vec<f64> = xs.iter().map(|&x| bx.mask(x)).collect();
    let mut psi: Vec<Complex64> = xs.iter().map(|&x| psi0(x)).collect();
    let steps = (t / dt).round() as usize;
    for _ in 0..steps {
        psi.iter_mut().zip(&half_v).for_each(|(p, h)| *p *= h);
        fwd.process(&mut psi);
        psi.iter_mut().zip(&kinetic).for_each(|(p, k)| *p *= k);
        inv.process(&mut psi);
        psi.iter_mut().zip(&half_v).zip(&mask).for_each(|((p, h), m)| *p *= h * m);
    }
    (xs, psi)
}

/// Gaussian packet centred at `-1` moving right with unit momentum.
pub fn packet(y: f64) -> Complex64 {
    Complex64::new(-0.5 * (y + 1.0) * (y + 1.0), y).exp()
}

/// Simpson nodes covering the packet to `e^{-32}`.
pub fn packet_nodes() -> (Vec<f64>, Vec<f64>) {
    let (lo, n, h) = (-9.0, 512, 1.0 / 32.0);
    let y: Vec<f64> = (0..=n).map(|j| lo + j as f64 * h).collect();
    let w: Vec<f64> = (0..=n)
        .map(|j| h / 3.0 * if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 })
        .collect();
    (y, w)
}

/// `∫ K(x,y,t) ψ(y) dy` with `K = [e^{-itH}P_ac] + bound(x,y)` at each `x`.
pub fn propagate_with_kernel(
    v: &Potential,
    xs: &[f64],
    t: f64,
    cfg: &PropagatorConfig,
    bound: impl Fn(f64, f64) -> Complex64,
) -> Vec<Complex64> {
    let (ys, ws) = packet_nodes();
    let mut grid: Vec<f64> = ys.iter().chain(xs).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let data = PropagatorData::new(v, &grid, cfg, &JostConfig::default()).unwrap();
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let vals = &pac_values(&data, &pairs, &[t]).unwrap()[0];
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            (0..ys.len())
                .map(|j| (vals[i * ys.len() + j].value + bound(x, ys[j])) * packet(ys[j]) * ws[j])
                .sum()
        })
        .collect()
}

/// Largest gap between the kernel propagation and the split-step solution
/// at `xs` (which must lie on the split-step grid), and the largest `|ψ|`.
pub fn oracle_gap(v: &Potential, xs: &[f64], t: f64, bound: impl Fn(f64, f64) -> Complex64) -> (f64, f64) {
    let bx = Box1d { half_width: 64.0, n: 4096, layer: 12.0 };
    let (grid, psi) = split_step(|x| v.eval(x), packet, &bx, 1e-3, t);
    let ours = propagate_with_kernel(v, xs, t, &PropagatorConfig::default(), bound);
    let mut gap = 0.0f64;
    let mut size = 0.0f64;
    for (x, u) in xs.iter().zip(&ours) {
        let j = ((x - grid[0]) / bx.dx()).round() as usize;
        assert!((grid[j] - x).abs() < 1e-12, "{x} is not a split-step node");
        gap = gap.max((u - psi[j]).norm());
        size = size.max(psi[j].norm());
    }
    (gap, size)
}

/// `e^{it}·sech x·sech y/2`: the bound state `E = -1` of Pöschl–Teller.
pub fn poeschl_teller_bound(t: f64) -> impl Fn(f64, f64) -> Complex64 {
    move |x, y| Complex64::new(0.0, t).exp() * 0.5 / (x.cosh() * y.cosh())
}

pub fn output_points() -> Vec<f64> {
    (-12..=12).map(|j| j as f64 * 0.5).collect()
}
