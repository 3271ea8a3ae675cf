mod common;

use common::{packet, packet_nodes};
use num_complex::Complex64;
use scatterlab::jost::JostConfig;
use scatterlab::potential::Potential;
use scatterlab::propagator::{pac_values, PropagatorConfig, PropagatorData};
use scatterlab::scattering::bound_states;
use scatterlab::wiener::{regularity_report, RegularityReport, WienerConfig};

#[test]
fn continuous_part_of_the_square_well_keeps_its_mass() {
    // ‖e^{-itH}P_ac ψ‖² = ‖ψ‖² - |⟨φ_b, ψ⟩|² for the one bound state φ_b
    let v = Potential::resonant_square_well();
    let jc = JostConfig::default();
    let (ys, ws) = packet_nodes();
    let found = bound_states(&v, None, &ys, &jc).unwrap();
    assert_eq!(found.states.len(), 1);
    let phi = &found.states[0];
    let overlap: Complex64 = ys.iter().zip(&ws).map(|(&y, w)| phi.value(y).unwrap() * packet(y) * w).sum();
    let norm: f64 = ys.iter().zip(&ws).map(|(&y, w)| packet(y).norm_sqr() * w).sum();
    let expected = norm - overlap.norm_sqr();

    let t = 1.0;
    let xs: Vec<f64> = (-88..=104).map(|j| j as f64 * 0.125).collect();
    let mut grid: Vec<f64> = ys.iter().chain(&xs).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let data = PropagatorData::new(&v, &grid, &PropagatorConfig::default(), &jc).unwrap();
    let pairs: Vec<(f64, f64)> = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect();
    let vals = &pac_values(&data, &pairs, &[t]).unwrap()[0];
    let u: Vec<Complex64> = (0..xs.len())
        .map(|i| (0..ys.len()).map(|j| vals[i * ys.len() + j].value * packet(ys[j]) * ws[j]).sum())
        .collect();
    // Simpson over the 193 output points
    let mass: f64 = u
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let w = if i == 0 || i == u.len() - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * 0.125 / 3.0 * z.norm_sqr()
        })
        .sum();
    assert!(overlap.norm_sqr() > 0.1 * norm, "the packet should overlap the bound state");
    assert!((mass - expected).abs() < 1e-3 * expected, "{mass} vs {expected}");
}

fn converged_orders(r: &RegularityReport) -> [bool; 3] {
    [0, 1, 2].map(|l| r.t_minus_one[l].converged && r.r_plus[l].converged && r.r_minus[l].converged)
}

#[test]
fn power_law_tail_costs_derivative_regularity() {
    // same depth profile with an exponential and with a (1+|x|)^{-5/2} tail,
    // both sampled on [-400, 400]
    let wc = WienerConfig { k_max: 10.0, dk: 0.005, ..WienerConfig::default() };
    let x: Vec<f64> = (-2000..=2000).map(|j| j as f64 * 0.2).collect();
    let sample = |f: fn(f64) -> f64, rate: f64| {
        Potential::from_samples("sampled", x.clone(), x.iter().map(|&x| f(x)).collect(), rate).unwrap()
    };
    let exponential = sample(|x| -0.5 * (-x.abs()).exp(), 0.5);
    let power = sample(|x| -0.5 * (1.0 + x.abs()).powf(-2.5), 0.01);
    let jc = JostConfig::default();
    let e = regularity_report(&exponential, 2, &wc, &jc).unwrap();
    let p = regularity_report(&power, 2, &wc, &jc).unwrap();
    assert!(e.all_converged());
    assert_eq!(converged_orders(&p), [true, false, false]);
    assert!(!p.t_minus_one[2].converged);
}
