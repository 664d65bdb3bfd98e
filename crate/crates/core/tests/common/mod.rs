//! Shared helpers for the integration suites: truncated-Gaussian Monte Carlo
//! oracles (independent of the trapezoidal quadrature they check) and grid
//! interpolation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smartspin::noisemaps::{FidelityGrid, FidelityGrid4};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draw from a zero-mean Gaussian truncated to `[-bound, bound]` by
/// rejection; σ = 0 collapses to zero.
pub fn truncated_gaussian(rng: &mut ChaCha8Rng, sigma: f64, bound: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    loop {
        // Box-Muller
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        let x = sigma * z;
        if x.abs() <= bound {
            return x;
        }
    }
}

fn interp_weights(axis: &[f64], x: f64) -> (usize, f64) {
    let n = axis.len();
    if x <= axis[0] {
        return (0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 2, 1.0);
    }
    let idx = axis.partition_point(|&a| a <= x).min(n - 1) - 1;
    let w = (x - axis[idx]) / (axis[idx + 1] - axis[idx]);
    (idx, w)
}

/// Bilinear interpolation on a fixed offset map.
pub fn bilinear(grid: &FidelityGrid, dnu: f64, dom: f64) -> f64 {
    let (i, wi) = interp_weights(&grid.delta_nu_axis_mhz, dnu);
    let (j, wj) = interp_weights(&grid.delta_omega_axis, dom);
    let f00 = grid.value(i, j);
    let f01 = grid.value(i, j + 1);
    let f10 = grid.value(i + 1, j);
    let f11 = grid.value(i + 1, j + 1);
    f00 * (1.0 - wi) * (1.0 - wj) + f10 * wi * (1.0 - wj) + f01 * (1.0 - wi) * wj + f11 * wi * wj
}

/// Quadrilinear interpolation on a 4D offset tensor.
pub fn quadrilinear(grid: &FidelityGrid4, dnu1: f64, dnu2: f64, dom1: f64, dom2: f64) -> f64 {
    let (i1, a) = interp_weights(&grid.delta_nu_axis_mhz, dnu1);
    let (i2, b) = interp_weights(&grid.delta_nu_axis_mhz, dnu2);
    let (j1, c) = interp_weights(&grid.delta_omega_axis, dom1);
    let (j2, d) = interp_weights(&grid.delta_omega_axis, dom2);
    let mut acc = 0.0;
    for (di, wi) in [(0, 1.0 - a), (1, a)] {
        for (dj, wj) in [(0, 1.0 - b), (1, b)] {
            for (dk, wk) in [(0, 1.0 - c), (1, c)] {
                for (dl, wl) in [(0, 1.0 - d), (1, d)] {
                    acc += wi * wj * wk * wl * grid.value(i1 + di, i2 + dj, j1 + dk, j2 + dl);
                }
            }
        }
    }
    acc
}

/// Monte Carlo estimate (mean, standard error) of the truncated-Gaussian
/// average of a fixed map.
pub fn mc_average(
    grid: &FidelityGrid,
    sigma_nu: f64,
    sigma_om: f64,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = rng(seed);
    let bound_nu = *grid.delta_nu_axis_mhz.last().unwrap();
    let bound_om = *grid.delta_omega_axis.last().unwrap();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let dnu = truncated_gaussian(&mut rng, sigma_nu, bound_nu);
        let dom = truncated_gaussian(&mut rng, sigma_om, bound_om);
        let f = bilinear(grid, dnu, dom);
        sum += f;
        sum_sq += f * f;
    }
    let mean = sum / draws as f64;
    let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
    (mean, (var / draws as f64).sqrt())
}

/// Independently computed node weights of the renormalised trapezoidal
/// Gaussian measure on a grid axis (the contract the averaging routines
/// implement).
pub fn node_weights(axis: &[f64], sigma: f64) -> Vec<f64> {
    let n = axis.len();
    let mut w = vec![0.0; n];
    if sigma == 0.0 {
        let zero = axis.iter().position(|&x| x.abs() < 1e-12).expect("zero node");
        w[zero] = 1.0;
        return w;
    }
    for (i, &x) in axis.iter().enumerate() {
        let trap = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        w[i] = trap * (-0.5 * (x / sigma).powi(2)).exp();
    }
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    w
}

fn sample_node(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let mut u: f64 = rng.gen_range(0.0..1.0);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Monte Carlo estimate of the shared-σ 4D average by sampling grid nodes
/// from the (independently rebuilt) per-axis measures. This checks the
/// separable four-axis contraction stochastically on the same measure the
/// quadrature defines.
pub fn mc_average_4d_nodes(
    grid: &FidelityGrid4,
    sigma_nu: f64,
    sigma_om: f64,
    draws: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = rng(seed);
    let w_nu = node_weights(&grid.delta_nu_axis_mhz, sigma_nu);
    let w_om = node_weights(&grid.delta_omega_axis, sigma_om);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let i1 = sample_node(&mut rng, &w_nu);
        let i2 = sample_node(&mut rng, &w_nu);
        let j1 = sample_node(&mut rng, &w_om);
        let j2 = sample_node(&mut rng, &w_om);
        let f = grid.value(i1, i2, j1, j2);
        sum += f;
        sum_sq += f * f;
    }
    let mean = sum / draws as f64;
    let var = (sum_sq / draws as f64 - mean * mean).max(0.0);
    (mean, (var / draws as f64).sqrt())
}
