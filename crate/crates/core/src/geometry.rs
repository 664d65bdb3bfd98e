//! Magnus-expansion diagnostics: leading-order noise integrals, the space
//! curve picture, the optimal-modulation condition and filter functions.
//!
//! For a drive `Ω(t)` on σ_z, first-order quasi-static noise on axis σ_i
//! accumulates as `A₁(T) = ∫ U†(t) σ_i U(t) dt`. The Pauli decomposition of
//! the cumulative integral traces a 3D space curve whose closure is
//! equivalent to first-order cancellation; signed projected areas of the
//! closed curve capture the second-order term.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::model::{PauliAxis, Waveform};

/// `J₀(x)` by its ascending power series; accurate to ~1e-14 for |x| <= 12.
fn bessel_j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        term *= q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// `J₀(x) = (1/π) ∫₀^π cos(x sin θ) dθ` by composite Simpson quadrature;
/// holds for all x and backs the series beyond its comfort zone.
fn bessel_j0_integral(x: f64) -> f64 {
    let n = 4096; // even
    let h = std::f64::consts::PI / n as f64;
    let f = |theta: f64| (x * theta.sin()).cos();
    let mut acc = f(0.0) + f(std::f64::consts::PI);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(k as f64 * h);
    }
    acc * h / (3.0 * std::f64::consts::PI)
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    if x.abs() <= 12.0 {
        bessel_j0_series(x)
    } else {
        bessel_j0_integral(x)
    }
}

/// The i-th positive zero of `J₀` (i >= 1), by bracketed bisection around the
/// McMahon asymptotic guess.
pub fn bessel_j0_zero(index: u32) -> Result<f64> {
    if index < 1 {
        return Err(SimError::Domain(format!(
            "bessel_j0_zero: index must be >= 1, got {index}"
        )));
    }
    let beta = (index as f64 - 0.25) * std::f64::consts::PI;
    let guess = beta + 1.0 / (8.0 * beta) - 124.0 / (3.0 * (8.0 * beta).powi(3));
    let mut lo = guess - 0.5;
    let mut hi = guess + 0.5;
    let mut f_lo = bessel_j0(lo);
    let mut f_hi = bessel_j0(hi);
    let mut widen = 0;
    while f_lo * f_hi > 0.0 {
        lo -= 0.25;
        hi += 0.25;
        f_lo = bessel_j0(lo);
        f_hi = bessel_j0(hi);
        widen += 1;
        if widen > 8 {
            return Err(SimError::Numerical(format!(
                "bessel_j0_zero: failed to bracket zero {index}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f_mid = bessel_j0(mid);
        if f_lo * f_mid <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Optimal modulation frequency `Ω_R√2 / j_i` with `j_i` the i-th zero of J₀.
pub fn optimal_mod_frequency(omega_r_mhz: f64, root_index: u32) -> Result<f64> {
    if omega_r_mhz <= 0.0 {
        return Err(SimError::Domain(format!(
            "optimal_mod_frequency: omega_r must be positive, got {omega_r_mhz}"
        )));
    }
    Ok(omega_r_mhz * std::f64::consts::SQRT_2 / bessel_j0_zero(root_index)?)
}

/// Rotation-frame samples of `U†(t) σ_axis U(t)` for a drive on σ_z.
///
/// Returns the Pauli vector at `n+1` uniform sample times on `[0, T]`. The
/// propagator phase is accumulated with the same midpoint rule used by the
/// generic propagator.
fn toggling_samples(
    envelope: &Waveform,
    noise_axis: PauliAxis,
    t_total: f64,
    n: usize,
) -> Result<Vec<[f64; 3]>> {
    let dt = t_total / n as f64;
    let mut half_phase = 0.0f64; // pi * integral of Omega dt
    let mut out = Vec::with_capacity(n + 1);
    let vec_at = |half_phase: f64| -> [f64; 3] {
        // U = diag(e^{-i phi/2}, e^{+i phi/2}) rotates Pauli vectors about z
        // by phi = 2 pi * integral(Omega).
        let phi = 2.0 * half_phase;
        let (s, c) = phi.sin_cos();
        match noise_axis {
            PauliAxis::X => [c, -s, 0.0],
            PauliAxis::Y => [s, c, 0.0],
            PauliAxis::Z => [0.0, 0.0, 1.0],
        }
    };
    out.push(vec_at(half_phase));
    for k in 0..n {
        let tm = (k as f64 + 0.5) * dt;
        let omega = envelope.eval(tm);
        if !omega.is_finite() {
            return Err(SimError::NonFiniteSample { t_us: tm });
        }
        half_phase += std::f64::consts::PI * omega * dt;
        out.push(vec_at(half_phase));
    }
    Ok(out)
}

const MAGNUS_SAMPLES: usize = 1 << 14;

/// First-order Magnus term `A₁(T)` decomposed on the Pauli basis (µs units),
/// for quasi-static noise on `noise_axis` under an envelope driving σ_z.
pub fn magnus_first_order(
    envelope: &Waveform,
    noise_axis: PauliAxis,
    t_total_us: f64,
) -> Result<[f64; 3]> {
    if t_total_us <= 0.0 {
        return Err(SimError::Domain(format!(
            "magnus_first_order: T must be positive, got {t_total_us}"
        )));
    }
    let samples = toggling_samples(envelope, noise_axis, t_total_us, MAGNUS_SAMPLES)?;
    let dt = t_total_us / MAGNUS_SAMPLES as f64;
    let mut acc = [0.0f64; 3];
    for (k, v) in samples.iter().enumerate() {
        let w = if k == 0 || k == MAGNUS_SAMPLES { 0.5 } else { 1.0 };
        for i in 0..3 {
            acc[i] += w * v[i] * dt;
        }
    }
    Ok(acc)
}

/// Sampled noise space curve `s(t)` with closure diagnostics.
#[derive(Debug, Clone)]
pub struct SpaceCurve {
    /// `(t_us, s(t))` with `s(0) = 0`; unit-speed up to discretization.
    pub samples: Vec<(f64, [f64; 3])>,
    pub total_time_us: f64,
}

impl SpaceCurve {
    /// `|s(T) - s(0)|`; zero iff first-order noise cancels.
    pub fn closure_defect(&self) -> f64 {
        let s_end = self.samples.last().expect("non-empty curve").1;
        let s_start = self.samples.first().expect("non-empty curve").1;
        ((s_end[0] - s_start[0]).powi(2)
            + (s_end[1] - s_start[1]).powi(2)
            + (s_end[2] - s_start[2]).powi(2))
        .sqrt()
    }

    /// Curvature at an interior sample, reported in MHz so it can be compared
    /// directly with the drive envelope (`κ_geom = 2π Ω`).
    pub fn curvature_mhz(&self, idx: usize) -> Option<f64> {
        if idx == 0 || idx + 1 >= self.samples.len() {
            return None;
        }
        let dt = self.samples[idx + 1].0 - self.samples[idx].0;
        let (a, b, c) = (
            self.samples[idx - 1].1,
            self.samples[idx].1,
            self.samples[idx + 1].1,
        );
        let mut acc = 0.0;
        for i in 0..3 {
            let dd = (a[i] - 2.0 * b[i] + c[i]) / (dt * dt);
            acc += dd * dd;
        }
        Some(acc.sqrt() / std::f64::consts::TAU)
    }

    /// Euclidean speed |ds/dt| at an interior sample (1 in exact arithmetic).
    pub fn speed(&self, idx: usize) -> Option<f64> {
        if idx == 0 || idx + 1 >= self.samples.len() {
            return None;
        }
        let dt = self.samples[idx + 1].0 - self.samples[idx - 1].0;
        let (a, c) = (self.samples[idx - 1].1, self.samples[idx + 1].1);
        let mut acc = 0.0;
        for i in 0..3 {
            let d = (c[i] - a[i]) / dt;
            acc += d * d;
        }
        Some(acc.sqrt())
    }
}

/// Space curve of the first-order noise integral for σ_x noise under the
/// given envelope, sampled at `n_samples` points.
pub fn space_curve(envelope: &Waveform, t_total_us: f64, n_samples: usize) -> Result<SpaceCurve> {
    if n_samples < 100 {
        return Err(SimError::Domain(format!(
            "space_curve: need at least 100 samples, got {n_samples}"
        )));
    }
    if t_total_us <= 0.0 {
        return Err(SimError::Domain(format!(
            "space_curve: T must be positive, got {t_total_us}"
        )));
    }
    let n = n_samples - 1;
    let vs = toggling_samples(envelope, PauliAxis::X, t_total_us, n)?;
    let dt = t_total_us / n as f64;
    let mut samples = Vec::with_capacity(n_samples);
    let mut s = [0.0f64; 3];
    samples.push((0.0, s));
    for k in 0..n {
        for i in 0..3 {
            s[i] += 0.5 * (vs[k][i] + vs[k + 1][i]) * dt;
        }
        samples.push(((k + 1) as f64 * dt, s));
    }
    Ok(SpaceCurve {
        samples,
        total_time_us: t_total_us,
    })
}

/// Signed projected areas `(A_xy, A_xz, A_yz)` of the curve by the shoelace
/// line integral in each coordinate plane, closing the polygon.
pub fn projected_areas(curve: &SpaceCurve) -> (f64, f64, f64) {
    let pts = &curve.samples;
    let n = pts.len();
    if n < 2 {
        return (0.0, 0.0, 0.0);
    }
    let mut a = [0.0f64; 3]; // xy, xz, yz
    for k in 0..n {
        let p = pts[k].1;
        let q = pts[(k + 1) % n].1;
        a[0] += p[0] * q[1] - q[0] * p[1];
        a[1] += p[0] * q[2] - q[0] * p[2];
        a[2] += p[1] * q[2] - q[1] * p[2];
    }
    (0.5 * a[0], 0.5 * a[1], 0.5 * a[2])
}

/// Combined first/second-order diagnostics for an envelope over `[0, T]`.
#[derive(Debug, Clone)]
pub struct MagnusReport {
    /// Pauli components of `A₁(T)` for σ_x noise.
    pub a1: [f64; 3],
    /// Magnitude of the signed-area vector (second-order summary).
    pub a2_norm: f64,
    pub closure_defect: f64,
    /// `(A_xy, A_xz, A_yz)`.
    pub projected_areas: (f64, f64, f64),
}

pub fn magnus_report(envelope: &Waveform, t_total_us: f64) -> Result<MagnusReport> {
    let curve = space_curve(envelope, t_total_us, MAGNUS_SAMPLES + 1)?;
    let a1 = {
        let s = curve.samples.last().expect("non-empty").1;
        [s[0], s[1], s[2]]
    };
    let areas = projected_areas(&curve);
    Ok(MagnusReport {
        a1,
        a2_norm: (areas.0 * areas.0 + areas.1 * areas.1 + areas.2 * areas.2).sqrt(),
        closure_defect: curve.closure_defect(),
        projected_areas: areas,
    })
}

/// First-order susceptibility to a single-tone σ_x noise probe
/// `δβ(f, t) = δβ e^{-2iπ f t}`: the Frobenius norm of the complex-weighted
/// `A₁` quadrature, normalized by `T`.
pub fn filter_function(
    envelope: &Waveform,
    freq_grid_mhz: &[f64],
    t_total_us: f64,
) -> Result<Vec<f64>> {
    if freq_grid_mhz.iter().any(|f| *f < 0.0) {
        return Err(SimError::Domain(
            "filter_function: probe frequencies must be non-negative".into(),
        ));
    }
    let n = MAGNUS_SAMPLES;
    let samples = toggling_samples(envelope, PauliAxis::X, t_total_us, n)?;
    let dt = t_total_us / n as f64;
    let values: Vec<f64> = freq_grid_mhz
        .par_iter()
        .map(|&f| {
            let mut cx = C64::ZERO;
            let mut cy = C64::ZERO;
            for (k, v) in samples.iter().enumerate() {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                let ang = -std::f64::consts::TAU * f * (k as f64 * dt);
                let tone = C64::new(ang.cos(), ang.sin()) * (w * dt);
                cx += tone * v[0];
                cy += tone * v[1];
            }
            // Frobenius norm of cx*sigma_x + cy*sigma_y (z component is zero
            // for x-axis noise under a z drive)
            (2.0 * (cx.norm_sqr() + cy.norm_sqr())).sqrt() / t_total_us
        })
        .collect();
    Ok(values)
}
