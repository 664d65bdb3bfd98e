//! Fixed-offset fidelity grids and Gaussian-averaged noise maps.
//!
//! The map pipeline follows the quasi-static picture: propagate the program
//! once per offset pair, score it against the target, then average the fixed
//! map against a normalised Gaussian whose widths are the noise levels. The
//! Gaussian is renormalised over the truncated grid domain rather than
//! extended past it.

use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::gates::ControlProgram;
use crate::model::NoiseOffset;
use crate::numerics::{score, FidelityMetric, PropagationConfig, Unitary};
use crate::twoqubit::{
    exchange_propagator, program_parts, propagate_two_qubit, separable_factor, ProgramPart,
};

/// Symmetric offset-grid specification. Point counts must be odd so the grid
/// contains the zero-offset column exactly.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub delta_nu_max_mhz: f64,
    pub delta_nu_points: usize,
    pub delta_omega_max: f64,
    pub delta_omega_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            delta_nu_max_mhz: 1.0,
            delta_nu_points: 81,
            delta_omega_max: 0.5,
            delta_omega_points: 81,
        }
    }
}

fn symmetric_axis(max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 3 || points % 2 == 0 {
        return Err(SimError::Config(format!(
            "grid axes need an odd point count >= 3, got {points}"
        )));
    }
    if !(max > 0.0) {
        return Err(SimError::Config(format!(
            "grid half-width must be positive, got {max}"
        )));
    }
    let half = (points - 1) / 2;
    Ok((0..points)
        .map(|i| (i as isize - half as isize) as f64 / half as f64 * max)
        .collect())
}

impl GridSpec {
    pub fn axes(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.delta_omega_max >= 1.0 {
            return Err(SimError::Config(
                "delta_omega grid must stay inside |delta_omega| < 1".into(),
            ));
        }
        Ok((
            symmetric_axis(self.delta_nu_max_mhz, self.delta_nu_points)?,
            symmetric_axis(self.delta_omega_max, self.delta_omega_points)?,
        ))
    }
}

/// Gate fidelity tabulated over fixed `(δ_ν, δ_Ω)` offsets.
#[derive(Debug, Clone)]
pub struct FidelityGrid {
    pub delta_nu_axis_mhz: Vec<f64>,
    pub delta_omega_axis: Vec<f64>,
    /// Row-major `[i_nu][j_omega]`.
    pub values: Vec<f64>,
    pub gate_name: String,
    pub qubit_count: usize,
}

impl FidelityGrid {
    pub fn value(&self, i_nu: usize, j_omega: usize) -> f64 {
        self.values[i_nu * self.delta_omega_axis.len() + j_omega]
    }

    pub fn zero_offset_value(&self) -> f64 {
        let i = self.delta_nu_axis_mhz.len() / 2;
        let j = self.delta_omega_axis.len() / 2;
        self.value(i, j)
    }

    /// Half-width in δ_ν (at δ_Ω = 0) over which the fidelity stays at or
    /// above `threshold`, linearly interpolated between grid points.
    pub fn detuning_half_width(&self, threshold: f64) -> f64 {
        let j0 = self.delta_omega_axis.len() / 2;
        let i0 = self.delta_nu_axis_mhz.len() / 2;
        let mut width = 0.0;
        for i in i0..self.delta_nu_axis_mhz.len() {
            let f = self.value(i, j0);
            if f >= threshold {
                width = self.delta_nu_axis_mhz[i];
            } else {
                if i > i0 {
                    let f_prev = self.value(i - 1, j0);
                    let x_prev = self.delta_nu_axis_mhz[i - 1];
                    let x = self.delta_nu_axis_mhz[i];
                    if f_prev > threshold && f_prev > f {
                        width = x_prev + (x - x_prev) * (f_prev - threshold) / (f_prev - f);
                    }
                }
                break;
            }
        }
        width
    }
}

/// Fixed-offset map from an arbitrary per-offset fidelity evaluator.
pub fn offset_fidelity_map_fn<F>(
    gate_name: &str,
    qubit_count: usize,
    grid: &GridSpec,
    eval: F,
) -> Result<FidelityGrid>
where
    F: Fn(NoiseOffset) -> Result<f64> + Sync,
{
    let (nu_axis, omega_axis) = grid.axes()?;
    let n_om = omega_axis.len();
    let values: Vec<f64> = (0..nu_axis.len() * n_om)
        .into_par_iter()
        .map(|idx| {
            let noise = NoiseOffset::new(nu_axis[idx / n_om], omega_axis[idx % n_om]);
            eval(noise).map_err(|e| {
                SimError::Numerical(format!(
                    "map aborted at (delta_nu = {} MHz, delta_omega = {}): {e}",
                    noise.delta_nu_mhz, noise.delta_omega
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityGrid {
        delta_nu_axis_mhz: nu_axis,
        delta_omega_axis: omega_axis,
        values,
        gate_name: gate_name.to_string(),
        qubit_count,
    })
}

/// Fixed-offset fidelity map of a calibrated program (one or two qubits; the
/// two-qubit case applies the same offsets to both qubits and is mainly a
/// diagnostic — the production two-qubit path is `offset_fidelity_grid4`).
pub fn offset_fidelity_map(
    program: &ControlProgram,
    grid: &GridSpec,
    cfg: &PropagationConfig,
    metric: FidelityMetric,
) -> Result<FidelityGrid> {
    let (nu_axis, omega_axis) = grid.axes()?;
    let n_om = omega_axis.len();
    let values: Vec<f64> = (0..nu_axis.len() * n_om)
        .into_par_iter()
        .map(|idx| -> Result<f64> {
            let noise = NoiseOffset::new(nu_axis[idx / n_om], omega_axis[idx % n_om]);
            let u = match program.dim {
                2 => crate::gates::propagate_single_qubit(program, noise, cfg),
                4 => propagate_two_qubit(program, (noise, noise), cfg),
                d => return Err(SimError::DimensionMismatch(d, 2)),
            }
            .map_err(|e| {
                SimError::Numerical(format!(
                    "map aborted at (delta_nu = {} MHz, delta_omega = {}): {e}",
                    noise.delta_nu_mhz, noise.delta_omega
                ))
            })?;
            score(&u, &program.target, metric)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityGrid {
        delta_nu_axis_mhz: nu_axis,
        delta_omega_axis: omega_axis,
        values,
        gate_name: program.name.clone(),
        qubit_count: if program.dim == 4 { 2 } else { 1 },
    })
}

/// Gaussian average of a fixed map with truncation bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct GaussianAverage {
    pub value: f64,
    /// Set when a σ exceeds half the grid half-width: the average is then
    /// dominated by the truncated tails.
    pub truncation_warning: bool,
}

/// Trapezoidal weights of a renormalised (possibly truncated) Gaussian on a
/// grid containing zero; σ = 0 degenerates to a delta at the zero node.
fn gaussian_weights(axis: &[f64], sigma: f64) -> Result<Vec<f64>> {
    if sigma < 0.0 {
        return Err(SimError::Domain(format!(
            "gaussian averaging needs sigma >= 0, got {sigma}"
        )));
    }
    let n = axis.len();
    let mut w = vec![0.0; n];
    if sigma == 0.0 {
        let zero = axis
            .iter()
            .position(|&x| x.abs() < 1e-12)
            .ok_or_else(|| SimError::Config("grid axis does not contain zero".into()))?;
        w[zero] = 1.0;
        return Ok(w);
    }
    for (i, &x) in axis.iter().enumerate() {
        let trapezoid = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        w[i] = trapezoid * (-0.5 * (x / sigma).powi(2)).exp();
    }
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(SimError::Numerical("gaussian weights vanished".into()));
    }
    for wi in &mut w {
        *wi /= total;
    }
    Ok(w)
}

/// Gaussian-averaged fidelity of a fixed map at noise levels `(σ_ν, σ_Ω)`.
pub fn gaussian_average(
    grid: &FidelityGrid,
    sigma_nu_mhz: f64,
    sigma_omega: f64,
) -> Result<GaussianAverage> {
    let w_nu = gaussian_weights(&grid.delta_nu_axis_mhz, sigma_nu_mhz)?;
    let w_om = gaussian_weights(&grid.delta_omega_axis, sigma_omega)?;
    let mut value = 0.0;
    for (i, wn) in w_nu.iter().enumerate() {
        if *wn == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for (j, wo) in w_om.iter().enumerate() {
            row += wo * grid.value(i, j);
        }
        value += wn * row;
    }
    let half_nu = grid.delta_nu_axis_mhz.last().copied().unwrap_or(0.0);
    let half_om = grid.delta_omega_axis.last().copied().unwrap_or(0.0);
    Ok(GaussianAverage {
        value,
        truncation_warning: sigma_nu_mhz > 0.5 * half_nu || sigma_omega > 0.5 * half_om,
    })
}

/// Gaussian-averaged fidelity swept over noise levels.
#[derive(Debug, Clone)]
pub struct NoiseLevelMap {
    pub sigma_nu_axis_mhz: Vec<f64>,
    pub sigma_omega_axis: Vec<f64>,
    /// Row-major `[i_sigma_nu][j_sigma_omega]`.
    pub values: Vec<f64>,
    pub infidelity: Vec<f64>,
    pub truncation_warnings: usize,
    pub gate_name: String,
}

impl NoiseLevelMap {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.sigma_omega_axis.len() + j]
    }
}

pub fn noise_level_map(
    grid: &FidelityGrid,
    sigma_nu_axis_mhz: &[f64],
    sigma_omega_axis: &[f64],
) -> Result<NoiseLevelMap> {
    let mut values = Vec::with_capacity(sigma_nu_axis_mhz.len() * sigma_omega_axis.len());
    let mut warnings = 0;
    for &sn in sigma_nu_axis_mhz {
        for &so in sigma_omega_axis {
            let avg = gaussian_average(grid, sn, so)?;
            if avg.truncation_warning {
                warnings += 1;
            }
            values.push(avg.value);
        }
    }
    Ok(NoiseLevelMap {
        sigma_nu_axis_mhz: sigma_nu_axis_mhz.to_vec(),
        sigma_omega_axis: sigma_omega_axis.to_vec(),
        infidelity: values.iter().map(|f| 1.0 - f).collect(),
        values,
        truncation_warnings: warnings,
        gate_name: grid.gate_name.clone(),
    })
}

/// Two-qubit fidelity tensor over `(δν₁, δν₂, δΩ₁, δΩ₂)` with shared axes
/// per noise type.
#[derive(Debug, Clone)]
pub struct FidelityGrid4 {
    pub delta_nu_axis_mhz: Vec<f64>,
    pub delta_omega_axis: Vec<f64>,
    /// Index order `[i_nu1][i_nu2][j_om1][j_om2]`, row-major.
    pub values: Vec<f64>,
    pub gate_name: String,
}

impl FidelityGrid4 {
    pub fn value(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> f64 {
        let n_om = self.delta_omega_axis.len();
        let n_nu = self.delta_nu_axis_mhz.len();
        self.values[((i1 * n_nu + i2) * n_om + j1) * n_om + j2]
    }

    pub fn zero_offset_value(&self) -> f64 {
        let i = self.delta_nu_axis_mhz.len() / 2;
        let j = self.delta_omega_axis.len() / 2;
        self.value(i, i, j, j)
    }
}

/// Four-dimensional offset map of a two-qubit program.
///
/// Exchange-free stretches factorize into per-qubit propagators, which are
/// cached per `(offset, part)`; only the short exchange pulses are propagated
/// densely per offset 4-tuple. Caching is an optimization only — the result
/// is identical to propagating every tuple from scratch.
pub fn offset_fidelity_grid4(
    program: &ControlProgram,
    grid: &GridSpec,
    cfg: &PropagationConfig,
    metric: FidelityMetric,
) -> Result<FidelityGrid4> {
    if program.dim != 4 {
        return Err(SimError::DimensionMismatch(program.dim, 4));
    }
    let (nu_axis, omega_axis) = grid.axes()?;
    let parts = program_parts(program)?;
    let n_nu = nu_axis.len();
    let n_om = omega_axis.len();

    // per-qubit factors for separable parts, indexed [part][i_nu][j_om]
    let factor_table = |qubit: usize| -> Result<Vec<Option<Vec<Unitary>>>> {
        parts
            .iter()
            .map(|part| match part {
                ProgramPart::Separable { .. } => {
                    let us: Result<Vec<Unitary>> = (0..n_nu * n_om)
                        .into_par_iter()
                        .map(|idx| {
                            let noise =
                                NoiseOffset::new(nu_axis[idx / n_om], omega_axis[idx % n_om]);
                            separable_factor(program, part, qubit, noise, cfg)
                        })
                        .collect();
                    Ok(Some(us?))
                }
                ProgramPart::Exchange { .. } => Ok(None),
            })
            .collect()
    };
    let factors_q1 = factor_table(0)?;
    let factors_q2 = factor_table(1)?;

    let values: Vec<f64> = (0..n_nu * n_nu * n_om * n_om)
        .into_par_iter()
        .map(|flat| -> Result<f64> {
            let j2 = flat % n_om;
            let j1 = (flat / n_om) % n_om;
            let i2 = (flat / (n_om * n_om)) % n_nu;
            let i1 = flat / (n_om * n_om * n_nu);
            let noise1 = NoiseOffset::new(nu_axis[i1], omega_axis[j1]);
            let noise2 = NoiseOffset::new(nu_axis[i2], omega_axis[j2]);
            let mut u = Unitary::identity(4);
            for (p, part) in parts.iter().enumerate() {
                let step = match part {
                    ProgramPart::Separable { .. } => {
                        let u1 = &factors_q1[p].as_ref().expect("separable factor")[i1 * n_om + j1];
                        let u2 = &factors_q2[p].as_ref().expect("separable factor")[i2 * n_om + j2];
                        u1.kron(u2)
                    }
                    ProgramPart::Exchange { .. } => {
                        exchange_propagator(program, part, (noise1, noise2), cfg)?
                    }
                };
                u = step.compose(&u)?;
            }
            score(&u, &program.target, metric)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityGrid4 {
        delta_nu_axis_mhz: nu_axis,
        delta_omega_axis: omega_axis,
        values,
        gate_name: program.name.clone(),
    })
}

/// Separable 4D Gaussian average with the same noise level on both qubits
/// (and none on the exchange coupling).
pub fn two_qubit_noise_average(
    grid4: &FidelityGrid4,
    sigma_nu_mhz: f64,
    sigma_omega: f64,
) -> Result<GaussianAverage> {
    let w_nu = gaussian_weights(&grid4.delta_nu_axis_mhz, sigma_nu_mhz)?;
    let w_om = gaussian_weights(&grid4.delta_omega_axis, sigma_omega)?;
    let n_nu = w_nu.len();
    let n_om = w_om.len();
    let mut value = 0.0;
    for i1 in 0..n_nu {
        if w_nu[i1] == 0.0 {
            continue;
        }
        for i2 in 0..n_nu {
            if w_nu[i2] == 0.0 {
                continue;
            }
            let mut block = 0.0;
            for j1 in 0..n_om {
                if w_om[j1] == 0.0 {
                    continue;
                }
                let mut row = 0.0;
                for j2 in 0..n_om {
                    row += w_om[j2] * grid4.value(i1, i2, j1, j2);
                }
                block += w_om[j1] * row;
            }
            value += w_nu[i1] * w_nu[i2] * block;
        }
    }
    let half_nu = grid4.delta_nu_axis_mhz.last().copied().unwrap_or(0.0);
    let half_om = grid4.delta_omega_axis.last().copied().unwrap_or(0.0);
    Ok(GaussianAverage {
        value,
        truncation_warning: sigma_nu_mhz > 0.5 * half_nu || sigma_omega > 0.5 * half_om,
    })
}

/// Two-qubit noise-level sweep (shared σ per noise type).
pub fn two_qubit_noise_level_map(
    grid4: &FidelityGrid4,
    sigma_nu_axis_mhz: &[f64],
    sigma_omega_axis: &[f64],
) -> Result<NoiseLevelMap> {
    let mut values = Vec::with_capacity(sigma_nu_axis_mhz.len() * sigma_omega_axis.len());
    let mut warnings = 0;
    for &sn in sigma_nu_axis_mhz {
        for &so in sigma_omega_axis {
            let avg = two_qubit_noise_average(grid4, sn, so)?;
            if avg.truncation_warning {
                warnings += 1;
            }
            values.push(avg.value);
        }
    }
    Ok(NoiseLevelMap {
        sigma_nu_axis_mhz: sigma_nu_axis_mhz.to_vec(),
        sigma_omega_axis: sigma_omega_axis.to_vec(),
        infidelity: values.iter().map(|f| 1.0 - f).collect(),
        values,
        truncation_warnings: warnings,
        gate_name: grid4.gate_name.clone(),
    })
}

/// Uniform σ grid from 0 to `max` inclusive.
pub fn sigma_axis(max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(SimError::Config("sigma axis needs at least 2 points".into()));
    }
    if max < 0.0 {
        return Err(SimError::Domain("sigma axis maximum must be >= 0".into()));
    }
    Ok((0..points)
        .map(|i| max * i as f64 / (points - 1) as f64)
        .collect())
}
