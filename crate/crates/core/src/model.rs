//! Control envelopes and single-qubit Hamiltonian assembly.
//!
//! All Hamiltonians are stored as `H/h` in MHz and times run in microseconds,
//! so a propagator phase is `exp(-i 2π (H/h) dt)`. Waveforms are analytic
//! closed forms; refining the integration step never re-reads sampled data.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::twoqubit::{SingletTripletHamiltonian, TwoQubitHamiltonian};

/// Time-dependent real control envelope, evaluated analytically in MHz.
#[derive(Debug, Clone, PartialEq)]
pub enum Waveform {
    Constant {
        amplitude_mhz: f64,
    },
    Sine {
        amplitude_mhz: f64,
        freq_mhz: f64,
        phase_rad: f64,
    },
    Cosine {
        amplitude_mhz: f64,
        freq_mhz: f64,
        phase_rad: f64,
    },
    /// `Σ_k ν_k (cos(2π k f_mod t) - 1)`: each harmonic carries a dc offset
    /// that forces the sum to start and end at zero on period boundaries.
    HarmonicSum {
        f_mod_mhz: f64,
        terms: Vec<(u32, f64)>,
    },
    /// Linear interpolation between knots; duplicated knot times encode jumps
    /// (right-continuous). Held constant outside the knot range.
    PiecewiseLinear {
        times_us: Vec<f64>,
        values_mhz: Vec<f64>,
    },
    /// `envelope(t) · 2 cos(2π f_carrier t)`, the explicit lab-frame carrier.
    CarrierProduct {
        envelope: Box<Waveform>,
        f_carrier_mhz: f64,
    },
    /// Pointwise sum of component waveforms.
    Sum(Vec<Waveform>),
}

impl Waveform {
    pub fn constant(amplitude_mhz: f64) -> Self {
        Waveform::Constant { amplitude_mhz }
    }

    pub fn zero() -> Self {
        Waveform::Constant { amplitude_mhz: 0.0 }
    }

    /// Evaluate the waveform at time `t` (µs), in MHz.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Waveform::Constant { amplitude_mhz } => *amplitude_mhz,
            Waveform::Sine {
                amplitude_mhz,
                freq_mhz,
                phase_rad,
            } => amplitude_mhz * (TAU * freq_mhz * t + phase_rad).sin(),
            Waveform::Cosine {
                amplitude_mhz,
                freq_mhz,
                phase_rad,
            } => amplitude_mhz * (TAU * freq_mhz * t + phase_rad).cos(),
            Waveform::HarmonicSum { f_mod_mhz, terms } => terms
                .iter()
                .map(|&(k, amp)| amp * ((TAU * k as f64 * f_mod_mhz * t).cos() - 1.0))
                .sum(),
            Waveform::PiecewiseLinear {
                times_us,
                values_mhz,
            } => {
                let n = times_us.len();
                // Index of the last knot with time <= t keeps jump knots
                // right-continuous.
                let idx = times_us.partition_point(|&x| x <= t);
                if idx == 0 {
                    values_mhz[0]
                } else if idx == n {
                    values_mhz[n - 1]
                } else {
                    let (t0, t1) = (times_us[idx - 1], times_us[idx]);
                    let (v0, v1) = (values_mhz[idx - 1], values_mhz[idx]);
                    if t1 <= t0 {
                        v0
                    } else {
                        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
                    }
                }
            }
            Waveform::CarrierProduct {
                envelope,
                f_carrier_mhz,
            } => envelope.eval(t) * 2.0 * (TAU * f_carrier_mhz * t).cos(),
            Waveform::Sum(parts) => parts.iter().map(|w| w.eval(t)).sum(),
        }
    }

    /// Natural repetition period of the waveform in µs, when one exists.
    pub fn natural_period_us(&self) -> Option<f64> {
        match self {
            Waveform::Constant { .. } => None,
            Waveform::Sine { freq_mhz, .. } | Waveform::Cosine { freq_mhz, .. } => {
                (*freq_mhz > 0.0).then(|| 1.0 / freq_mhz)
            }
            Waveform::HarmonicSum { f_mod_mhz, .. } => {
                (*f_mod_mhz > 0.0).then(|| 1.0 / f_mod_mhz)
            }
            Waveform::PiecewiseLinear { .. } => None,
            Waveform::CarrierProduct { f_carrier_mhz, .. } => {
                (*f_carrier_mhz > 0.0).then(|| 1.0 / f_carrier_mhz)
            }
            Waveform::Sum(parts) => parts
                .iter()
                .filter_map(|w| w.natural_period_us())
                .fold(None, |acc, p| Some(acc.map_or(p, |a: f64| a.max(p)))),
        }
    }

    /// Base modulation frequency, when the waveform is periodic.
    pub fn base_frequency_mhz(&self) -> Option<f64> {
        match self {
            Waveform::Sine { freq_mhz, .. } | Waveform::Cosine { freq_mhz, .. } => Some(*freq_mhz),
            Waveform::HarmonicSum { f_mod_mhz, .. } => Some(*f_mod_mhz),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Waveform::PiecewiseLinear {
            times_us,
            values_mhz,
        } = self
        {
            if times_us.is_empty() || times_us.len() != values_mhz.len() {
                return Err(SimError::Config(
                    "piecewise_linear requires equally many knot times and values".into(),
                ));
            }
            if times_us.windows(2).any(|w| w[1] < w[0]) {
                return Err(SimError::Config(
                    "piecewise_linear knot times must be non-decreasing".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Global drive variant: sine modulation (the baseline) or its cosine twin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Sine,
    Cosine,
}

/// Reference frame of a single-qubit Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Rotating,
    #[default]
    Dressed,
}

/// Frame bookkeeping for `build_hamiltonian`. Lab-frame construction needs the
/// carrier frequency; an optional Larmor baseline overrides resonance.
#[derive(Debug, Clone)]
pub struct QubitFrameSpec {
    pub frame: Frame,
    pub f_mw_mhz: Option<f64>,
    pub larmor: Option<Waveform>,
}

impl QubitFrameSpec {
    pub fn dressed() -> Self {
        QubitFrameSpec {
            frame: Frame::Dressed,
            f_mw_mhz: None,
            larmor: None,
        }
    }

    pub fn rotating() -> Self {
        QubitFrameSpec {
            frame: Frame::Rotating,
            f_mw_mhz: None,
            larmor: None,
        }
    }

    pub fn lab(f_mw_mhz: f64) -> Self {
        QubitFrameSpec {
            frame: Frame::Lab,
            f_mw_mhz: Some(f_mw_mhz),
            larmor: None,
        }
    }
}

/// Quasi-static noise realisation: a detuning offset in MHz and a fractional
/// drive-amplitude offset. The amplitude offset multiplies the drive as
/// `(1 + delta_omega)`; the detuning offset adds to the local control axis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseOffset {
    pub delta_nu_mhz: f64,
    pub delta_omega: f64,
}

impl NoiseOffset {
    pub const ZERO: NoiseOffset = NoiseOffset {
        delta_nu_mhz: 0.0,
        delta_omega: 0.0,
    };

    pub fn new(delta_nu_mhz: f64, delta_omega: f64) -> Self {
        NoiseOffset {
            delta_nu_mhz,
            delta_omega,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// One term of a two-level Hamiltonian: `scale · w(t) · σ_axis / 2`.
#[derive(Debug, Clone)]
pub struct TwoLevelTerm {
    pub axis: PauliAxis,
    pub waveform: Waveform,
    pub scale: f64,
}

/// `H/h = Σ_k scale_k · w_k(t) · σ_{axis_k} / 2`, in MHz.
#[derive(Debug, Clone)]
pub struct TwoLevelHamiltonian {
    pub terms: Vec<TwoLevelTerm>,
    /// Reference period used to choose the default integration step.
    pub reference_period_us: f64,
}

impl TwoLevelHamiltonian {
    pub fn new(terms: Vec<TwoLevelTerm>, reference_period_us: f64) -> Self {
        TwoLevelHamiltonian {
            terms,
            reference_period_us,
        }
    }

    /// Full Pauli coefficients `(cx, cy, cz)` such that `H/h = (c·σ)/2`.
    pub fn coefficients(&self, t: f64) -> Result<[f64; 3]> {
        let mut c = [0.0; 3];
        for term in &self.terms {
            let v = term.scale * term.waveform.eval(t);
            if !v.is_finite() {
                return Err(SimError::NonFiniteSample { t_us: t });
            }
            match term.axis {
                PauliAxis::X => c[0] += v,
                PauliAxis::Y => c[1] += v,
                PauliAxis::Z => c[2] += v,
            }
        }
        Ok(c)
    }
}

/// A time-dependent Hermitian generator of dimension 2, 4 or 5.
#[derive(Debug, Clone)]
pub enum HamiltonianSpec {
    TwoLevel(TwoLevelHamiltonian),
    TwoQubit(TwoQubitHamiltonian),
    SingletTriplet(SingletTripletHamiltonian),
}

impl HamiltonianSpec {
    pub fn dim(&self) -> usize {
        match self {
            HamiltonianSpec::TwoLevel(_) => 2,
            HamiltonianSpec::TwoQubit(_) => 4,
            HamiltonianSpec::SingletTriplet(_) => 5,
        }
    }

    pub fn reference_period_us(&self) -> f64 {
        match self {
            HamiltonianSpec::TwoLevel(h) => h.reference_period_us,
            HamiltonianSpec::TwoQubit(h) => h.reference_period_us,
            HamiltonianSpec::SingletTriplet(h) => h.reference_period_us,
        }
    }
}

/// Global drive envelope `Ω_R√2 sin(2π f_mod t)` (or the cosine twin). The √2
/// keeps the RMS power over integer periods equal to a constant drive `Ω_R`.
pub fn smart_envelope(omega_r_mhz: f64, f_mod_mhz: f64, variant: Variant) -> Result<Waveform> {
    if omega_r_mhz <= 0.0 {
        return Err(SimError::Domain(format!(
            "smart_envelope: omega_r must be positive, got {omega_r_mhz}"
        )));
    }
    if f_mod_mhz <= 0.0 {
        return Err(SimError::Domain(format!(
            "smart_envelope: f_mod must be positive, got {f_mod_mhz}"
        )));
    }
    let amplitude_mhz = omega_r_mhz * std::f64::consts::SQRT_2;
    Ok(match variant {
        Variant::Sine => Waveform::Sine {
            amplitude_mhz,
            freq_mhz: f_mod_mhz,
            phase_rad: 0.0,
        },
        Variant::Cosine => Waveform::Cosine {
            amplitude_mhz,
            freq_mhz: f_mod_mhz,
            phase_rad: 0.0,
        },
    })
}

/// Local Stark-shift control term `ν sin(2π k f_mod t + φ_mod)` for harmonic
/// `k ∈ {1, 2}`: the first harmonic spans the v-axis family, the second the
/// w-axis family.
pub fn local_control_term(
    harmonic: u32,
    nu_mhz: f64,
    phi_mod_rad: f64,
    f_mod_mhz: f64,
) -> Result<Waveform> {
    if !(harmonic == 1 || harmonic == 2) {
        return Err(SimError::Domain(format!(
            "local_control_term: harmonic must be 1 or 2, got {harmonic}"
        )));
    }
    Ok(Waveform::Sine {
        amplitude_mhz: nu_mhz,
        freq_mhz: harmonic as f64 * f_mod_mhz,
        phase_rad: phi_mod_rad,
    })
}

/// Assemble a single-qubit Hamiltonian in the requested frame.
///
/// Dressed frame: `H/h = ½[(1+δ_Ω)·global(t)·σ_z + (local(t)+δ_ν)·σ_x]`.
/// Rotating frame swaps the two axes. Lab frame carries the explicit
/// microwave factor `2cos(2π f_mw t)` on σ_x and the Larmor term on σ_z.
pub fn build_hamiltonian(
    frame: &QubitFrameSpec,
    global: &Waveform,
    local: &Waveform,
    noise: NoiseOffset,
) -> Result<HamiltonianSpec> {
    global.validate()?;
    local.validate()?;
    let period = global
        .natural_period_us()
        .or_else(|| local.natural_period_us())
        .unwrap_or(1.0);
    let drive_scale = 1.0 + noise.delta_omega;
    let terms = match frame.frame {
        Frame::Dressed => vec![
            TwoLevelTerm {
                axis: PauliAxis::Z,
                waveform: global.clone(),
                scale: drive_scale,
            },
            TwoLevelTerm {
                axis: PauliAxis::X,
                waveform: local.clone(),
                scale: 1.0,
            },
            TwoLevelTerm {
                axis: PauliAxis::X,
                waveform: Waveform::constant(noise.delta_nu_mhz),
                scale: 1.0,
            },
        ],
        Frame::Rotating => vec![
            TwoLevelTerm {
                axis: PauliAxis::X,
                waveform: global.clone(),
                scale: drive_scale,
            },
            TwoLevelTerm {
                axis: PauliAxis::Z,
                waveform: local.clone(),
                scale: 1.0,
            },
            TwoLevelTerm {
                axis: PauliAxis::Z,
                waveform: Waveform::constant(noise.delta_nu_mhz),
                scale: 1.0,
            },
        ],
        Frame::Lab => {
            let f_mw = frame.f_mw_mhz.ok_or_else(|| {
                SimError::Config("lab-frame Hamiltonian requires f_mw".into())
            })?;
            let larmor_base = frame
                .larmor
                .clone()
                .unwrap_or(Waveform::constant(f_mw));
            vec![
                TwoLevelTerm {
                    axis: PauliAxis::Z,
                    waveform: larmor_base,
                    scale: 1.0,
                },
                TwoLevelTerm {
                    axis: PauliAxis::Z,
                    waveform: local.clone(),
                    scale: 1.0,
                },
                TwoLevelTerm {
                    axis: PauliAxis::Z,
                    waveform: Waveform::constant(noise.delta_nu_mhz),
                    scale: 1.0,
                },
                TwoLevelTerm {
                    axis: PauliAxis::X,
                    waveform: Waveform::CarrierProduct {
                        envelope: Box::new(global.clone()),
                        f_carrier_mhz: f_mw,
                    },
                    scale: drive_scale,
                },
            ]
        }
    };
    Ok(HamiltonianSpec::TwoLevel(TwoLevelHamiltonian::new(
        terms, period,
    )))
}
