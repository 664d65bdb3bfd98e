//! Exchange-coupled two-qubit dynamics under the always-on global field, and
//! singlet-triplet initialisation/readout ramps.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Result, SimError};
use crate::gates::{
    build_gate, ControlProgram, ExchangePulse, Gate, Segment,
};
use crate::geometry::optimal_mod_frequency;
use crate::model::{
    build_hamiltonian, smart_envelope, HamiltonianSpec, NoiseOffset, QubitFrameSpec,
    TwoLevelHamiltonian, Variant, Waveform,
};
use crate::numerics::{
    propagate, propagate_slices, propagate_state_slices, pauli, PropagationConfig,
    TimeSlice, Unitary,
};

const GHZ_TO_MHZ: f64 = 1e3;

/// Shared-drive two-qubit Hamiltonian with isotropic Heisenberg exchange:
/// `H/h = h1 ⊗ I + I ⊗ h2 + (J(t)/4)(σxσx + σyσy + σzσz)`.
#[derive(Debug, Clone)]
pub struct TwoQubitHamiltonian {
    pub q1: TwoLevelHamiltonian,
    pub q2: TwoLevelHamiltonian,
    pub exchange: Waveform,
    pub reference_period_us: f64,
}

impl TwoQubitHamiltonian {
    pub fn matrix(&self, t: f64) -> Result<DMatrix<C64>> {
        let c1 = self.q1.coefficients(t)?;
        let c2 = self.q2.coefficients(t)?;
        let j = self.exchange.eval(t);
        if !j.is_finite() {
            return Err(SimError::NonFiniteSample { t_us: t });
        }
        let h1 = pauli_half(c1);
        let h2 = pauli_half(c2);
        let id = DMatrix::<C64>::identity(2, 2);
        let mut h = h1.kronecker(&id) + id.kronecker(&h2);
        if j != 0.0 {
            h += heisenberg() * C64::new(j / 4.0, 0.0);
        }
        Ok(h)
    }
}

fn pauli_half(c: [f64; 3]) -> DMatrix<C64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.5 * c[2], 0.0),
            C64::new(0.5 * c[0], -0.5 * c[1]),
            C64::new(0.5 * c[0], 0.5 * c[1]),
            C64::new(-0.5 * c[2], 0.0),
        ],
    )
}

fn heisenberg() -> DMatrix<C64> {
    let x = pauli::sigma_x();
    let y = pauli::sigma_y();
    let z = pauli::sigma_z();
    x.kronecker(&x) + y.kronecker(&y) + z.kronecker(&z)
}

/// Assemble the dressed-frame two-qubit Hamiltonian for one noise
/// realisation per qubit. Both qubits share the global envelope; a local
/// control whose modulation is incommensurate with it is rejected.
pub fn two_qubit_hamiltonian(
    global: &Waveform,
    local1: &Waveform,
    local2: &Waveform,
    exchange: Waveform,
    noise: (NoiseOffset, NoiseOffset),
) -> Result<HamiltonianSpec> {
    let f_mod = global.base_frequency_mhz();
    for (which, local) in [("1", local1), ("2", local2)] {
        if let (Some(f_g), Some(f_l)) = (f_mod, local.base_frequency_mhz()) {
            let ratio = f_l / f_g;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio < 0.99 {
                return Err(SimError::Config(format!(
                    "qubit {which} local modulation ({f_l} MHz) is not an harmonic of the global field ({f_g} MHz)"
                )));
            }
        }
    }
    let build = |local: &Waveform, n: NoiseOffset| -> Result<TwoLevelHamiltonian> {
        match build_hamiltonian(&QubitFrameSpec::dressed(), global, local, n)? {
            HamiltonianSpec::TwoLevel(h) => Ok(h),
            _ => unreachable!(),
        }
    };
    let period = global.natural_period_us().unwrap_or(1.0);
    Ok(HamiltonianSpec::TwoQubit(TwoQubitHamiltonian {
        q1: build(local1, noise.0)?,
        q2: build(local2, noise.1)?,
        exchange,
        reference_period_us: period,
    }))
}

/// Ideal √SWAP in the computational product basis.
pub fn sqrt_swap_target() -> Unitary {
    let h = C64::new(0.5, 0.5);
    let hc = C64::new(0.5, -0.5);
    let one = C64::new(1.0, 0.0);
    Unitary::from_matrix(DMatrix::from_row_slice(
        4,
        4,
        &[
            one, C64::ZERO, C64::ZERO, C64::ZERO,
            C64::ZERO, h, hc, C64::ZERO,
            C64::ZERO, hc, h, C64::ZERO,
            C64::ZERO, C64::ZERO, C64::ZERO, one,
        ],
    ))
    .expect("4x4")
}

pub fn swap_target() -> Unitary {
    let one = C64::new(1.0, 0.0);
    Unitary::from_matrix(DMatrix::from_row_slice(
        4,
        4,
        &[
            one, C64::ZERO, C64::ZERO, C64::ZERO,
            C64::ZERO, C64::ZERO, one, C64::ZERO,
            C64::ZERO, one, C64::ZERO, C64::ZERO,
            C64::ZERO, C64::ZERO, C64::ZERO, one,
        ],
    ))
    .expect("4x4")
}

pub fn cnot_target() -> Unitary {
    let one = C64::new(1.0, 0.0);
    Unitary::from_matrix(DMatrix::from_row_slice(
        4,
        4,
        &[
            one, C64::ZERO, C64::ZERO, C64::ZERO,
            C64::ZERO, one, C64::ZERO, C64::ZERO,
            C64::ZERO, C64::ZERO, C64::ZERO, one,
            C64::ZERO, C64::ZERO, one, C64::ZERO,
        ],
    ))
    .expect("4x4")
}

/// Default exchange pulse strength in MHz.
pub const DEFAULT_J0_MHZ: f64 = 20.0;

/// Square exchange pulse implementing √SWAP, centered on a zero crossing of
/// the global envelope and padded to one full modulation period. The drive is
/// collective, so it commutes with the exchange term and the pulse acts as a
/// clean partial swap.
pub fn sqrt_swap_program(
    j0_mhz: f64,
    omega_r_mhz: f64,
    variant: Variant,
    cfg: &PropagationConfig,
) -> Result<ControlProgram> {
    if j0_mhz <= 0.0 {
        return Err(SimError::Domain("sqrt_swap_program: j0 must be positive".into()));
    }
    let f_mod = optimal_mod_frequency(omega_r_mhz, 1)?;
    let t_mod = 1.0 / f_mod;
    let duration = 1.0 / (4.0 * j0_mhz);
    let center = match variant {
        Variant::Sine => 0.5 * t_mod,
        Variant::Cosine => 0.25 * t_mod,
    };
    let mut warnings = Vec::new();
    if j0_mhz <= 4.0 * omega_r_mhz {
        warnings.push(format!(
            "exchange pulse j0 = {j0_mhz} MHz is not fast relative to the drive ({omega_r_mhz} MHz)"
        ));
    }
    if duration > t_mod {
        return Err(SimError::Domain(format!(
            "sqrt_swap_program: pulse duration {duration} us exceeds one modulation period"
        )));
    }
    let program = ControlProgram {
        name: "sqrt_swap".into(),
        dim: 4,
        omega_r_mhz,
        f_mod_mhz: f_mod,
        variant,
        segments: vec![Segment::TwoQubit {
            local1: Waveform::zero(),
            local2: Waveform::zero(),
            exchange: Some(ExchangePulse {
                j0_mhz,
                center_us: center,
                duration_us: duration,
            }),
            n_periods: 1,
        }],
        target: sqrt_swap_target(),
        canonical_target: None,
        warnings,
    };
    let _ = cfg;
    Ok(program)
}

fn embed_single(gate1: Option<&ControlProgram>, gate2: Option<&ControlProgram>) -> Result<Segment> {
    let n1 = gate1.map(|g| g.n_periods_total());
    let n2 = gate2.map(|g| g.n_periods_total());
    let n = match (n1, n2) {
        (Some(a), Some(b)) if a != b => {
            return Err(SimError::Config(
                "simultaneous single-qubit blocks must share the same duration".into(),
            ))
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(SimError::Config("empty single-qubit block".into())),
    };
    let extract_local = |g: &ControlProgram| -> Result<Waveform> {
        if g.segments.len() != 1 {
            return Err(SimError::Config(
                "composite factors must be single-segment programs".into(),
            ));
        }
        match &g.segments[0] {
            Segment::SingleQubit { local, .. } => Ok(local.clone()),
            _ => Err(SimError::Config("expected a single-qubit segment".into())),
        }
    };
    Ok(Segment::TwoQubit {
        local1: gate1.map(extract_local).transpose()?.unwrap_or(Waveform::zero()),
        local2: gate2.map(extract_local).transpose()?.unwrap_or(Waveform::zero()),
        exchange: None,
        n_periods: n,
    })
}

fn single_target_kron(
    gate1: Option<&ControlProgram>,
    gate2: Option<&ControlProgram>,
) -> Unitary {
    let id = Unitary::identity(2);
    let t1 = gate1.map(|g| g.target.clone()).unwrap_or_else(|| id.clone());
    let t2 = gate2.map(|g| g.target.clone()).unwrap_or(id);
    t1.kron(&t2)
}

/// Composite sequence builder shared by the CNOT-family constructors.
fn compose_sequence(
    name: &str,
    factors: Vec<(Option<ControlProgram>, Option<ControlProgram>, bool)>,
    canonical: Option<Unitary>,
    j0_mhz: f64,
    omega_r_mhz: f64,
    variant: Variant,
    cfg: &PropagationConfig,
) -> Result<ControlProgram> {
    let swap = sqrt_swap_program(j0_mhz, omega_r_mhz, variant, cfg)?;
    let mut segments = Vec::new();
    let mut target = Unitary::identity(4);
    let mut warnings = Vec::new();
    for (g1, g2, is_swap) in &factors {
        if *is_swap {
            segments.extend(swap.segments.iter().cloned());
            target = swap.target.compose(&target)?;
            warnings.extend(swap.warnings.iter().cloned());
        } else {
            segments.push(embed_single(g1.as_ref(), g2.as_ref())?);
            target = single_target_kron(g1.as_ref(), g2.as_ref()).compose(&target)?;
        }
    }
    Ok(ControlProgram {
        name: name.into(),
        dim: 4,
        omega_r_mhz,
        f_mod_mhz: swap.f_mod_mhz,
        variant,
        segments,
        target,
        canonical_target: canonical,
        warnings,
    })
}

/// The five-block CNOT sequence `(√Y†⊗I), √SWAP, (√X†⊗√X), √SWAP, (√Y⊗I)`
/// (listed in execution order) with every block running under the continuous
/// global field. The ideal factor product equals the computational-basis
/// CNOT with qubit 1 as control, stored both as target and canonical target.
pub fn compose_cnot(
    n_single: u32,
    j0_mhz: f64,
    omega_r_mhz: f64,
    variant: Variant,
    cfg: &PropagationConfig,
) -> Result<ControlProgram> {
    let y = build_gate(Gate::SqrtY, n_single, variant, omega_r_mhz, cfg)?;
    let yd = build_gate(Gate::SqrtYDag, n_single, variant, omega_r_mhz, cfg)?;
    let x = build_gate(Gate::SqrtX, n_single, variant, omega_r_mhz, cfg)?;
    let xd = build_gate(Gate::SqrtXDag, n_single, variant, omega_r_mhz, cfg)?;
    compose_sequence(
        "cnot",
        vec![
            (Some(yd), None, false),
            (None, None, true),
            (Some(xd), Some(x), false),
            (None, None, true),
            (Some(y), None, false),
        ],
        Some(cnot_target()),
        j0_mhz,
        omega_r_mhz,
        variant,
        cfg,
    )
}

/// Ideal x-basis-controlled NOT: the CNOT conjugated by the √Y that maps the
/// control's conditioning axis from z onto x.
pub fn cnot_x_target() -> Unitary {
    let id = Unitary::identity(2);
    let y = pauli::rotation([0.0, 1.0, 0.0], std::f64::consts::FRAC_PI_2).kron(&id);
    let yd = pauli::rotation([0.0, 1.0, 0.0], -std::f64::consts::FRAC_PI_2).kron(&id);
    yd.compose(&cnot_target())
        .expect("4x4")
        .compose(&y)
        .expect("4x4")
}

/// `√SWAP, (√X†⊗√X), √SWAP` (execution order): a NOT on the target qubit
/// conditioned on the control qubit along the x axis.
pub fn compose_cnot_x(
    n_single: u32,
    j0_mhz: f64,
    omega_r_mhz: f64,
    variant: Variant,
    cfg: &PropagationConfig,
) -> Result<ControlProgram> {
    let x = build_gate(Gate::SqrtX, n_single, variant, omega_r_mhz, cfg)?;
    let xd = build_gate(Gate::SqrtXDag, n_single, variant, omega_r_mhz, cfg)?;
    compose_sequence(
        "cnot_x",
        vec![
            (None, None, true),
            (Some(xd), Some(x), false),
            (None, None, true),
        ],
        Some(cnot_x_target()),
        j0_mhz,
        omega_r_mhz,
        variant,
        cfg,
    )
}

/// A contiguous piece of a two-qubit program: either exchange-free (the
/// propagator factorizes into per-qubit parts) or a constant exchange pulse.
#[derive(Debug, Clone)]
pub enum ProgramPart {
    Separable {
        t0: f64,
        t1: f64,
        local1: Waveform,
        local2: Waveform,
    },
    Exchange {
        t0: f64,
        t1: f64,
        j0_mhz: f64,
        local1: Waveform,
        local2: Waveform,
    },
}

impl ProgramPart {
    pub fn interval(&self) -> (f64, f64) {
        match self {
            ProgramPart::Separable { t0, t1, .. } | ProgramPart::Exchange { t0, t1, .. } => {
                (*t0, *t1)
            }
        }
    }
}

/// Split a two-qubit program at its exchange-pulse boundaries.
pub fn program_parts(program: &ControlProgram) -> Result<Vec<ProgramPart>> {
    if program.dim != 4 {
        return Err(SimError::DimensionMismatch(program.dim, 4));
    }
    let t_mod = program.t_mod_us();
    let mut parts = Vec::new();
    let mut t = 0.0;
    for segment in &program.segments {
        let Segment::TwoQubit {
            local1,
            local2,
            exchange,
            n_periods,
        } = segment
        else {
            return Err(SimError::Config(
                "single-qubit segment in a two-qubit program".into(),
            ));
        };
        let t_end = t + *n_periods as f64 * t_mod;
        match exchange {
            None => parts.push(ProgramPart::Separable {
                t0: t,
                t1: t_end,
                local1: local1.clone(),
                local2: local2.clone(),
            }),
            Some(pulse) => {
                let p0 = t + pulse.center_us - 0.5 * pulse.duration_us;
                let p1 = t + pulse.center_us + 0.5 * pulse.duration_us;
                if p0 < t || p1 > t_end {
                    return Err(SimError::Config(
                        "exchange pulse does not fit inside its segment".into(),
                    ));
                }
                if p0 > t {
                    parts.push(ProgramPart::Separable {
                        t0: t,
                        t1: p0,
                        local1: local1.clone(),
                        local2: local2.clone(),
                    });
                }
                parts.push(ProgramPart::Exchange {
                    t0: p0,
                    t1: p1,
                    j0_mhz: pulse.j0_mhz,
                    local1: local1.clone(),
                    local2: local2.clone(),
                });
                if p1 < t_end {
                    parts.push(ProgramPart::Separable {
                        t0: p1,
                        t1: t_end,
                        local1: local1.clone(),
                        local2: local2.clone(),
                    });
                }
            }
        }
        t = t_end;
    }
    Ok(parts)
}

/// Single-qubit propagator of a separable part for one qubit.
pub fn separable_factor(
    program: &ControlProgram,
    part: &ProgramPart,
    qubit: usize,
    noise: NoiseOffset,
    cfg: &PropagationConfig,
) -> Result<Unitary> {
    let ProgramPart::Separable { t0, t1, local1, local2 } = part else {
        return Err(SimError::Config("separable_factor on an exchange part".into()));
    };
    let local = match qubit {
        0 => local1,
        1 => local2,
        other => return Err(SimError::Domain(format!("qubit index {other} out of range"))),
    };
    let global = smart_envelope(program.omega_r_mhz, program.f_mod_mhz, program.variant)?;
    let h = build_hamiltonian(&QubitFrameSpec::dressed(), &global, local, noise)?;
    propagate(&h, *t0, *t1, cfg)
}

/// Dense 4x4 propagator of an exchange part.
pub fn exchange_propagator(
    program: &ControlProgram,
    part: &ProgramPart,
    noise: (NoiseOffset, NoiseOffset),
    cfg: &PropagationConfig,
) -> Result<Unitary> {
    let ProgramPart::Exchange { t0, t1, j0_mhz, local1, local2 } = part else {
        return Err(SimError::Config("exchange_propagator on a separable part".into()));
    };
    let global = smart_envelope(program.omega_r_mhz, program.f_mod_mhz, program.variant)?;
    let h = two_qubit_hamiltonian(
        &global,
        local1,
        local2,
        Waveform::constant(*j0_mhz),
        noise,
    )?;
    let dt_target = program.t_mod_us() / cfg.steps_per_period as f64;
    let steps = (((t1 - t0) / dt_target).ceil() as usize).max(32);
    propagate_slices(
        &h,
        &[TimeSlice {
            t_start: *t0,
            t_end: *t1,
            steps,
        }],
    )
}

/// Propagate a two-qubit program under a per-qubit noise pair.
pub fn propagate_two_qubit(
    program: &ControlProgram,
    noise: (NoiseOffset, NoiseOffset),
    cfg: &PropagationConfig,
) -> Result<Unitary> {
    let mut u = Unitary::identity(4);
    for part in program_parts(program)? {
        let step = match &part {
            ProgramPart::Separable { .. } => {
                let u1 = separable_factor(program, &part, 0, noise.0, cfg)?;
                let u2 = separable_factor(program, &part, 1, noise.1, cfg)?;
                u1.kron(&u2)
            }
            ProgramPart::Exchange { .. } => exchange_propagator(program, &part, noise, cfg)?,
        };
        u = step.compose(&u)?;
    }
    Ok(u)
}

/// Basis order of the five-level singlet-triplet model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StState {
    TPlus,
    T0,
    TMinus,
    S11,
    S02,
}

impl StState {
    pub fn index(&self) -> usize {
        match self {
            StState::TPlus => 0,
            StState::T0 => 1,
            StState::TMinus => 2,
            StState::S11 => 3,
            StState::S02 => 4,
        }
    }
}

/// Five-level singlet-triplet Hamiltonian in the basis
/// `(T+, T0, T-, S(1,1), S(0,2))`, rotating frame, MHz units:
/// collective drive `Ω(t)/√2` on `T± ↔ T0`, detuning sum on the `T±`
/// diagonal, detuning difference coupling `S(1,1) ↔ T0`, tunnel coupling
/// `t_c` on `S(1,1) ↔ S(0,2)` and charge detuning `-ε(t)` on `S(0,2)`.
#[derive(Debug, Clone)]
pub struct SingletTripletHamiltonian {
    pub envelope: Waveform,
    pub eps_mhz: Waveform,
    pub t_c_mhz: f64,
    pub dnu1_mhz: f64,
    pub dnu2_mhz: f64,
    pub reference_period_us: f64,
}

impl SingletTripletHamiltonian {
    pub fn matrix(&self, t: f64) -> Result<DMatrix<C64>> {
        let omega = self.envelope.eval(t);
        let eps = self.eps_mhz.eval(t);
        if !omega.is_finite() || !eps.is_finite() {
            return Err(SimError::NonFiniteSample { t_us: t });
        }
        let s = 0.5 * (self.dnu1_mhz + self.dnu2_mhz);
        let m = 0.5 * (self.dnu1_mhz - self.dnu2_mhz);
        let d = omega / std::f64::consts::SQRT_2;
        let r = |x: f64| C64::new(x, 0.0);
        Ok(DMatrix::from_row_slice(
            5,
            5,
            &[
                r(s), r(d), r(0.0), r(0.0), r(0.0),
                r(d), r(0.0), r(d), r(m), r(0.0),
                r(0.0), r(d), r(-s), r(0.0), r(0.0),
                r(0.0), r(m), r(0.0), r(0.0), r(self.t_c_mhz),
                r(0.0), r(0.0), r(0.0), r(self.t_c_mhz), r(-eps),
            ],
        ))
    }
}

/// Singlet-triplet system description in the units the ramp experiments are
/// quoted in (charge quantities in GHz, spin quantities in MHz).
#[derive(Debug, Clone)]
pub struct STSystem {
    pub envelope: Waveform,
    pub t_c_ghz: f64,
    pub dnu1_mhz: f64,
    pub dnu2_mhz: f64,
    /// Total simulated window (2 T_mod for the modulated drive).
    pub window_us: f64,
    pub reference_period_us: f64,
}

pub const DEFAULT_T_C_GHZ: f64 = 0.5;

impl STSystem {
    /// Modulated-drive system over a `2 T_mod` window.
    pub fn smart(omega_r_mhz: f64, dnu1_mhz: f64, dnu2_mhz: f64, t_c_ghz: f64) -> Result<Self> {
        let f_mod = optimal_mod_frequency(omega_r_mhz, 1)?;
        let t_mod = 1.0 / f_mod;
        Ok(STSystem {
            envelope: smart_envelope(omega_r_mhz, f_mod, Variant::Sine)?,
            t_c_ghz,
            dnu1_mhz,
            dnu2_mhz,
            window_us: 2.0 * t_mod,
            reference_period_us: t_mod,
        })
    }

    /// Constant-drive comparison system over a `2 / Ω_R` window.
    pub fn dressed(omega_r_mhz: f64, dnu1_mhz: f64, dnu2_mhz: f64, t_c_ghz: f64) -> Result<Self> {
        if omega_r_mhz <= 0.0 {
            return Err(SimError::Domain("dressed STSystem: omega_r must be positive".into()));
        }
        Ok(STSystem {
            envelope: Waveform::constant(omega_r_mhz),
            t_c_ghz,
            dnu1_mhz,
            dnu2_mhz,
            window_us: 2.0 / omega_r_mhz,
            reference_period_us: 1.0 / omega_r_mhz,
        })
    }

    fn hamiltonian(&self, eps_mhz: Waveform) -> SingletTripletHamiltonian {
        SingletTripletHamiltonian {
            envelope: self.envelope.clone(),
            eps_mhz,
            t_c_mhz: self.t_c_ghz * GHZ_TO_MHZ,
            dnu1_mhz: self.dnu1_mhz,
            dnu2_mhz: self.dnu2_mhz,
            reference_period_us: self.reference_period_us,
        }
    }

    pub fn with_detunings(&self, dnu1_mhz: f64, dnu2_mhz: f64) -> STSystem {
        STSystem {
            dnu1_mhz,
            dnu2_mhz,
            ..self.clone()
        }
    }
}

/// Instantaneous eigenvalues (GHz, ascending) of the five-level system over a
/// charge-detuning grid, with the drive envelope frozen at `eval_time_us`.
pub fn st_energy_diagram(
    sys: &STSystem,
    eps_grid_ghz: &[f64],
    eval_time_us: f64,
) -> Result<Vec<(f64, [f64; 5])>> {
    eps_grid_ghz
        .iter()
        .map(|&eps| {
            let h = sys.hamiltonian(Waveform::constant(eps * GHZ_TO_MHZ));
            let m = h.matrix(eval_time_us)?;
            let (mut ev, _) = crate::numerics::hermitian_eigen(m)?;
            ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
            Ok((
                eps,
                [
                    ev[0] / GHZ_TO_MHZ,
                    ev[1] / GHZ_TO_MHZ,
                    ev[2] / GHZ_TO_MHZ,
                    ev[3] / GHZ_TO_MHZ,
                    ev[4] / GHZ_TO_MHZ,
                ],
            ))
        })
        .collect()
}

/// Minimum adjacent-level gap (GHz) over a charge-detuning range, refined by
/// golden-section search around the coarse-scan minimum.
pub fn st_min_gap(
    sys: &STSystem,
    eps_lo_ghz: f64,
    eps_hi_ghz: f64,
    eval_time_us: f64,
) -> Result<(f64, f64)> {
    let gap_at = |eps: f64| -> Result<f64> {
        let h = sys.hamiltonian(Waveform::constant(eps * GHZ_TO_MHZ));
        let m = h.matrix(eval_time_us)?;
        let (mut ev, _) = crate::numerics::hermitian_eigen(m)?;
        ev.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        // gap between the two levels nearest zero energy captures the
        // singlet-triplet crossing region
        let mut best = f64::INFINITY;
        for w in ev.windows(2) {
            best = best.min(w[1] - w[0]);
        }
        Ok(best / GHZ_TO_MHZ)
    };
    let n = 600;
    let mut best = (eps_lo_ghz, f64::INFINITY);
    for k in 0..=n {
        let eps = eps_lo_ghz + (eps_hi_ghz - eps_lo_ghz) * k as f64 / n as f64;
        let g = gap_at(eps)?;
        if g < best.1 {
            best = (eps, g);
        }
    }
    let span = (eps_hi_ghz - eps_lo_ghz) / n as f64;
    let (mut a, mut b) = (best.0 - span, best.0 + span);
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = gap_at(c)?;
    let mut fd = gap_at(d)?;
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = gap_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = gap_at(d)?;
        }
    }
    let eps = 0.5 * (a + b);
    Ok((eps, gap_at(eps)?))
}

/// Where the charge-detuning ramp sits relative to the drive envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RampCase {
    /// Centered on a zero of the drive envelope.
    A,
    /// Centered on an extremum of the drive envelope.
    B,
}

/// Charge-detuning ramp profile: park deep in the final charge configuration
/// on both sides, step instantaneously to the ramp range, and traverse the
/// stated range with a linear ramp of duration `ramp_time_us`.
#[derive(Debug, Clone, Copy)]
pub struct RampSpec {
    pub ramp_time_us: f64,
    pub ramp_from_ghz: f64,
    pub ramp_to_ghz: f64,
    pub park_from_ghz: f64,
    pub park_to_ghz: f64,
    pub centering: RampCase,
}

pub const DEFAULT_RAMP_FROM_GHZ: f64 = 50.0;
pub const DEFAULT_RAMP_TO_GHZ: f64 = -50.0;
pub const DEFAULT_PARK_FROM_GHZ: f64 = 5000.0;
pub const DEFAULT_PARK_TO_GHZ: f64 = -5000.0;

impl RampSpec {
    pub fn with_defaults(ramp_time_us: f64, centering: RampCase) -> Self {
        RampSpec {
            ramp_time_us,
            ramp_from_ghz: DEFAULT_RAMP_FROM_GHZ,
            ramp_to_ghz: DEFAULT_RAMP_TO_GHZ,
            park_from_ghz: DEFAULT_PARK_FROM_GHZ,
            park_to_ghz: DEFAULT_PARK_TO_GHZ,
            centering,
        }
    }

    fn reversed(&self) -> RampSpec {
        RampSpec {
            ramp_time_us: self.ramp_time_us,
            ramp_from_ghz: self.ramp_to_ghz,
            ramp_to_ghz: self.ramp_from_ghz,
            park_from_ghz: self.park_to_ghz,
            park_to_ghz: self.park_from_ghz,
            centering: self.centering,
        }
    }

    /// Ramp midpoint in the window: case A sits on an envelope zero, case B
    /// on an envelope extremum (constant drives center mid-window).
    fn center_us(&self, sys: &STSystem) -> f64 {
        let t_mod = sys.reference_period_us;
        match &sys.envelope {
            Waveform::Sine { .. } => match self.centering {
                RampCase::A => t_mod,
                RampCase::B => 1.25 * t_mod,
            },
            _ => 0.5 * sys.window_us,
        }
    }
}

/// Populations after one ramp run.
#[derive(Debug, Clone, Copy)]
pub struct RampPoint {
    pub ramp_time_us: f64,
    pub dnu1_mhz: f64,
    pub dnu2_mhz: f64,
    pub p_s02: f64,
    pub p_s11: f64,
}

fn eps_profile(spec: &RampSpec, center: f64, window: f64) -> Result<(Waveform, f64, f64)> {
    let rt = spec.ramp_time_us;
    if rt < 0.0 {
        return Err(SimError::Domain("ramp_time must be non-negative".into()));
    }
    let t0 = center - 0.5 * rt;
    let t1 = center + 0.5 * rt;
    if t0 < 0.0 || t1 > window {
        return Err(SimError::Domain(format!(
            "ramp of {rt} us centered at {center} us exceeds the {window} us window"
        )));
    }
    let (p_hi, r_hi, r_lo, p_lo) = (
        spec.park_from_ghz * GHZ_TO_MHZ,
        spec.ramp_from_ghz * GHZ_TO_MHZ,
        spec.ramp_to_ghz * GHZ_TO_MHZ,
        spec.park_to_ghz * GHZ_TO_MHZ,
    );
    let wf = if rt == 0.0 {
        Waveform::PiecewiseLinear {
            times_us: vec![0.0, t0, t0, window],
            values_mhz: vec![p_hi, p_hi, p_lo, p_lo],
        }
    } else {
        Waveform::PiecewiseLinear {
            times_us: vec![0.0, t0, t0, t1, t1, window],
            values_mhz: vec![p_hi, p_hi, r_hi, r_lo, p_lo, p_lo],
        }
    };
    Ok((wf, t0, t1))
}

/// Time slices for the ramp window: step boundaries align with the profile
/// breakpoints and the traversal of the tunnel-coupling anticrossing is
/// resolved by phase-capped substeps.
fn ramp_slices(
    spec: &RampSpec,
    sys: &STSystem,
    eps: &Waveform,
    t0: f64,
    t1: f64,
    cfg: &PropagationConfig,
) -> Vec<TimeSlice> {
    let window = sys.window_us;
    let dt_base = sys.reference_period_us / cfg.steps_per_period as f64;
    let t_c_mhz = sys.t_c_ghz * GHZ_TO_MHZ;
    let mut slices = Vec::new();
    let push_uniform = |slices: &mut Vec<TimeSlice>, a: f64, b: f64| {
        if b > a {
            let steps = (((b - a) / dt_base).ceil() as usize).max(1);
            slices.push(TimeSlice {
                t_start: a,
                t_end: b,
                steps,
            });
        }
    };
    push_uniform(&mut slices, 0.0, t0);
    // ramp portion: refine wherever the charge detuning is comparable to the
    // tunnel coupling, capping the per-step phase
    if t1 > t0 {
        let n = (((t1 - t0) / dt_base).ceil() as usize).max(1);
        let h = (t1 - t0) / n as f64;
        for k in 0..n {
            let a = t0 + k as f64 * h;
            let b = a + h;
            let eps_mid = eps.eval(0.5 * (a + b)).abs();
            let steps = if eps_mid < 8.0 * t_c_mhz {
                let phase = std::f64::consts::TAU * eps_mid.max(t_c_mhz) * h;
                ((phase / 0.5).ceil() as usize).max(1)
            } else {
                1
            };
            slices.push(TimeSlice {
                t_start: a,
                t_end: b,
                steps,
            });
        }
    }
    push_uniform(&mut slices, t1, window);
    let _ = spec;
    slices
}

fn run_ramp(
    sys: &STSystem,
    spec: &RampSpec,
    initial: StState,
    cfg: &PropagationConfig,
) -> Result<(f64, f64, f64)> {
    let center = spec.center_us(sys);
    let (eps, t0, t1) = eps_profile(spec, center, sys.window_us)?;
    let slices = ramp_slices(spec, sys, &eps, t0, t1, cfg);
    let h = HamiltonianSpec::SingletTriplet(sys.hamiltonian(eps));
    let mut psi0 = vec![C64::ZERO; 5];
    psi0[initial.index()] = C64::new(1.0, 0.0);
    let psi = propagate_state_slices(&h, &slices, &psi0)?;
    let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(SimError::Numerical(format!(
            "five-level norm drifted to {norm}"
        )));
    }
    Ok((
        psi[StState::S02.index()].norm_sqr(),
        psi[StState::S11.index()].norm_sqr(),
        norm,
    ))
}

/// Initialisation sweep: starting from `S(0,2)`, ramp the charge detuning for
/// every requested ramp time and detuning pair; returns final `S(0,2)` and
/// `S(1,1)` populations.
pub fn ramp_initialisation(
    sys: &STSystem,
    spec: &RampSpec,
    ramp_times_us: &[f64],
    detuning_pairs_mhz: &[(f64, f64)],
    cfg: &PropagationConfig,
) -> Result<Vec<RampPoint>> {
    let jobs: Vec<(f64, (f64, f64))> = ramp_times_us
        .iter()
        .flat_map(|&rt| detuning_pairs_mhz.iter().map(move |&p| (rt, p)))
        .collect();
    jobs.par_iter()
        .map(|&(rt, (d1, d2))| {
            let sys = sys.with_detunings(d1, d2);
            let spec = RampSpec {
                ramp_time_us: rt,
                ..*spec
            };
            let (p_s02, p_s11, _) = run_ramp(&sys, &spec, StState::S02, cfg)?;
            Ok(RampPoint {
                ramp_time_us: rt,
                dnu1_mhz: d1,
                dnu2_mhz: d2,
                p_s02,
                p_s11,
            })
        })
        .collect()
}

/// Readout sweep: the time-reversed charge profile, starting from a `(1,1)`
/// state (default `S(1,1)`); `p_s02` is the singlet return probability.
pub fn ramp_readout(
    sys: &STSystem,
    spec: &RampSpec,
    ramp_times_us: &[f64],
    detuning_pairs_mhz: &[(f64, f64)],
    initial: StState,
    cfg: &PropagationConfig,
) -> Result<Vec<RampPoint>> {
    let reversed = spec.reversed();
    let jobs: Vec<(f64, (f64, f64))> = ramp_times_us
        .iter()
        .flat_map(|&rt| detuning_pairs_mhz.iter().map(move |&p| (rt, p)))
        .collect();
    jobs.par_iter()
        .map(|&(rt, (d1, d2))| {
            let sys = sys.with_detunings(d1, d2);
            let spec = RampSpec {
                ramp_time_us: rt,
                ..reversed
            };
            let (p_s02, p_s11, _) = run_ramp(&sys, &spec, initial, cfg)?;
            Ok(RampPoint {
                ramp_time_us: rt,
                dnu1_mhz: d1,
                dnu2_mhz: d2,
                p_s02,
                p_s11,
            })
        })
        .collect()
}
