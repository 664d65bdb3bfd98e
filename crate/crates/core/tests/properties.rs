//! Cross-module invariants: determinism, analytic oracles and structural
//! properties that span more than one module.

mod common;

use smartspin::gates::{
    axis_maps, build_gate, grape_optimize, propagate_single_qubit, Gate, XyGate,
};
use smartspin::geometry::optimal_mod_frequency;
use smartspin::model::{
    build_hamiltonian, NoiseOffset, QubitFrameSpec, Variant, Waveform,
};
use smartspin::noisemaps::{
    gaussian_average, noise_level_map, offset_fidelity_map, offset_fidelity_map_fn, sigma_axis,
    GridSpec,
};
use smartspin::numerics::{fidelity, propagate, FidelityMetric, PropagationConfig, Unitary};
use smartspin::twoqubit::{
    ramp_initialisation, ramp_readout, RampCase, RampSpec, STSystem, StState, DEFAULT_T_C_GHZ,
};

fn cfg() -> PropagationConfig {
    PropagationConfig::default()
}

#[test]
fn bare_identity_map_matches_the_free_evolution_formula() {
    // analytic oracle: a bare qubit with a detuning offset dephases as
    // cos^2(pi dnu t); amplitude offsets are inert without a drive
    let duration = 10.0;
    let grid = offset_fidelity_map_fn(
        "bare",
        1,
        &GridSpec {
            delta_nu_max_mhz: 0.1,
            delta_nu_points: 9,
            delta_omega_max: 0.3,
            delta_omega_points: 5,
        },
        |noise| {
            let h = build_hamiltonian(
                &QubitFrameSpec::dressed(),
                &Waveform::zero(),
                &Waveform::zero(),
                noise,
            )?;
            let u = propagate(&h, 0.0, duration, &PropagationConfig::with_steps(64))?;
            fidelity(&u, &Unitary::identity(2))
        },
    )
    .unwrap();
    for (i, &dnu) in grid.delta_nu_axis_mhz.iter().enumerate() {
        let expect = (std::f64::consts::PI * dnu * duration).cos().powi(2);
        for j in 0..grid.delta_omega_axis.len() {
            assert!(
                (grid.value(i, j) - expect).abs() < 1e-9,
                "dnu = {dnu}: {} vs {expect}",
                grid.value(i, j)
            );
        }
    }
    // dnu = 0.05 MHz over 10 us sits exactly at the cos^2(pi/2) = 0 node
    let f = {
        let h = build_hamiltonian(
            &QubitFrameSpec::dressed(),
            &Waveform::zero(),
            &Waveform::zero(),
            NoiseOffset::new(0.05, 0.0),
        )
        .unwrap();
        let u = propagate(&h, 0.0, duration, &PropagationConfig::with_steps(64)).unwrap();
        fidelity(&u, &Unitary::identity(2)).unwrap()
    };
    assert!(f < 1e-9, "node fidelity {f}");
}

#[test]
fn grape_is_deterministic_for_a_fixed_seed() {
    let cfg = PropagationConfig::with_steps(512);
    let a = grape_optimize(XyGate::SqrtY, 2, Variant::Sine, 1.0, &cfg, 123).unwrap();
    let b = grape_optimize(XyGate::SqrtY, 2, Variant::Sine, 1.0, &cfg, 123).unwrap();
    assert_eq!(a.nu_v_mhz.to_bits(), b.nu_v_mhz.to_bits());
    assert_eq!(a.nu_w_mhz.to_bits(), b.nu_w_mhz.to_bits());
}

#[test]
fn efficiency_stays_below_the_ceiling_on_axis_grids() {
    let cfg = PropagationConfig::with_steps(512);
    let nus: Vec<f64> = (1..=12).map(|i| i as f64 * 0.08).collect();
    let phis: Vec<f64> = (0..12).map(|i| std::f64::consts::TAU * i as f64 / 11.0).collect();
    for harmonic in [1, 2] {
        let maps = axis_maps(&nus, &phis, harmonic, 1.0, &cfg).unwrap();
        for &eta in &maps.eta_percent {
            assert!(eta <= 100.0 + 1e-9, "eta = {eta}");
        }
    }
}

#[test]
fn maps_are_identical_across_worker_counts() {
    let cfg = PropagationConfig::with_steps(512);
    let program = build_gate(Gate::Identity, 1, Variant::Sine, 1.0, &cfg).unwrap();
    let grid_spec = GridSpec {
        delta_nu_max_mhz: 0.5,
        delta_nu_points: 9,
        delta_omega_max: 0.25,
        delta_omega_points: 9,
    };
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| {
            offset_fidelity_map(&program, &grid_spec, &cfg, FidelityMetric::OperatorOverlap)
                .unwrap()
        });
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| {
            offset_fidelity_map(&program, &grid_spec, &cfg, FidelityMetric::OperatorOverlap)
                .unwrap()
        });
    for (a, b) in serial.values.iter().zip(parallel.values.iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn noise_map_degrades_monotonically_for_the_calibrated_identity() {
    let cfg = cfg();
    let program = build_gate(Gate::Identity, 3, Variant::Sine, 1.0, &cfg).unwrap();
    let grid = offset_fidelity_map(
        &program,
        &GridSpec {
            delta_nu_points: 41,
            delta_omega_points: 41,
            ..GridSpec::default()
        },
        &cfg,
        FidelityMetric::OperatorOverlap,
    )
    .unwrap();
    let sn = sigma_axis(0.4, 9).unwrap();
    let so = sigma_axis(0.2, 7).unwrap();
    let nmap = noise_level_map(&grid, &sn, &so).unwrap();
    // corner is the calibrated point
    assert!(nmap.value(0, 0) >= 1.0 - 1e-6);
    // non-increasing along sigma_nu at sigma_omega = 0 within quadrature noise
    for i in 1..sn.len() {
        assert!(
            nmap.value(i, 0) <= nmap.value(i - 1, 0) + 1e-6,
            "sigma_nu row {i}: {} vs {}",
            nmap.value(i, 0),
            nmap.value(i - 1, 0)
        );
    }
    // delta-limit consistency
    let avg = gaussian_average(&grid, 0.0, 0.0).unwrap();
    assert_eq!(avg.value, grid.zero_offset_value());
}

#[test]
fn readout_returns_the_singlet_and_blocks_the_triplet() {
    let cfg = PropagationConfig::with_steps(4096);
    let sys = STSystem::smart(1.0, 0.0, 0.0, DEFAULT_T_C_GHZ).unwrap();
    let spec = RampSpec::with_defaults(0.0, RampCase::A);
    let worst = [(0.1, -0.1), (-0.1, 0.1)];

    // forward init at a working ramp time, then the reversed profile must
    // bring S(1,1) back to S(0,2)
    let fwd = ramp_initialisation(&sys, &spec, &[0.1], &worst, &cfg).unwrap();
    for p in &fwd {
        assert!(p.p_s11 > 0.99, "forward init p_s11 = {}", p.p_s11);
    }
    let back = ramp_readout(&sys, &spec, &[0.1], &worst, StState::S11, &cfg).unwrap();
    for p in &back {
        assert!(p.p_s02 > 0.98, "readout return p_s02 = {}", p.p_s02);
    }

    // a triplet stays blockaded even at adiabatic rates
    let blocked = ramp_readout(&sys, &spec, &[1.0], &worst, StState::TMinus, &cfg).unwrap();
    for p in &blocked {
        assert!(p.p_s02 < 0.05, "triplet leak p_s02 = {}", p.p_s02);
    }

    // a sudden reversed ramp cannot move S(1,1) into the other charge state
    let sudden = ramp_readout(&sys, &spec, &[0.0], &[(0.0, 0.0)], StState::S11, &cfg).unwrap();
    assert!(sudden[0].p_s02 < 0.05, "sudden p_s02 = {}", sudden[0].p_s02);
}

#[test]
fn single_qubit_noise_response_is_physical() {
    // fidelity under a pure amplitude offset stays high for the echoed idle
    let cfg = cfg();
    let program = build_gate(Gate::Identity, 1, Variant::Sine, 1.0, &cfg).unwrap();
    let u = propagate_single_qubit(&program, NoiseOffset::new(0.0, 0.1), &cfg).unwrap();
    let f = fidelity(&u, &Unitary::identity(2)).unwrap();
    assert!(f > 0.99, "idle with +10 % drive amplitude: {f}");
    // while a detuning offset of the drive scale degrades it
    let u = propagate_single_qubit(&program, NoiseOffset::new(1.0, 0.0), &cfg).unwrap();
    let f_det = fidelity(&u, &Unitary::identity(2)).unwrap();
    assert!(f_det < 0.9, "idle at 1 MHz detuning: {f_det}");
}
