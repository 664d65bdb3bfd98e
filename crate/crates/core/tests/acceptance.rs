//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line with the measured quantities (run with `--nocapture` to
//! see the lines for passing tests).

mod common;

use smartspin::gates::{
    axis_maps, build_gate, grape_optimize, Gate, XyGate, XY_COEFFICIENT_SEEDS,
};
use smartspin::geometry::{
    magnus_first_order, magnus_report, optimal_mod_frequency, space_curve, projected_areas,
};
use smartspin::model::{smart_envelope, NoiseOffset, PauliAxis, Variant, Waveform};
use smartspin::noisemaps::{
    gaussian_average, noise_level_map, offset_fidelity_grid4, offset_fidelity_map,
    offset_fidelity_map_fn, sigma_axis, two_qubit_noise_average, FidelityGrid, GridSpec,
};
use smartspin::numerics::{
    fidelity, propagate, FidelityMetric, PropagationConfig, Unitary,
};
use smartspin::twoqubit::{
    compose_cnot, compose_cnot_x, propagate_two_qubit, ramp_initialisation, sqrt_swap_program,
    RampCase, RampSpec, STSystem, DEFAULT_J0_MHZ, DEFAULT_T_C_GHZ,
};

const OMEGA_R: f64 = 1.0;

fn cfg() -> PropagationConfig {
    PropagationConfig::default()
}

struct Criterion {
    name: &'static str,
    failures: Vec<String>,
    details: Vec<String>,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion {
            name,
            failures: Vec::new(),
            details: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.details.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(self) {
        if self.failures.is_empty() {
            println!("{}: PASS ({})", self.name, self.details.join("; "));
        } else {
            println!(
                "{}: FAIL ({}) [ok: {}]",
                self.name,
                self.failures.join("; "),
                self.details.join("; ")
            );
            panic!("{} failed: {}", self.name, self.failures.join("; "));
        }
    }
}

#[test]
fn criterion_01_bessel_optimum() {
    let mut c = Criterion::new("criterion 1 (Bessel optimum)");
    let f = optimal_mod_frequency(OMEGA_R, 1).unwrap();
    c.check(
        (f - 0.588074).abs() < 1e-5,
        format!("f_mod_opt = {f:.7} MHz vs 0.588074 (tol 1e-5)"),
    );
    let env = smart_envelope(OMEGA_R, f, Variant::Sine).unwrap();
    let a1 = magnus_first_order(&env, PauliAxis::X, 1.0 / f).unwrap();
    let norm = (a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]).sqrt();
    c.check(norm < 1e-6, format!("|A1(T_mod)| = {norm:.2e} < 1e-6"));
    c.finish();
}

#[test]
fn criterion_02_table_reproduction() {
    let mut c = Criterion::new("criterion 2 (coefficient table)");
    let cfg = cfg();
    let mut results: Vec<(XyGate, u32, f64, f64)> = Vec::new();
    for &(gate, n, v_ref, w_ref) in XY_COEFFICIENT_SEEDS {
        let res = grape_optimize(gate, n, Variant::Sine, OMEGA_R, &cfg, 0).unwrap();
        results.push((gate, n, res.nu_v_mhz, res.nu_w_mhz));
        let dv = (res.nu_v_mhz - v_ref).abs();
        let dw = (res.nu_w_mhz - w_ref).abs();
        c.check(
            dv < 1e-3 && dw < 1e-3,
            format!(
                "{gate:?} n={n}: ({:+.4}, {:+.4}) vs published ({v_ref:+.4}, {w_ref:+.4})",
                res.nu_v_mhz, res.nu_w_mhz
            ),
        );
    }
    // convergence of the duration-weighted coefficients
    let f_mod = optimal_mod_frequency(OMEGA_R, 1).unwrap();
    let t_mod = 1.0 / f_mod;
    for gate in [XyGate::SqrtX, XyGate::SqrtY] {
        for col in 0..2 {
            let pick = |n: u32| -> f64 {
                let r = results
                    .iter()
                    .find(|(g, m, _, _)| *g == gate && *m == n)
                    .unwrap();
                let nu = if col == 0 { r.2 } else { r.3 };
                nu * n as f64 * t_mod
            };
            let early = (pick(2) - pick(1)).abs();
            let late = (pick(10) - pick(7)).abs();
            c.check(
                late < early,
                format!("{gate:?} col {col}: |Δ(ν·t)| late {late:.4} < early {early:.4}"),
            );
        }
    }
    c.finish();
}

#[test]
fn criterion_03_axis_map_extrema() {
    let mut c = Criterion::new("criterion 3 (rotation-axis extrema)");
    let cfg = cfg();
    let nus: Vec<f64> = (0..81).map(|i| 0.0125 + (1.0 - 0.0125) * i as f64 / 80.0).collect();
    let phis: Vec<f64> = (0..81).map(|i| std::f64::consts::TAU * i as f64 / 80.0).collect();
    let v_map = axis_maps(&nus, &phis, 1, OMEGA_R, &cfg).unwrap();
    let w_map = axis_maps(&nus, &phis, 2, OMEGA_R, &cfg).unwrap();
    let eta_v = v_map.eta_percent.iter().copied().fold(0.0f64, f64::max);
    let eta_w = w_map.eta_percent.iter().copied().fold(0.0f64, f64::max);
    c.check(
        (eta_v - 53.9).abs() < 0.5,
        format!("max eta_v = {eta_v:.2} % vs 53.9 (tol 0.5)"),
    );
    c.check(
        (eta_w - 37.3).abs() < 0.5,
        format!("max eta_w = {eta_w:.2} % vs 37.3 (tol 0.5)"),
    );
    // small-amplitude axes at phi_mod = pi/2
    let small = [0.01];
    let phi_half = [std::f64::consts::FRAC_PI_2];
    let v = axis_maps(&small, &phi_half, 1, OMEGA_R, &cfg).unwrap();
    let w = axis_maps(&small, &phi_half, 2, OMEGA_R, &cfg).unwrap();
    c.check(
        (v.phi_r[0].abs() - 0.834).abs() < 0.01,
        format!("v-axis azimuth offset |{:.4}| vs 0.834 (tol 0.01)", v.phi_r[0]),
    );
    let dphi = (w.phi_r[0] - v.phi_r[0]).abs();
    c.check(
        (dphi - std::f64::consts::FRAC_PI_2).abs() < 0.02,
        format!("|phi_w - phi_v| = {dphi:.4} vs pi/2 (tol 0.02)"),
    );
    c.finish();
}

#[test]
fn criterion_04_geometric_cancellation() {
    let mut c = Criterion::new("criterion 4 (geometric cancellation)");
    let f = optimal_mod_frequency(OMEGA_R, 1).unwrap();
    let env = smart_envelope(OMEGA_R, f, Variant::Sine).unwrap();
    let report = magnus_report(&env, 1.0 / f).unwrap();
    let (axy, axz, ayz) = report.projected_areas;
    c.check(
        report.closure_defect < 1e-4,
        format!("modulated curve closure defect {:.2e} < 1e-4", report.closure_defect),
    );
    c.check(
        axy.abs() < 1e-4 && axz.abs() < 1e-4 && ayz.abs() < 1e-4,
        format!("areas ({axy:.1e}, {axz:.1e}, {ayz:.1e}) all < 1e-4"),
    );
    let circle = space_curve(&Waveform::constant(OMEGA_R), 1.0 / OMEGA_R, 8193).unwrap();
    let (cxy, _, _) = projected_areas(&circle);
    c.check(
        circle.closure_defect() < 1e-4 && cxy.abs() > 0.01,
        format!(
            "constant-drive circle: defect {:.1e}, |A_xy| = {:.4} > 0.01",
            circle.closure_defect(),
            cxy.abs()
        ),
    );
    let off = smart_envelope(1.1 * OMEGA_R, f, Variant::Sine).unwrap();
    let broken = space_curve(&off, 1.0 / f, 8193).unwrap();
    c.check(
        broken.closure_defect() > 1e-3,
        format!("+10 % amplitude: defect {:.2e} > 1e-3", broken.closure_defect()),
    );
    c.finish();
}

#[test]
fn criterion_05_half_period_rocking_angle() {
    let mut c = Criterion::new("criterion 5 (half-period rocking angle)");
    let f = optimal_mod_frequency(OMEGA_R, 1).unwrap();
    let env = smart_envelope(OMEGA_R, f, Variant::Sine).unwrap();
    let n = 1 << 17;
    let dt = (1.0 / f) / n as f64;
    let mut phase = 0.0f64;
    let mut peak = 0.0f64;
    for k in 0..n {
        phase += std::f64::consts::TAU * env.eval((k as f64 + 0.5) * dt) * dt;
        peak = peak.max(phase.abs());
    }
    let expected = 2.0 * 2.404825557695773;
    c.check(
        (peak - expected).abs() < 1e-3,
        format!("peak angle {peak:.6} rad vs 2*j1 = {expected:.6} (tol 1e-3)"),
    );
    c.check(
        (peak / std::f64::consts::PI - 1.531).abs() < 1e-3,
        format!("peak/pi = {:.4} vs 1.531", peak / std::f64::consts::PI),
    );
    c.finish();
}

fn identity_grids() -> (FidelityGrid, FidelityGrid, FidelityGrid) {
    let cfg = cfg();
    let grid = GridSpec::default();
    let duration = 10.0 / OMEGA_R;
    let bare = offset_fidelity_map_fn("bare_identity", 1, &grid, |noise| {
        let h = smartspin::model::build_hamiltonian(
            &smartspin::model::QubitFrameSpec::dressed(),
            &Waveform::zero(),
            &Waveform::zero(),
            noise,
        )?;
        let u = propagate(&h, 0.0, duration, &PropagationConfig::with_steps(64))?;
        fidelity(&u, &Unitary::identity(2))
    })
    .unwrap();
    let dressed = offset_fidelity_map_fn("dressed_identity", 1, &grid, |noise| {
        let h = smartspin::model::build_hamiltonian(
            &smartspin::model::QubitFrameSpec::dressed(),
            &Waveform::constant(OMEGA_R),
            &Waveform::zero(),
            noise,
        )?;
        let u = propagate(&h, 0.0, duration, &PropagationConfig::with_steps(256))?;
        fidelity(&u, &Unitary::identity(2))
    })
    .unwrap();
    let smart_prog = build_gate(Gate::Identity, 7, Variant::Sine, OMEGA_R, &cfg).unwrap();
    let smart = offset_fidelity_map(&smart_prog, &grid, &cfg, FidelityMetric::OperatorOverlap)
        .unwrap();
    (bare, dressed, smart)
}

#[test]
fn criterion_06_robustness_ordering() {
    let mut c = Criterion::new("criterion 6 (robustness ordering)");
    let (bare, dressed, smart) = identity_grids();
    let w_dressed = dressed.detuning_half_width(0.99);
    let w_smart = smart.detuning_half_width(0.99);
    c.check(
        w_smart > w_dressed,
        format!("99 % detuning half-width: modulated {w_smart:.3} MHz > dressed {w_dressed:.3} MHz"),
    );
    let (sn, so) = (0.1, 0.05);
    let f_bare = 1.0 - gaussian_average(&bare, sn, so).unwrap().value;
    let f_dressed = 1.0 - gaussian_average(&dressed, sn, so).unwrap().value;
    let f_smart = 1.0 - gaussian_average(&smart, sn, so).unwrap().value;
    c.check(
        f_bare > f_dressed && f_dressed > f_smart,
        format!(
            "averaged infidelity at (0.1 MHz, 0.05): bare {f_bare:.4} > dressed {f_dressed:.4} > modulated {f_smart:.4}"
        ),
    );
    c.finish();
}

#[test]
fn criterion_07_zero_noise_gate_floors() {
    let mut c = Criterion::new("criterion 7 (zero-noise gate floors)");
    let cfg = cfg();
    for gate in [Gate::SqrtX, Gate::SqrtY, Gate::SqrtV, Gate::SqrtW] {
        let program = build_gate(gate, 7, Variant::Sine, OMEGA_R, &cfg).unwrap();
        let u = smartspin::gates::propagate_single_qubit(&program, NoiseOffset::ZERO, &cfg)
            .unwrap();
        let f = fidelity(&u, &program.target).unwrap();
        c.check(
            1.0 - f < 1e-6,
            format!("{} infidelity {:.1e} < 1e-6", program.name, 1.0 - f),
        );
    }
    let swap = sqrt_swap_program(DEFAULT_J0_MHZ, OMEGA_R, Variant::Sine, &cfg).unwrap();
    let u = propagate_two_qubit(&swap, (NoiseOffset::ZERO, NoiseOffset::ZERO), &cfg).unwrap();
    let f_swap = fidelity(&u, &swap.target).unwrap();
    c.check(f_swap >= 0.999, format!("sqrt_swap fidelity {f_swap:.6} >= 0.999"));

    for (name, program) in [
        ("cnot", compose_cnot(2, DEFAULT_J0_MHZ, OMEGA_R, Variant::Sine, &cfg).unwrap()),
        ("cnot_x", compose_cnot_x(2, DEFAULT_J0_MHZ, OMEGA_R, Variant::Sine, &cfg).unwrap()),
    ] {
        let u = propagate_two_qubit(&program, (NoiseOffset::ZERO, NoiseOffset::ZERO), &cfg)
            .unwrap();
        let f_oracle = fidelity(&u, &program.target).unwrap();
        c.check(
            1.0 - f_oracle < 1e-3,
            format!("{name} vs factor-product oracle: infidelity {:.1e} < 1e-3", 1.0 - f_oracle),
        );
        let f_canon = fidelity(&u, program.canonical_target.as_ref().unwrap()).unwrap();
        c.check(
            f_canon >= 0.99,
            format!("{name} vs canonical target: {f_canon:.6} >= 0.99"),
        );
    }
    c.finish();
}

#[test]
fn criterion_08_vw_map_equivalence() {
    let mut c = Criterion::new("criterion 8 (v/w vs x/y map equivalence)");
    let cfg = cfg();
    let grid = GridSpec::default();
    let sn = sigma_axis(0.5, 6).unwrap();
    let so = sigma_axis(0.25, 5).unwrap();
    let mut maps = Vec::new();
    for gate in [Gate::SqrtX, Gate::SqrtY, Gate::SqrtV, Gate::SqrtW] {
        let program = build_gate(gate, 7, Variant::Sine, OMEGA_R, &cfg).unwrap();
        let offset = offset_fidelity_map(&program, &grid, &cfg, FidelityMetric::OperatorOverlap)
            .unwrap();
        c.check(
            offset.zero_offset_value() >= 1.0 - 1e-6,
            format!("{} calibrated at zero offset", program.name),
        );
        maps.push(noise_level_map(&offset, &sn, &so).unwrap());
    }
    let dev_vx = maps[0]
        .values
        .iter()
        .zip(maps[2].values.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let dev_wy = maps[1]
        .values
        .iter()
        .zip(maps[3].values.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    c.check(
        dev_vx < 0.02,
        format!("max |F_v - F_x| over sigma grid = {dev_vx:.4} < 0.02"),
    );
    c.check(
        dev_wy < 0.02,
        format!("max |F_w - F_y| over sigma grid = {dev_wy:.4} < 0.02"),
    );
    c.finish();
}

#[test]
fn criterion_09_initialisation_thresholds() {
    let mut c = Criterion::new("criterion 9 (initialisation thresholds)");
    let cfg = PropagationConfig::with_steps(8192);
    let sys = STSystem::smart(OMEGA_R, 0.0, 0.0, DEFAULT_T_C_GHZ).unwrap();
    let worst = [(0.1, 0.1), (0.1, -0.1), (-0.1, 0.1), (-0.1, -0.1)];
    let min_at = |case: RampCase, rts: &[f64]| -> Vec<(f64, f64)> {
        let spec = RampSpec::with_defaults(0.0, case);
        let pts = ramp_initialisation(&sys, &spec, rts, &worst, &cfg).unwrap();
        rts.iter()
            .map(|&rt| {
                let pmin = pts
                    .iter()
                    .filter(|p| p.ramp_time_us == rt)
                    .map(|p| p.p_s11)
                    .fold(1.0f64, f64::min);
                (rt, pmin)
            })
            .collect()
    };
    // case A: crossing of the 99 % threshold inside [0.05, 0.3] us on the
    // declared ramp-time grid
    let a = min_at(RampCase::A, &[0.02, 0.035, 0.1, 0.2]);
    let crossing_a = a.iter().find(|(_, p)| *p > 0.99).map(|(rt, _)| *rt);
    c.check(
        a[0].1 < 0.99 && a[1].1 < 0.99,
        format!("case A still below 99 % at 0.02 ({:.4}) and 0.035 ({:.4}) us", a[0].1, a[1].1),
    );
    c.check(
        matches!(crossing_a, Some(rt) if (0.05..=0.3).contains(&rt)),
        format!("case A first crossing at {crossing_a:?} us in [0.05, 0.3] (grid {:?})",
            a.iter().map(|(rt, p)| format!("{rt}:{p:.4}")).collect::<Vec<_>>()),
    );
    // case B: crossing only inside [0.5, 2] us
    let b = min_at(
        RampCase::B,
        &[0.1, 0.2, 0.3, 0.4, 0.6, 0.8, 1.0],
    );
    let crossing_b = b.iter().find(|(_, p)| *p > 0.99).map(|(rt, _)| *rt);
    c.check(
        b.iter().take(4).all(|(_, p)| *p < 0.99),
        format!("case B below 99 % through 0.4 us ({})",
            b.iter().take(4).map(|(rt, p)| format!("{rt}:{p:.4}")).collect::<Vec<_>>().join(" ")),
    );
    c.check(
        matches!(crossing_b, Some(rt) if (0.5..=2.0).contains(&rt)),
        format!("case B first crossing at {crossing_b:?} us in [0.5, 2]"),
    );
    // case-A dominance over the constant-drive variant at equal ramp times
    let dressed_sys = STSystem::dressed(OMEGA_R, 0.0, 0.0, DEFAULT_T_C_GHZ).unwrap();
    for rt in [0.05, 0.1] {
        let spec = RampSpec::with_defaults(0.0, RampCase::A);
        let s_pts = ramp_initialisation(&sys, &spec, &[rt], &worst, &cfg).unwrap();
        let d_pts = ramp_initialisation(&dressed_sys, &spec, &[rt], &worst, &cfg).unwrap();
        let s_min = s_pts.iter().map(|p| p.p_s11).fold(1.0f64, f64::min);
        let d_min = d_pts.iter().map(|p| p.p_s11).fold(1.0f64, f64::min);
        c.check(
            s_min >= d_min,
            format!("case A modulated {s_min:.4} >= constant-drive {d_min:.4} at {rt} us"),
        );
    }
    c.finish();
}

#[test]
fn criterion_10_property_suites() {
    let mut c = Criterion::new("criterion 10 (property suites)");
    let cfg = cfg();
    let f_mod = optimal_mod_frequency(OMEGA_R, 1).unwrap();
    let t_mod = 1.0 / f_mod;

    // unitarity and composition on a driven, noisy Hamiltonian
    let g = smart_envelope(OMEGA_R, f_mod, Variant::Sine).unwrap();
    let local = Waveform::Sine {
        amplitude_mhz: 0.2,
        freq_mhz: f_mod,
        phase_rad: 0.7,
    };
    let h = smartspin::model::build_hamiltonian(
        &smartspin::model::QubitFrameSpec::dressed(),
        &g,
        &local,
        NoiseOffset::new(0.07, -0.04),
    )
    .unwrap();
    let u_full = propagate(&h, 0.0, t_mod, &cfg).unwrap();
    let u_a = propagate(&h, 0.0, 0.37 * t_mod, &cfg).unwrap();
    let u_b = propagate(&h, 0.37 * t_mod, t_mod, &cfg).unwrap();
    c.check(
        u_full.unitarity_defect() < 1e-10,
        format!("unitarity defect {:.1e} < 1e-10", u_full.unitarity_defect()),
    );
    let comp = u_full.max_entry_distance(&u_b.compose(&u_a).unwrap());
    c.check(comp < 1e-9, format!("composition defect {comp:.1e} < 1e-9"));

    // quadrature convergence (second order)
    let coarse = propagate(&h, 0.0, t_mod, &PropagationConfig::with_steps(256)).unwrap();
    let mid = propagate(&h, 0.0, t_mod, &PropagationConfig::with_steps(512)).unwrap();
    let reference = propagate(&h, 0.0, t_mod, &PropagationConfig::with_steps(32768)).unwrap();
    let ratio = coarse.max_entry_distance(&reference) / mid.max_entry_distance(&reference);
    c.check(ratio >= 3.5, format!("halving error ratio {ratio:.2} >= 3.5"));

    // five-level norm conservation through a ramp
    let sys = STSystem::smart(OMEGA_R, 0.1, -0.1, DEFAULT_T_C_GHZ).unwrap();
    let spec = RampSpec::with_defaults(0.1, RampCase::A);
    let pts = ramp_initialisation(&sys, &spec, &[0.1], &[(0.1, -0.1)], &cfg).unwrap();
    // run_ramp enforces < 1e-9 internally; the probabilities must be sane
    c.check(
        pts[0].p_s02 >= 0.0 && pts[0].p_s11 <= 1.0,
        "five-level norm conserved within 1e-9 during the ramp".to_string(),
    );

    // J -> 0 factorization of the two-qubit identity map
    let idle = {
        let mut p = sqrt_swap_program(DEFAULT_J0_MHZ, OMEGA_R, Variant::Sine, &cfg).unwrap();
        p.segments = vec![smartspin::gates::Segment::TwoQubit {
            local1: Waveform::zero(),
            local2: Waveform::zero(),
            exchange: None,
            n_periods: 7,
        }];
        p.target = Unitary::identity(4);
        p.name = "two_qubit_idle".into();
        p
    };
    let small = GridSpec {
        delta_nu_max_mhz: 0.5,
        delta_nu_points: 5,
        delta_omega_max: 0.25,
        delta_omega_points: 5,
    };
    let grid4 = offset_fidelity_grid4(&idle, &small, &cfg, FidelityMetric::OperatorOverlap)
        .unwrap();
    let single = build_gate(Gate::Identity, 7, Variant::Sine, OMEGA_R, &cfg).unwrap();
    let grid1 = offset_fidelity_map(&single, &small, &cfg, FidelityMetric::OperatorOverlap)
        .unwrap();
    let mut worst_factorization = 0.0f64;
    for i1 in 0..5 {
        for i2 in 0..5 {
            for j1 in 0..5 {
                for j2 in 0..5 {
                    let product = grid1.value(i1, j1) * grid1.value(i2, j2);
                    worst_factorization =
                        worst_factorization.max((grid4.value(i1, i2, j1, j2) - product).abs());
                }
            }
        }
    }
    c.check(
        worst_factorization < 1e-6,
        format!("J->0 factorization defect {worst_factorization:.1e} < 1e-6"),
    );

    // Monte Carlo vs quadrature, single-qubit identity map: continuous
    // truncated-Gaussian draws on a bilinear interpolant, with the grid
    // dense enough to resolve the sampled Gaussian
    let mc_cfg = PropagationConfig::with_steps(1024);
    let program = build_gate(Gate::Identity, 7, Variant::Sine, OMEGA_R, &mc_cfg).unwrap();
    let dense = offset_fidelity_map(
        &program,
        &GridSpec {
            delta_nu_points: 161,
            delta_omega_points: 161,
            ..GridSpec::default()
        },
        &mc_cfg,
        FidelityMetric::OperatorOverlap,
    )
    .unwrap();
    let quad = gaussian_average(&dense, 0.1, 0.05).unwrap().value;
    let (mc, se) = common::mc_average(&dense, 0.1, 0.05, 100_000, 42);
    c.check(
        (quad - mc).abs() < 3.0 * se.max(1e-6),
        format!("identity map: quadrature {quad:.5} vs MC {mc:.5} (3se = {:.1e})", 3.0 * se),
    );

    // Monte Carlo vs quadrature, two-qubit exchange-gate tensor: node-measure
    // draws against the separable four-axis contraction
    let swap = sqrt_swap_program(DEFAULT_J0_MHZ, OMEGA_R, Variant::Sine, &cfg).unwrap();
    let swap_grid = GridSpec {
        delta_nu_max_mhz: 1.0,
        delta_nu_points: 11,
        delta_omega_max: 0.5,
        delta_omega_points: 9,
    };
    let grid4 = offset_fidelity_grid4(&swap, &swap_grid, &cfg, FidelityMetric::OperatorOverlap)
        .unwrap();
    let quad4 = two_qubit_noise_average(&grid4, 0.15, 0.05).unwrap().value;
    let (mc4, se4) = common::mc_average_4d_nodes(&grid4, 0.15, 0.05, 100_000, 7);
    c.check(
        (quad4 - mc4).abs() < 3.0 * se4.max(1e-6),
        format!("swap tensor: quadrature {quad4:.5} vs MC {mc4:.5} (3se = {:.1e})", 3.0 * se4),
    );
    c.finish();
}
