//! Scenario-driven experiment execution: TOML configs in, CSV tables and a
//! JSON run manifest out.
//!
//! Every run writes a manifest that echoes the fully resolved configuration
//! (all defaults applied); re-running from the manifest reproduces the same
//! output byte for byte, independently of the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::gates::{
    axis_maps, build_gate, grape_optimize, Gate, XyGate, XY_COEFFICIENT_SEEDS,
};
use crate::geometry::{magnus_report, optimal_mod_frequency, space_curve, filter_function};
use crate::model::{
    build_hamiltonian, smart_envelope, NoiseOffset, QubitFrameSpec, Variant, Waveform,
};
use crate::noisemaps::{
    noise_level_map, offset_fidelity_grid4, offset_fidelity_map,
    offset_fidelity_map_fn, sigma_axis, two_qubit_noise_level_map, FidelityGrid, GridSpec,
};
use crate::numerics::{fidelity, propagate, FidelityMetric, PropagationConfig, Unitary};
use crate::twoqubit::{
    compose_cnot, compose_cnot_x, propagate_two_qubit, ramp_initialisation, ramp_readout,
    sqrt_swap_program, st_energy_diagram, RampCase, RampSpec, STSystem, StState,
    DEFAULT_J0_MHZ, DEFAULT_T_C_GHZ,
};

pub const WORKERS_ENV: &str = "SMARTSPIN_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    IdentityMap,
    GateMap,
    AxisMap,
    SpaceCurve,
    FilterFunction,
    GrapeTable,
    TwoQubitMap,
    StInit,
    StReadout,
    EnergyDiagram,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::IdentityMap,
        Experiment::GateMap,
        Experiment::AxisMap,
        Experiment::SpaceCurve,
        Experiment::FilterFunction,
        Experiment::GrapeTable,
        Experiment::TwoQubitMap,
        Experiment::StInit,
        Experiment::StReadout,
        Experiment::EnergyDiagram,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::IdentityMap => "identity_map",
            Experiment::GateMap => "gate_map",
            Experiment::AxisMap => "axis_map",
            Experiment::SpaceCurve => "space_curve",
            Experiment::FilterFunction => "filter_function",
            Experiment::GrapeTable => "grape_table",
            Experiment::TwoQubitMap => "two_qubit_map",
            Experiment::StInit => "st_init",
            Experiment::StReadout => "st_readout",
            Experiment::EnergyDiagram => "energy_diagram",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    Bare,
    Dressed,
    #[default]
    Smart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoQubitGate {
    SqrtSwap,
    Cnot,
    CnotX,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub omega_r_mhz: Option<f64>,
    pub f_mod_mhz: Option<f64>,
    pub variant: Option<Variant>,
    pub encoding: Option<Encoding>,
    pub gate: Option<String>,
    pub two_qubit_gate: Option<TwoQubitGate>,
    pub n_periods: Option<u32>,
    pub duration_us: Option<f64>,
    pub j0_mhz: Option<f64>,
    pub steps_per_period: Option<u32>,
    pub fidelity_metric: Option<FidelityMetric>,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection {
            omega_r_mhz: None,
            f_mod_mhz: None,
            variant: None,
            encoding: None,
            gate: None,
            two_qubit_gate: None,
            n_periods: None,
            duration_us: None,
            j0_mhz: None,
            steps_per_period: None,
            fidelity_metric: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SigmaSection {
    pub sigma_nu_max_mhz: Option<f64>,
    pub sigma_nu_points: Option<usize>,
    pub sigma_omega_max: Option<f64>,
    pub sigma_omega_points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub delta_nu_max_mhz: Option<f64>,
    pub delta_nu_points: Option<usize>,
    pub delta_omega_max: Option<f64>,
    pub delta_omega_points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AxisMapSection {
    pub harmonic: Option<u32>,
    pub nu_min_mhz: Option<f64>,
    pub nu_max_mhz: Option<f64>,
    pub nu_points: Option<usize>,
    pub phi_points: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SpaceCurveSection {
    pub n_samples: Option<usize>,
    pub n_periods: Option<u32>,
    /// Fractional amplitude offset applied to the envelope (0.1 = +10 %).
    pub amplitude_offset: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub f_max_mhz: Option<f64>,
    pub points: Option<usize>,
    pub n_periods: Option<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GrapeSection {
    pub n_periods_list: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RampSection {
    /// "A" centers the ramp on an envelope zero, "B" on an envelope maximum.
    pub case: Option<String>,
    pub ramp_times_us: Option<Vec<f64>>,
    /// Detuning offset magnitudes; pairs are the cartesian square of
    /// `{0, ±m1, ±m2, ...}`.
    pub detuning_magnitudes_mhz: Option<Vec<f64>>,
    pub t_c_ghz: Option<f64>,
    pub ramp_from_ghz: Option<f64>,
    pub ramp_to_ghz: Option<f64>,
    pub park_from_ghz: Option<f64>,
    pub park_to_ghz: Option<f64>,
    pub initial_state: Option<StState>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnergyDiagramSection {
    pub eps_min_ghz: Option<f64>,
    pub eps_max_ghz: Option<f64>,
    pub points: Option<usize>,
    pub dnu1_mhz: Option<f64>,
    pub dnu2_mhz: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// On-disk scenario configuration (TOML). Unset fields take documented
/// defaults during `resolve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub sigma: SigmaSection,
    #[serde(default)]
    pub axis_map: AxisMapSection,
    #[serde(default)]
    pub space_curve: SpaceCurveSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub grape: GrapeSection,
    #[serde(default)]
    pub ramp: RampSection,
    #[serde(default)]
    pub energy_diagram: EnergyDiagramSection,
    #[serde(default)]
    pub output: OutputSection,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

/// Fully resolved scenario: every default applied, ready to run and to echo
/// into the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub experiment: Experiment,
    pub omega_r_mhz: f64,
    pub f_mod_mhz: f64,
    pub variant: Variant,
    pub encoding: Encoding,
    pub gate: Gate,
    pub two_qubit_gate: TwoQubitGate,
    pub n_periods: u32,
    pub duration_us: f64,
    pub j0_mhz: f64,
    pub steps_per_period: u32,
    pub fidelity_metric: FidelityMetric,
    pub grid: GridSpec,
    pub sigma_nu_max_mhz: f64,
    pub sigma_nu_points: usize,
    pub sigma_omega_max: f64,
    pub sigma_omega_points: usize,
    pub axis_harmonic: u32,
    pub axis_nu_min_mhz: f64,
    pub axis_nu_max_mhz: f64,
    pub axis_nu_points: usize,
    pub axis_phi_points: usize,
    pub curve_n_samples: usize,
    pub curve_n_periods: u32,
    pub curve_amplitude_offset: f64,
    pub filter_f_max_mhz: f64,
    pub filter_points: usize,
    pub filter_n_periods: u32,
    pub grape_n_periods_list: Vec<u32>,
    pub ramp_case: RampCase,
    pub ramp_times_us: Vec<f64>,
    pub detuning_magnitudes_mhz: Vec<f64>,
    pub t_c_ghz: f64,
    pub ramp_from_ghz: f64,
    pub ramp_to_ghz: f64,
    pub park_from_ghz: f64,
    pub park_to_ghz: f64,
    pub readout_initial_state: StState,
    pub eps_min_ghz: f64,
    pub eps_max_ghz: f64,
    pub eps_points: usize,
    pub diagram_dnu1_mhz: f64,
    pub diagram_dnu2_mhz: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<ScenarioConfig> {
        toml::from_str(text)
            .map_err(|e| SimError::Config(format!("failed to parse scenario config: {e}")))
    }

    /// Apply defaults and validate cross-field consistency.
    pub fn resolve(&self) -> Result<Scenario> {
        let omega_r = self.physics.omega_r_mhz.unwrap_or(1.0);
        if omega_r <= 0.0 {
            return Err(SimError::Config(
                "physics.omega_r_mhz must be positive".into(),
            ));
        }
        let f_mod = match self.physics.f_mod_mhz {
            Some(f) if f > 0.0 => f,
            Some(f) => {
                return Err(SimError::Config(format!(
                    "physics.f_mod_mhz must be positive, got {f}"
                )))
            }
            None => optimal_mod_frequency(omega_r, 1)?,
        };
        let gate = match self.physics.gate.as_deref() {
            Some(name) => Gate::parse(name)
                .map_err(|e| SimError::Config(format!("physics.gate: {e}")))?,
            None => match self.experiment {
                Experiment::IdentityMap => Gate::Identity,
                _ => Gate::SqrtX,
            },
        };
        let steps = self.physics.steps_per_period.unwrap_or(4096);
        if steps < 64 {
            return Err(SimError::Config(
                "physics.steps_per_period must be >= 64".into(),
            ));
        }
        let grid = GridSpec {
            delta_nu_max_mhz: self.grid.delta_nu_max_mhz.unwrap_or(1.0),
            delta_nu_points: self
                .grid
                .delta_nu_points
                .unwrap_or(if self.experiment == Experiment::TwoQubitMap { 17 } else { 81 }),
            delta_omega_max: self.grid.delta_omega_max.unwrap_or(0.5),
            delta_omega_points: self
                .grid
                .delta_omega_points
                .unwrap_or(if self.experiment == Experiment::TwoQubitMap { 9 } else { 81 }),
        };
        grid.axes()
            .map_err(|e| SimError::Config(format!("grid: {e}")))?;
        let ramp_case = match self.ramp.case.as_deref().unwrap_or("A") {
            "A" | "a" => RampCase::A,
            "B" | "b" => RampCase::B,
            other => {
                return Err(SimError::Config(format!(
                    "ramp.case must be \"A\" or \"B\", got {other:?}"
                )))
            }
        };
        let ramp_times = self.ramp.ramp_times_us.clone().unwrap_or_else(|| {
            vec![
                0.01, 0.02, 0.03, 0.05, 0.07, 0.1, 0.15, 0.2, 0.3, 0.5, 0.7, 1.0, 1.25, 1.5, 2.0,
            ]
        });
        if ramp_times.is_empty() {
            return Err(SimError::Config("ramp.ramp_times_us must not be empty".into()));
        }
        let n_periods = self.physics.n_periods.unwrap_or(7);
        if n_periods < 1 {
            return Err(SimError::Config("physics.n_periods must be >= 1".into()));
        }
        let grape_list = self
            .grape
            .n_periods_list
            .clone()
            .unwrap_or_else(|| vec![1, 2, 3, 7, 10]);
        if grape_list.is_empty() {
            return Err(SimError::Config(
                "grape.n_periods_list must not be empty".into(),
            ));
        }
        Ok(Scenario {
            experiment: self.experiment,
            omega_r_mhz: omega_r,
            f_mod_mhz: f_mod,
            variant: self.physics.variant.unwrap_or_default(),
            encoding: self.physics.encoding.unwrap_or_default(),
            gate,
            two_qubit_gate: self
                .physics
                .two_qubit_gate
                .unwrap_or(TwoQubitGate::SqrtSwap),
            n_periods,
            duration_us: self.physics.duration_us.unwrap_or(10.0 / omega_r),
            j0_mhz: self.physics.j0_mhz.unwrap_or(DEFAULT_J0_MHZ),
            steps_per_period: steps,
            fidelity_metric: self.physics.fidelity_metric.unwrap_or_default(),
            grid,
            sigma_nu_max_mhz: self.sigma.sigma_nu_max_mhz.unwrap_or(0.5),
            sigma_nu_points: self.sigma.sigma_nu_points.unwrap_or(11),
            sigma_omega_max: self.sigma.sigma_omega_max.unwrap_or(0.25),
            sigma_omega_points: self.sigma.sigma_omega_points.unwrap_or(11),
            axis_harmonic: self.axis_map.harmonic.unwrap_or(1),
            axis_nu_min_mhz: self.axis_map.nu_min_mhz.unwrap_or(0.0125),
            axis_nu_max_mhz: self.axis_map.nu_max_mhz.unwrap_or(1.0),
            axis_nu_points: self.axis_map.nu_points.unwrap_or(81),
            axis_phi_points: self.axis_map.phi_points.unwrap_or(81),
            curve_n_samples: self.space_curve.n_samples.unwrap_or(4097),
            curve_n_periods: self.space_curve.n_periods.unwrap_or(1),
            curve_amplitude_offset: self.space_curve.amplitude_offset.unwrap_or(0.0),
            filter_f_max_mhz: self.filter.f_max_mhz.unwrap_or(3.0 * omega_r),
            filter_points: self.filter.points.unwrap_or(121),
            filter_n_periods: self.filter.n_periods.unwrap_or(4),
            grape_n_periods_list: grape_list,
            ramp_case,
            ramp_times_us: ramp_times,
            detuning_magnitudes_mhz: self
                .ramp
                .detuning_magnitudes_mhz
                .clone()
                .unwrap_or_else(|| vec![0.05, 0.1]),
            t_c_ghz: self.ramp.t_c_ghz.unwrap_or(DEFAULT_T_C_GHZ),
            ramp_from_ghz: self.ramp.ramp_from_ghz.unwrap_or(50.0),
            ramp_to_ghz: self.ramp.ramp_to_ghz.unwrap_or(-50.0),
            park_from_ghz: self.ramp.park_from_ghz.unwrap_or(5000.0),
            park_to_ghz: self.ramp.park_to_ghz.unwrap_or(-5000.0),
            readout_initial_state: self.ramp.initial_state.unwrap_or(StState::S11),
            eps_min_ghz: self.energy_diagram.eps_min_ghz.unwrap_or(-250.0),
            eps_max_ghz: self.energy_diagram.eps_max_ghz.unwrap_or(250.0),
            eps_points: self.energy_diagram.points.unwrap_or(501),
            diagram_dnu1_mhz: self.energy_diagram.dnu1_mhz.unwrap_or(0.2),
            diagram_dnu2_mhz: self.energy_diagram.dnu2_mhz.unwrap_or(-0.2),
            out_dir: self.output.dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            seed: self.seed.unwrap_or(0),
            workers: self.workers,
        })
    }
}

impl Scenario {
    fn propagation_config(&self) -> PropagationConfig {
        PropagationConfig {
            steps_per_period: self.steps_per_period,
            frame: crate::model::Frame::Dressed,
        }
    }

    fn detuning_pairs(&self) -> Vec<(f64, f64)> {
        let mut values = vec![0.0];
        for &m in &self.detuning_magnitudes_mhz {
            values.push(m);
            values.push(-m);
        }
        let mut pairs = Vec::with_capacity(values.len() * values.len());
        for &a in &values {
            for &b in &values {
                pairs.push((a, b));
            }
        }
        pairs
    }
}

/// One output file produced by a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub seed: u64,
    pub workers: Option<usize>,
    /// The fully resolved configuration; re-running this manifest file
    /// reproduces the outputs.
    pub resolved: Scenario,
    pub outputs: Vec<OutputRecord>,
    /// Free-form numeric diagnostics (zero-offset fidelities, closure
    /// defects, declared profile parameters, ...).
    pub notes: serde_json::Map<String, serde_json::Value>,
}

pub struct RunSummary {
    pub manifest_path: PathBuf,
    pub outputs: Vec<PathBuf>,
}

struct CsvFile {
    name: String,
    text: String,
    rows: usize,
}

impl CsvFile {
    fn new(name: &str, header: &str) -> CsvFile {
        CsvFile {
            name: name.to_string(),
            text: format!("{header}\n"),
            rows: 0,
        }
    }

    fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
        self.rows += 1;
    }
}

fn fnum(x: f64) -> String {
    format!("{x}")
}

fn note_f64(notes: &mut serde_json::Map<String, serde_json::Value>, key: &str, value: f64) {
    notes.insert(
        key.to_string(),
        serde_json::Number::from_f64(value)
            .map(serde_json::Value::Number)
            .unwrap_or(serde_json::Value::Null),
    );
}

/// Execute a resolved scenario and write its CSV tables plus the manifest.
pub fn run(scenario: &Scenario) -> Result<RunSummary> {
    match scenario.workers {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SimError::Config(format!("worker pool: {e}")))?;
            pool.install(|| run_inner(scenario))
        }
        _ => run_inner(scenario),
    }
}

fn run_inner(scenario: &Scenario) -> Result<RunSummary> {
    let mut files: Vec<CsvFile> = Vec::new();
    let mut notes = serde_json::Map::new();
    let cfg = scenario.propagation_config();

    match scenario.experiment {
        Experiment::IdentityMap | Experiment::GateMap => {
            let (grid, label) = single_qubit_offset_grid(scenario, &cfg)?;
            let mut f = CsvFile::new(
                &format!("{label}_offset_map.csv"),
                "delta_nu_mhz,delta_omega_frac,fidelity",
            );
            for (i, &dn) in grid.delta_nu_axis_mhz.iter().enumerate() {
                for (j, &dw) in grid.delta_omega_axis.iter().enumerate() {
                    f.row(&[fnum(dn), fnum(dw), fnum(grid.value(i, j))]);
                }
            }
            files.push(f);
            note_f64(&mut notes, "zero_offset_fidelity", grid.zero_offset_value());
            note_f64(
                &mut notes,
                "detuning_half_width_99_mhz",
                grid.detuning_half_width(0.99),
            );

            let sn = sigma_axis(scenario.sigma_nu_max_mhz, scenario.sigma_nu_points)?;
            let so = sigma_axis(scenario.sigma_omega_max, scenario.sigma_omega_points)?;
            let nmap = noise_level_map(&grid, &sn, &so)?;
            let mut f = CsvFile::new(
                &format!("{label}_noise_map.csv"),
                "sigma_nu_mhz,sigma_omega_frac,fidelity,infidelity",
            );
            for (i, &a) in nmap.sigma_nu_axis_mhz.iter().enumerate() {
                for (j, &b) in nmap.sigma_omega_axis.iter().enumerate() {
                    let v = nmap.value(i, j);
                    f.row(&[fnum(a), fnum(b), fnum(v), fnum(1.0 - v)]);
                }
            }
            files.push(f);
            notes.insert(
                "truncation_warnings".into(),
                serde_json::Value::from(nmap.truncation_warnings),
            );
        }
        Experiment::AxisMap => {
            let nus: Vec<f64> = (0..scenario.axis_nu_points)
                .map(|i| {
                    scenario.axis_nu_min_mhz
                        + (scenario.axis_nu_max_mhz - scenario.axis_nu_min_mhz) * i as f64
                            / (scenario.axis_nu_points.max(2) - 1) as f64
                })
                .collect();
            let phis: Vec<f64> = (0..scenario.axis_phi_points)
                .map(|i| {
                    std::f64::consts::TAU * i as f64 / (scenario.axis_phi_points.max(2) - 1) as f64
                })
                .collect();
            let maps = axis_maps(&nus, &phis, scenario.axis_harmonic, scenario.omega_r_mhz, &cfg)?;
            let mut f = CsvFile::new(
                "axis_map.csv",
                "harmonic,nu_mhz,phi_mod_rad,phi_r_rad,theta_r_rad,eta_percent",
            );
            for (i, &nu) in maps.nu_axis_mhz.iter().enumerate() {
                for (j, &phi) in maps.phi_axis_rad.iter().enumerate() {
                    let idx = i * maps.phi_axis_rad.len() + j;
                    f.row(&[
                        maps.harmonic.to_string(),
                        fnum(nu),
                        fnum(phi),
                        fnum(maps.phi_r[idx]),
                        fnum(maps.theta_r[idx]),
                        fnum(maps.eta_percent[idx]),
                    ]);
                }
            }
            let eta_max = maps.eta_percent.iter().copied().fold(0.0f64, f64::max);
            files.push(f);
            note_f64(&mut notes, "eta_max_percent", eta_max);
        }
        Experiment::SpaceCurve => {
            let amplitude = scenario.omega_r_mhz * (1.0 + scenario.curve_amplitude_offset);
            let envelope = match scenario.encoding {
                Encoding::Dressed => Waveform::constant(amplitude),
                _ => smart_envelope(amplitude, scenario.f_mod_mhz, scenario.variant)?,
            };
            let t_total = match scenario.encoding {
                Encoding::Dressed => scenario.curve_n_periods as f64 / scenario.omega_r_mhz,
                _ => scenario.curve_n_periods as f64 / scenario.f_mod_mhz,
            };
            let curve = space_curve(&envelope, t_total, scenario.curve_n_samples)?;
            let report = magnus_report(&envelope, t_total)?;
            let mut f = CsvFile::new("space_curve.csv", "t_us,x,y,z");
            for (t, s) in &curve.samples {
                f.row(&[fnum(*t), fnum(s[0]), fnum(s[1]), fnum(s[2])]);
            }
            files.push(f);
            note_f64(&mut notes, "closure_defect", report.closure_defect);
            note_f64(&mut notes, "area_xy", report.projected_areas.0);
            note_f64(&mut notes, "area_xz", report.projected_areas.1);
            note_f64(&mut notes, "area_yz", report.projected_areas.2);
            note_f64(&mut notes, "a2_norm", report.a2_norm);
        }
        Experiment::FilterFunction => {
            let envelope = match scenario.encoding {
                Encoding::Dressed => Waveform::constant(scenario.omega_r_mhz),
                _ => smart_envelope(scenario.omega_r_mhz, scenario.f_mod_mhz, scenario.variant)?,
            };
            let t_total = match scenario.encoding {
                Encoding::Dressed => scenario.filter_n_periods as f64 / scenario.omega_r_mhz,
                _ => scenario.filter_n_periods as f64 / scenario.f_mod_mhz,
            };
            let freqs: Vec<f64> = (0..scenario.filter_points)
                .map(|i| {
                    scenario.filter_f_max_mhz * i as f64
                        / (scenario.filter_points.max(2) - 1) as f64
                })
                .collect();
            let vals = filter_function(&envelope, &freqs, t_total)?;
            let mut f = CsvFile::new("filter_function.csv", "freq_mhz,susceptibility");
            for (freq, v) in freqs.iter().zip(vals.iter()) {
                f.row(&[fnum(*freq), fnum(*v)]);
            }
            files.push(f);
        }
        Experiment::GrapeTable => {
            let mut f = CsvFile::new("grape_table.csv", "gate,n_periods,nu_v_mhz,nu_w_mhz");
            for gate in [XyGate::SqrtX, XyGate::SqrtY] {
                for &n in &scenario.grape_n_periods_list {
                    let res = grape_optimize(
                        gate,
                        n,
                        scenario.variant,
                        scenario.omega_r_mhz,
                        &cfg,
                        scenario.seed,
                    )?;
                    let label = match gate {
                        XyGate::SqrtX => "sqrt_x",
                        XyGate::SqrtY => "sqrt_y",
                        _ => unreachable!(),
                    };
                    f.row(&[
                        label.to_string(),
                        n.to_string(),
                        fnum(res.nu_v_mhz),
                        fnum(res.nu_w_mhz),
                    ]);
                }
            }
            files.push(f);
            notes.insert(
                "published_rows".into(),
                serde_json::Value::from(XY_COEFFICIENT_SEEDS.len()),
            );
        }
        Experiment::TwoQubitMap => {
            let program = match scenario.two_qubit_gate {
                TwoQubitGate::SqrtSwap => sqrt_swap_program(
                    scenario.j0_mhz,
                    scenario.omega_r_mhz,
                    scenario.variant,
                    &cfg,
                )?,
                TwoQubitGate::Cnot => compose_cnot(
                    scenario.n_periods,
                    scenario.j0_mhz,
                    scenario.omega_r_mhz,
                    scenario.variant,
                    &cfg,
                )?,
                TwoQubitGate::CnotX => compose_cnot_x(
                    scenario.n_periods,
                    scenario.j0_mhz,
                    scenario.omega_r_mhz,
                    scenario.variant,
                    &cfg,
                )?,
            };
            let zero = propagate_two_qubit(&program, (NoiseOffset::ZERO, NoiseOffset::ZERO), &cfg)?;
            note_f64(
                &mut notes,
                "zero_noise_fidelity_vs_factor_product",
                fidelity(&zero, &program.target)?,
            );
            if let Some(canon) = &program.canonical_target {
                note_f64(
                    &mut notes,
                    "zero_noise_fidelity_vs_canonical",
                    fidelity(&zero, canon)?,
                );
            }
            let grid4 = offset_fidelity_grid4(&program, &scenario.grid, &cfg, scenario.fidelity_metric)?;
            note_f64(&mut notes, "zero_offset_fidelity", grid4.zero_offset_value());
            let sn = sigma_axis(scenario.sigma_nu_max_mhz, scenario.sigma_nu_points)?;
            let so = sigma_axis(scenario.sigma_omega_max, scenario.sigma_omega_points)?;
            let nmap = two_qubit_noise_level_map(&grid4, &sn, &so)?;
            let mut f = CsvFile::new(
                &format!("{}_noise_map.csv", program.name),
                "sigma_nu_mhz,sigma_omega_frac,fidelity,infidelity",
            );
            for (i, &a) in nmap.sigma_nu_axis_mhz.iter().enumerate() {
                for (j, &b) in nmap.sigma_omega_axis.iter().enumerate() {
                    let v = nmap.value(i, j);
                    f.row(&[fnum(a), fnum(b), fnum(v), fnum(1.0 - v)]);
                }
            }
            files.push(f);
            for w in &program.warnings {
                notes.insert(
                    format!("warning_{}", notes.len()),
                    serde_json::Value::String(w.clone()),
                );
            }
        }
        Experiment::StInit | Experiment::StReadout => {
            let sys = match scenario.encoding {
                Encoding::Dressed => {
                    STSystem::dressed(scenario.omega_r_mhz, 0.0, 0.0, scenario.t_c_ghz)?
                }
                _ => STSystem::smart(scenario.omega_r_mhz, 0.0, 0.0, scenario.t_c_ghz)?,
            };
            let spec = RampSpec {
                ramp_time_us: 0.0,
                ramp_from_ghz: scenario.ramp_from_ghz,
                ramp_to_ghz: scenario.ramp_to_ghz,
                park_from_ghz: scenario.park_from_ghz,
                park_to_ghz: scenario.park_to_ghz,
                centering: scenario.ramp_case,
            };
            let pairs = scenario.detuning_pairs();
            let points = if scenario.experiment == Experiment::StInit {
                ramp_initialisation(&sys, &spec, &scenario.ramp_times_us, &pairs, &cfg)?
            } else {
                ramp_readout(
                    &sys,
                    &spec,
                    &scenario.ramp_times_us,
                    &pairs,
                    scenario.readout_initial_state,
                    &cfg,
                )?
            };
            let name = if scenario.experiment == Experiment::StInit {
                "st_init.csv"
            } else {
                "st_readout.csv"
            };
            let mut f = CsvFile::new(name, "ramp_time_us,dnu1_mhz,dnu2_mhz,p_s02,p_s11");
            for p in &points {
                f.row(&[
                    fnum(p.ramp_time_us),
                    fnum(p.dnu1_mhz),
                    fnum(p.dnu2_mhz),
                    fnum(p.p_s02),
                    fnum(p.p_s11),
                ]);
            }
            files.push(f);
            note_f64(&mut notes, "window_us", sys.window_us);
            note_f64(&mut notes, "park_from_ghz", scenario.park_from_ghz);
            note_f64(&mut notes, "park_to_ghz", scenario.park_to_ghz);
        }
        Experiment::EnergyDiagram => {
            let sys = STSystem::smart(
                scenario.omega_r_mhz,
                scenario.diagram_dnu1_mhz,
                scenario.diagram_dnu2_mhz,
                scenario.t_c_ghz,
            )?;
            // freeze the envelope at its maximum
            let eval_t = 0.25 * sys.reference_period_us;
            let grid: Vec<f64> = (0..scenario.eps_points)
                .map(|i| {
                    scenario.eps_min_ghz
                        + (scenario.eps_max_ghz - scenario.eps_min_ghz) * i as f64
                            / (scenario.eps_points.max(2) - 1) as f64
                })
                .collect();
            let table = st_energy_diagram(&sys, &grid, eval_t)?;
            let mut f = CsvFile::new(
                "energy_diagram.csv",
                "epsilon_ghz,e1_ghz,e2_ghz,e3_ghz,e4_ghz,e5_ghz",
            );
            for (eps, ev) in &table {
                f.row(&[
                    fnum(*eps),
                    fnum(ev[0]),
                    fnum(ev[1]),
                    fnum(ev[2]),
                    fnum(ev[3]),
                    fnum(ev[4]),
                ]);
            }
            files.push(f);
        }
    }

    fs::create_dir_all(&scenario.out_dir)?;
    let mut outputs = Vec::new();
    let mut records = Vec::new();
    for f in &files {
        let path = scenario.out_dir.join(&f.name);
        fs::write(&path, &f.text)?;
        records.push(OutputRecord {
            file: f.name.clone(),
            rows: f.rows,
        });
        outputs.push(path);
    }
    let manifest = Manifest {
        tool: "smartspin".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        experiment: scenario.experiment.name().into(),
        seed: scenario.seed,
        workers: scenario.workers,
        resolved: scenario.clone(),
        outputs: records,
        notes,
    };
    let manifest_path = scenario.out_dir.join("manifest.json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| SimError::Config(format!("manifest serialization: {e}")))?,
    )?;
    Ok(RunSummary {
        manifest_path,
        outputs,
    })
}

/// Offset grid for the configured single-qubit experiment, handling the
/// bare/dressed/modulated encodings.
fn single_qubit_offset_grid(
    scenario: &Scenario,
    cfg: &PropagationConfig,
) -> Result<(FidelityGrid, String)> {
    let metric = scenario.fidelity_metric;
    match (scenario.experiment, scenario.encoding) {
        (Experiment::IdentityMap, Encoding::Bare) => {
            let duration = scenario.duration_us;
            let grid = offset_fidelity_map_fn(
                "bare_identity",
                1,
                &scenario.grid,
                |noise| {
                    let h = build_hamiltonian(
                        &QubitFrameSpec::dressed(),
                        &Waveform::zero(),
                        &Waveform::zero(),
                        noise,
                    )?;
                    let u = propagate(&h, 0.0, duration, &PropagationConfig::with_steps(64))?;
                    crate::numerics::score(&u, &Unitary::identity(2), metric)
                },
            )?;
            Ok((grid, "bare_identity".into()))
        }
        (Experiment::IdentityMap, Encoding::Dressed) => {
            let duration = scenario.duration_us;
            let omega_r = scenario.omega_r_mhz;
            let steps = cfg.steps_per_period;
            let grid = offset_fidelity_map_fn(
                "dressed_identity",
                1,
                &scenario.grid,
                |noise| {
                    let h = build_hamiltonian(
                        &QubitFrameSpec::dressed(),
                        &Waveform::constant(omega_r),
                        &Waveform::zero(),
                        noise,
                    )?;
                    let u = propagate(&h, 0.0, duration, &PropagationConfig::with_steps(steps))?;
                    crate::numerics::score(&u, &Unitary::identity(2), metric)
                },
            )?;
            Ok((grid, "dressed_identity".into()))
        }
        _ => {
            let program = build_gate(
                scenario.gate,
                scenario.n_periods,
                scenario.variant,
                scenario.omega_r_mhz,
                cfg,
            )?;
            let label = format!("smart_{}", program.name);
            let grid = offset_fidelity_map(&program, &scenario.grid, cfg, metric)?;
            Ok((grid, label))
        }
    }
}

/// Plain-text experiment listing with the fields each one reads.
pub fn list_experiments() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "available experiments:");
    for e in Experiment::ALL {
        let detail = match e {
            Experiment::IdentityMap => {
                "identity-gate offset + noise maps; [physics] encoding = bare|dressed|smart, n_periods, duration_us; [grid]; [sigma]"
            }
            Experiment::GateMap => {
                "calibrated-gate offset + noise maps; [physics] gate = sqrt_x|sqrt_x_dag|sqrt_y|sqrt_y_dag|sqrt_v|sqrt_v_dag|sqrt_w|sqrt_w_dag, n_periods, variant; [grid]; [sigma]"
            }
            Experiment::AxisMap => {
                "rotation-axis and efficiency maps over (nu, phi_mod); [axis_map] harmonic = 1|2, nu/phi grids"
            }
            Experiment::SpaceCurve => {
                "noise space curve samples and closure diagnostics; [space_curve] n_samples, n_periods, amplitude_offset; [physics] encoding = dressed|smart"
            }
            Experiment::FilterFunction => {
                "single-tone noise susceptibility vs frequency; [filter] f_max_mhz, points, n_periods; [physics] encoding = dressed|smart"
            }
            Experiment::GrapeTable => {
                "optimized (nu_v, nu_w) coefficients for sqrt_x/sqrt_y over [grape] n_periods_list"
            }
            Experiment::TwoQubitMap => {
                "two-qubit gate Gaussian noise map; [physics] two_qubit_gate = sqrt_swap|cnot|cnot_x, j0_mhz, n_periods; [grid]; [sigma]"
            }
            Experiment::StInit => {
                "singlet-triplet initialisation ramp sweep; [ramp] case = A (ramp centered on an envelope zero) | B (centered on an envelope maximum), ramp_times_us, detuning_magnitudes_mhz, t_c_ghz, ramp/park levels; [physics] encoding = dressed|smart"
            }
            Experiment::StReadout => {
                "reversed-ramp readout sweep (same fields as st_init plus ramp.initial_state = s11|t_plus|t0|t_minus|s02)"
            }
            Experiment::EnergyDiagram => {
                "five-level eigenvalues vs charge detuning; [energy_diagram] eps range, points, dnu1/dnu2_mhz"
            }
        };
        let _ = writeln!(s, "  {:<16} {detail}", e.name());
    }
    s
}

/// Parse and resolve a config file; `.json` inputs are interpreted as run
/// manifests and re-run from their resolved scenario.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| SimError::Config(format!("failed to parse manifest: {e}")))?;
        return Ok(manifest.resolved);
    }
    ScenarioConfig::from_toml(&text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_contains_all_experiments_and_case_doc() {
        let listing = list_experiments();
        for e in Experiment::ALL {
            assert!(listing.contains(e.name()), "missing {}", e.name());
        }
        assert!(listing.contains("case = A"));
        assert!(listing.contains("envelope zero"));
        assert!(listing.contains("envelope maximum"));
        // stable across calls
        assert_eq!(listing, list_experiments());
    }

    #[test]
    fn defaults_resolve_and_validate() {
        let cfg = ScenarioConfig::from_toml("experiment = \"identity_map\"").unwrap();
        let s = cfg.resolve().unwrap();
        assert_eq!(s.omega_r_mhz, 1.0);
        assert!((s.f_mod_mhz - 0.588074).abs() < 1e-5);
        assert_eq!(s.grid.delta_nu_points, 81);
        assert_eq!(s.n_periods, 7);
    }

    #[test]
    fn empty_grid_is_a_validation_error() {
        let cfg = ScenarioConfig::from_toml(
            "experiment = \"identity_map\"\n[grid]\ndelta_nu_points = 0\n",
        )
        .unwrap();
        let err = cfg.resolve();
        match err {
            Err(SimError::Config(msg)) => assert!(msg.contains("grid"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_experiment_fails_to_parse() {
        assert!(ScenarioConfig::from_toml("experiment = \"mystery\"").is_err());
    }

    #[test]
    fn unknown_field_is_named_in_the_error() {
        let err = ScenarioConfig::from_toml(
            "experiment = \"identity_map\"\n[physics]\nomega_r = 1.0\n",
        );
        match err {
            Err(SimError::Config(msg)) => assert!(msg.contains("omega_r"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn bad_ramp_case_is_rejected() {
        let cfg = ScenarioConfig::from_toml(
            "experiment = \"st_init\"\n[ramp]\ncase = \"C\"\n",
        )
        .unwrap();
        assert!(matches!(cfg.resolve(), Err(SimError::Config(_))));
    }
}
