use smartspin::gates::*;
use smartspin::model::*;
use smartspin::noisemaps::*;
use smartspin::numerics::*;

fn main() {
    let cfg = PropagationConfig::default();
    let grid = GridSpec { delta_nu_points: 41, delta_omega_points: 41, ..Default::default() };
    let sn = sigma_axis(0.5, 6).unwrap();
    let so = sigma_axis(0.25, 5).unwrap();
    let mut nmaps = Vec::new();
    let mut omaps = Vec::new();
    for gate in [Gate::SqrtX, Gate::SqrtV] {
        let program = build_gate(gate, 7, Variant::Sine, 1.0, &cfg).unwrap();
        let offset = offset_fidelity_map(&program, &grid, &cfg, FidelityMetric::OperatorOverlap).unwrap();
        nmaps.push(noise_level_map(&offset, &sn, &so).unwrap());
        omaps.push(offset);
    }
    for (name, m) in [("x", &nmaps[0]), ("v", &nmaps[1])] {
        println!("sigma map {name} (rows sigma_nu 0..0.5, cols sigma_om 0..0.25):");
        for i in 0..6 {
            let row: Vec<String> = (0..5).map(|j| format!("{:.4}", m.value(i, j))).collect();
            println!("  {}", row.join(" "));
        }
    }
    // offset-map slices along delta_nu at delta_omega = 0
    let j0 = 20;
    println!("offset slice (delta_omega=0), delta_nu from -1 to 1:");
    for (name, m) in [("x", &omaps[0]), ("v", &omaps[1])] {
        let row: Vec<String> = (0..41).step_by(4).map(|i| format!("{:.3}", m.value(i, j0))).collect();
        println!("  {name}: {}", row.join(" "));
    }
    // and along delta_omega at delta_nu = 0
    println!("offset slice (delta_nu=0), delta_omega from -0.5 to 0.5:");
    for (name, m) in [("x", &omaps[0]), ("v", &omaps[1])] {
        let row: Vec<String> = (0..41).step_by(4).map(|j| format!("{:.3}", m.value(20, j))).collect();
        println!("  {name}: {}", row.join(" "));
    }
}
