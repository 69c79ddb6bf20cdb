//! Lyapunov functional between two runs that differ only in their inflow.
//!
//! cargo run --release --example lyapunov_pair -- [theta]

use euler_fronts::experiments::stability_experiment;
use euler_fronts::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let theta: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2e-3);
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    let u = Scenario::load(format!("{dir}/demo.json").as_ref())?;
    let v = Scenario::load(format!("{dir}/demo_pair.json").as_ref())?;
    let r = stability_experiment(&u, &v, Some(theta), 50)?;

    println!("theta {theta:.1e}: norm constant {:.4}", r.norm_constant);
    println!("L1(0) = {:.4e}, Phi(0) = {:.4e}", r.initial_l1, r.initial_phi);
    println!("Lipschitz L = {:.4e} (empirical {:.4}), drift C = {:.4e}", r.lipschitz, r.empirical_lipschitz, r.drift);
    println!("equivalence holds: {}", r.equivalence_holds);
    println!("strong contact decay max {:?} over {} crossings", r.strong_decay_max, r.strong_crossings);
    println!("boundary decay max {:.3e} (literal sign {:.3e})", r.boundary_transport_max, r.boundary_as_printed_max);
    println!("L1 bound holds: {}", r.l1_bound_holds);
    println!("\n     x          Phi           L1      Phi/L1");
    for s in r.samples.iter().step_by(5) {
        println!("{:6.2} {:12.5e} {:12.5e} {:11.4}", s.x, s.phi, s.l1, s.phi / s.l1);
    }
    Ok(())
}
