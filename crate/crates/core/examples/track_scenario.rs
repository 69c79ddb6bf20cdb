//! Track a scenario file end to end and write its outputs.
//!
//! cargo run --release --example track_scenario -- [scenario.json] [out-dir]

use std::path::PathBuf;

use euler_fronts::experiments::run_scenario;
use euler_fronts::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/demo.json")));
    let out = args.next().map(PathBuf::from);
    let scenario = Scenario::load(&path)?;
    let outcome = run_scenario(&scenario, out.as_deref())?;

    let s = &outcome.report.stats;
    println!("scenario {} ({})", scenario.name.as_deref().unwrap_or("?"), &outcome.report.scenario_hash[..12]);
    println!("inflow jumps {}, wall vertices {}", outcome.setup.inflow.profile.jump_count(), outcome.setup.wall.vertices.len());
    println!("events {} = {} collisions + {} wall hits + {} vertices", s.events, s.collisions, s.wall_hits, s.vertices_processed);
    println!("solvers: {} accurate, {} simplified", s.accurate, s.simplified);
    println!("fronts: max {}, final {}", s.max_fronts, s.final_fronts);
    println!("non-physical mass: max {:.4e}, exited {:.4e}", s.max_nonphysical_mass, s.exited_mass);
    println!("TV: initial {:.5}, max {:.5}", s.initial_tv, s.max_tv);

    let every = (outcome.solution.trace.len() / 10).max(1);
    println!("\n       x            V            Q            G   fronts");
    for r in outcome.solution.trace.iter().step_by(every) {
        println!("{:8.4} {:12.6e} {:12.6e} {:12.6e} {:8}", r.x, r.v, r.q_total(), r.g, r.front_count);
    }
    match &outcome.report.violation {
        None => println!("\nall monitors green"),
        Some(v) => println!("\nmonitor violated: {v}"),
    }
    if let Some(dir) = out {
        println!("outputs in {}", dir.display());
    }
    Ok(())
}
