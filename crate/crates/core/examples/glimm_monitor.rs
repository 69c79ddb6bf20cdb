//! The Glimm functional across every event of a few seeded runs, with
//! the realised decrease rate of the interaction potential.

use euler_fronts::geometry::Perturbation;
use euler_fronts::scenario::{Scenario, WallSpec};
use euler_fronts::tracker::{run, RunOptions, SolverUsed};
use euler_fronts::FlowState;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let below = FlowState::new(2.0, 0.0, 1.0, 1.4);
    let options = RunOptions { keep_history: false, sample_xs: Vec::new() };
    println!("seed   events   max dG - defect   violations   nu");
    for seed in 1..=4 {
        let mut sc = Scenario::background_only(below, 0.1, 0.05, 1.0);
        sc.wall = WallSpec::Random { seed, count: 20, tv: 0.04, length: 10.0 };
        sc.perturbation = Perturbation::Random { seed, jumps: 50, tv: 0.04, support: (0.0, 3.0) };
        sc.theta.theta = 2e-3;
        sc.seed = seed;
        let sol = run(&sc.prepare()?, &options)?;
        let worst = sol.events.iter().map(|e| e.delta_g - e.defect).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{seed:>4} {:>8} {worst:>17.3e} {:>12} {:>8.4}",
            sol.events.len(),
            sol.stats.glimm_violations,
            sol.stats.nu.unwrap_or(f64::NAN)
        );
        if seed == 1 {
            let accurate: Vec<_> = sol.events.iter().filter(|e| e.solver != SolverUsed::Simplified).take(5).collect();
            for e in accurate {
                println!("      x {:.4} {:?} {:?}: dG {:+.3e}, dQ {:+.3e}", e.x, e.kind, e.solver, e.delta_g, e.delta_q);
            }
        }
    }
    Ok(())
}
