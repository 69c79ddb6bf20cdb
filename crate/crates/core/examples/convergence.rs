//! Refinement study: sup-in-x L1 distance between runs at consecutive
//! approximation levels.
//!
//! cargo run --release --example convergence -- [theta,theta,...]

use euler_fronts::experiments::convergence_study;
use euler_fronts::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let levels: Vec<f64> = match std::env::args().nth(1) {
        Some(s) => s.split(',').map(str::parse).collect::<Result<_, _>>()?,
        None => vec![8e-3, 4e-3, 2e-3, 1e-3],
    };
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/demo.json");
    let scenario = Scenario::load(path.as_ref())?;
    let table = convergence_study(&scenario, &levels, 100)?;
    println!("  coarse      fine    sup L1");
    for r in &table.rows {
        println!("{:8.1e} {:9.1e} {:9.4e}", r.coarse, r.fine, r.distance);
    }
    println!("strictly decreasing: {}", table.strictly_decreasing);
    println!("C' = {:.4} (distance <= C' theta), observed rate {:?}", table.c_prime, table.rate);
    Ok(())
}
