//! Closure relations and characteristic structure at a few states.

use euler_fronts::{FlowState, GasModel};

fn main() -> Result<(), euler_fronts::GasError> {
    let gas = GasModel::new(1.4)?;
    let states = [
        FlowState::new(2.0, 0.0, 1.0, 1.4),
        FlowState::new(3.0, 0.5, 2.0, 1.0),
        FlowState::new(2.5, -0.2, 0.8, 1.1),
    ];
    for s in &states {
        let c = gas.sound_speed(s)?;
        let e = gas.eigen(s)?;
        let (w, h) = gas.fluxes(s)?;
        println!("state {s:?}");
        println!("  c = {c:.6}, M = {:.4}, S = {:.6}", gas.mach(s)?, gas.entropy(s)?);
        println!("  slopes  {:?}", e.slopes);
        println!("  W = {w:?}");
        println!("  H = {h:?}");
        for (j, r) in e.vectors.iter().enumerate() {
            println!("  r{} = {r:?}", j + 1);
        }
        println!("  renormalisation (1, 4) = {:?}", e.renorm);
    }

    // Sonic and subsonic states are outside the hyperbolic regime.
    match gas.slopes(&FlowState::new(0.5, 0.0, 1.0, 1.4)) {
        Ok(_) => println!("unexpected: subsonic state accepted"),
        Err(e) => println!("subsonic state rejected: {e}"),
    }
    Ok(())
}
