//! The four Riemann solvers used by the tracker.

use euler_fronts::coefficients::Background;
use euler_fronts::riemann::{BoundaryEdge, Incoming, Riemann};
use euler_fronts::wave_curves::wave_map;
use euler_fronts::{FlowState, GasModel, WaveFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gas = GasModel::new(1.4)?;
    let minus = FlowState::new(2.0, 0.0, 1.0, 1.4);
    let bg = Background::new(&gas, minus, 0.1, 0.05)?;
    let solver = Riemann::new(gas, Riemann::lambda_hat_for(&gas, &bg, 0.5)?);

    // Weak solver: compose four waves forward and recover them.
    let alpha = [0.02, -0.01, 0.015, -0.03];
    let families = [WaveFamily::F1, WaveFamily::Contact2, WaveFamily::Contact3, WaveFamily::F4];
    let mut above = minus;
    for (f, a) in families.iter().zip(alpha) {
        above = wave_map(&gas, &above, *f, a)?;
    }
    let fan = solver.solve_weak(&minus, &above)?;
    println!("weak: built {alpha:?}\n      found {:?}", fan.strengths());

    // Strong solver: a weak 4-wave hits the strong contact from below.
    let below = solver.inverse_wave_map(&minus, WaveFamily::F4, 0.02)?;
    let fan = solver.solve_strong(&bg, &below, &bg.plus)?;
    for w in &fan.waves {
        println!("strong: {:?} strength {:+.6e} pair {:?}", w.family, w.strength, w.pair);
    }

    // Lateral solver: the wall turns by +-0.01 under the background flow.
    for turn in [0.01, -0.01] {
        let fan = solver.solve_lateral(&minus, &BoundaryEdge::new(turn, turn))?;
        let w = &fan.waves[0];
        println!("lateral turn {turn:+}: {:?} strength {:+.6e}, rho {:.6} -> {:.6}", w.family, w.strength, w.back.rho, w.front.rho);
    }

    // Simplified solver: two weak waves cross and the defect is carried
    // by a non-physical front.
    let s1 = wave_map(&gas, &minus, WaveFamily::F4, -1e-4)?;
    let s2 = wave_map(&gas, &s1, WaveFamily::F1, 2e-4)?;
    let fan = solver.solve_simplified(
        &Incoming::Nonlinear { family: WaveFamily::F4, strength: -1e-4 },
        &Incoming::Nonlinear { family: WaveFamily::F1, strength: 2e-4 },
        [minus, s1, s2],
    )?;
    for w in &fan.waves {
        println!("simplified: {:?} strength {:+.6e}", w.family, w.strength);
    }
    println!("non-physical strength {:.3e}", fan.nonphysical_strength);
    Ok(())
}
