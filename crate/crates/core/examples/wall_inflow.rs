//! Walls, inflow profiles and their coarsening to a jump budget.

use euler_fronts::coefficients::Background;
use euler_fronts::geometry::{approximate_inflow, build_inflow, jump_budget, Perturbation, Wall};
use euler_fronts::{FlowState, GasModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let wall = Wall::build(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.01), (3.0, 0.01)])?;
    println!("wall: turning {:?}, TV {:.8}", wall.turning, wall.tv_gprime);
    let random = Wall::random(7, 20, 0.04, 10.0)?;
    println!("random wall: {} vertices, TV {:.6}, g(5) = {:.6}", random.vertices.len(), random.tv_gprime, random.g(5.0));

    let gas = GasModel::new(1.4)?;
    let bg = Background::new(&gas, FlowState::new(2.0, 0.0, 1.0, 1.4), 0.1, 0.05)?;
    let pert = Perturbation::Random { seed: 3, jumps: 50, tv: 0.04, support: (0.0, 3.0) };
    let inflow = build_inflow(&gas, &bg, 1.0, &pert, 0.05, 0.3)?;
    println!("\ninflow: {} jumps, perturbation TV {:.6}", inflow.profile.jump_count(), inflow.tv_perturbation);

    for theta in [4e-3, 1e-3, 2.5e-4] {
        let budget = jump_budget(theta, 0.05);
        let coarse = approximate_inflow(&inflow, theta, budget);
        println!(
            "theta {theta:.1e}: budget {budget:>3}, kept {:>3} jumps, L1 error {:.3e} (bound {:.3e})",
            coarse.profile.jump_count(),
            coarse.profile.l1_distance(&inflow.profile),
            coarse.coarsening_error
        );
    }
    Ok(())
}
