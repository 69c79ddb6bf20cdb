//! Reflection and transmission coefficients of a background and the
//! weights chosen for the Glimm and Lyapunov functionals.

use euler_fronts::coefficients::{
    boundary_coefficients, closed_forms, contact_determinant, finite_difference_coefficients, select_weights, weight_constraints,
    Background, SelectorScales,
};
use euler_fronts::riemann::{BoundaryEdge, Riemann};
use euler_fronts::{FlowState, GasModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gas = GasModel::new(1.4)?;
    let bg = Background::new(&gas, FlowState::new(2.0, 0.0, 1.0, 1.4), 0.1, 0.05)?;
    let solver = Riemann::new(gas, Riemann::lambda_hat_for(&gas, &bg, 0.5)?);

    let closed = closed_forms(&gas, &bg)?;
    let fd = finite_difference_coefficients(&solver, &bg)?;
    println!("            closed form     finite difference");
    println!("|K11|  {:>18.10} {:>18.10}", closed.k11, fd.k11().abs());
    println!("|K14|  {:>18.10} {:>18.10}", closed.k14, fd.k14().abs());
    println!("|K21|  {:>18.10} {:>18.10}", closed.k21, fd.k21().abs());
    println!("|K24|  {:>18.10} {:>18.10}", closed.k24, fd.k24().abs());
    println!("contact determinant {:.6}", contact_determinant(&gas, &bg)?);

    let kb = boundary_coefficients(&solver, &bg, &BoundaryEdge::flat())?;
    println!("wall coefficients [Kb0, Kb1, Kb2, Kb3] = {kb:?}");

    let w = select_weights(&gas, &bg, &fd, &SelectorScales::default())?;
    println!("\nK* = {:.6}, K+ = {:.6}, C* = {:.6}, kappa = {}", w.k_star, w.k_plus, w.c_star, w.kappa);
    println!("gamma_b = {:.6}, gamma_a = {:.6}", w.gamma_b, w.gamma_a);
    println!("w_b = {:?}\nw_m = {:?}\nw_a = {:?}", w.w_b, w.w_m, w.w_a);
    for c in weight_constraints(&gas, &bg, &fd, &w)? {
        println!("  {:<40} {:>12.6} < {:<12.6} {}", c.name, c.lhs, c.rhs, if c.holds() { "ok" } else { "FAILS" });
    }
    Ok(())
}
