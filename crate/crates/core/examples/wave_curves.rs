//! Shock and rarefaction curves through one state, the composite contact
//! map, and the admissibility test.

use euler_fronts::wave_curves::{
    check_entropy, contact_map, oblique_shock, rankine_hugoniot_residual, rarefaction_state, shock_state, wave_map, LaxOrdering,
};
use euler_fronts::{FlowState, GasModel, WaveFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gas = GasModel::new(1.4)?;
    let u = FlowState::new(2.0, 0.0, 1.0, 1.4);

    println!("alpha      4-curve rho     1-curve rho");
    for k in -5..=5 {
        let a = 0.02 * k as f64;
        let s4 = wave_map(&gas, &u, WaveFamily::F4, a)?;
        let s1 = wave_map(&gas, &u, WaveFamily::F1, a)?;
        println!("{a:+.2}     {:.8}      {:.8}", s4.rho, s1.rho);
    }

    let shock = shock_state(&gas, &u, WaveFamily::F4, 0.05)?;
    let check = check_entropy(&gas, &shock)?;
    println!("\n4-shock of size 0.05: slope {:.8}", shock.speed());
    println!("  RH residual {:.2e}", rankine_hugoniot_residual(&gas, &shock.back, &shock.front, shock.speed())?);
    println!("  admissible (characteristic ordering) {}", check.admissible(LaxOrdering::Characteristic));
    println!("  admissible (literal ordering)        {}", check.admissible(LaxOrdering::AsPrinted));
    println!("  Lax margin {:.3e}, density jump {:.3e}", check.lax_margin, check.density_jump);

    let fan = rarefaction_state(&gas, &u, WaveFamily::F4, 0.05)?;
    println!(
        "\n4-rarefaction of size 0.05: speeds [{:.6}, {:.6}], entropy change {:.2e}",
        fan.speed_lo,
        fan.speed_hi,
        gas.entropy(&fan.front)? - gas.entropy(&fan.back)?
    );

    let ob = oblique_shock(&gas, &u, WaveFamily::F4, 1.2)?;
    println!("\noblique 4-shock, density ratio 1.2: downstream {:?}, slope {:.8}", ob.back, ob.speed());

    let plus = contact_map(&u, 0.1, 0.05);
    println!("\ncontact map (0.1, 0.05): {plus:?}");
    Ok(())
}
