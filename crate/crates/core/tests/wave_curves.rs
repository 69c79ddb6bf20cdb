use approx::assert_relative_eq;
use euler_fronts::wave_curves::{
    check_entropy, contact_jacobian, contact_map, hugoniot_log, oblique_shock, rankine_hugoniot_residual, rarefaction_log,
    rarefaction_state, shock_state, wave_map, LaxOrdering,
};
use euler_fronts::{FlowState, GasModel, WaveFamily};
use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;

const U: FlowState = FlowState::new(2.0, 0.0, 1.0, 1.4);

fn gas() -> GasModel {
    GasModel::new(1.4).unwrap()
}

#[test]
fn contact_map_examples() {
    assert_eq!(contact_map(&U, 0.0, 0.0), U);
    let p = contact_map(&U, 0.1, 0.05);
    assert_relative_eq!(p.u, 2.0 * 0.1f64.exp(), epsilon = 1e-15);
    assert_eq!(p.v, 0.0);
    assert_eq!(p.p, 1.0);
    assert_relative_eq!(p.rho, 1.4 * 0.05f64.exp(), epsilon = 1e-15);
}

#[test]
fn contact_map_derivative_in_vortex_strength() {
    let s = FlowState::new(2.3, 0.2, 1.1, 1.2);
    let (s2, s3, h) = (0.07, -0.03, 1e-6);
    let fd: Vec<f64> = contact_map(&s, s2 + h, s3)
        .to_array()
        .iter()
        .zip(contact_map(&s, s2 - h, s3).to_array())
        .map(|(a, b)| (a - b) / (2.0 * h))
        .collect();
    let e = s2.exp();
    let exact = [s.u * e, s.v * e, 0.0, 0.0];
    for i in 0..4 {
        assert!((fd[i] - exact[i]).abs() <= 1e-7);
    }
    assert_eq!(contact_jacobian(s2, s3), [e, e, 1.0, s3.exp()]);
}

#[test]
fn weak_shock_limit() {
    let g = gas();
    let l4 = g.nonlinear_slope(&U, 1.0).unwrap();
    for eps in [1e-3, 1e-4, 1e-5] {
        let w = shock_state(&g, &U, WaveFamily::F4, eps).unwrap();
        assert!(w.front.sup_dist(&w.back) <= 5.0 * eps);
        assert!((w.speed() - l4).abs() <= 5.0 * eps);
    }
}

/// Solve `sigma [W] - [H] = 0` for `(u, v, p, sigma)` at fixed density by
/// Newton with a finite-difference Jacobian.
fn jump_oracle(gas: &GasModel, back: &FlowState, rho: f64, guess: [f64; 4]) -> (FlowState, f64) {
    let (wb, hb) = gas.fluxes(back).unwrap();
    let f = |x: &Vector4<f64>| -> Vector4<f64> {
        let (wf, hf) = gas.fluxes(&FlowState::new(x[0], x[1], x[2], rho)).unwrap();
        Vector4::from_fn(|i, _| x[3] * (wf[i] - wb[i]) - (hf[i] - hb[i]))
    };
    let mut x = Vector4::from(guess);
    for _ in 0..100 {
        let fx = f(&x);
        if fx.amax() < 1e-14 {
            break;
        }
        let mut j = Matrix4::zeros();
        for k in 0..4 {
            let mut xp = x;
            xp[k] += 1e-7;
            j.set_column(k, &((f(&xp) - fx) / 1e-7));
        }
        x -= j.lu().solve(&fx).unwrap();
    }
    (FlowState::new(x[0], x[1], x[2], rho), x[3])
}

#[test]
fn hugoniot_state_solves_the_jump_conditions() {
    let g = gas();
    let (front, sigma) = hugoniot_log(&g, &U, WaveFamily::F4, 1.2f64.ln()).unwrap();
    assert_relative_eq!(front.rho, 1.68, epsilon = 1e-12);
    assert!(rankine_hugoniot_residual(&g, &U, &front, sigma).unwrap() <= 1e-10);
    let l4 = g.nonlinear_slope(&U, 1.0).unwrap();
    // Acoustic guess: d rho = 0.28 along r4 with c = 1.
    let k = 0.28 / (1.4 * l4 * 2.0);
    let (oracle, s) = jump_oracle(&g, &U, 1.68, [U.u - k * l4, k, U.p + 0.28, l4]);
    assert!(oracle.sup_dist(&front) <= 1e-9, "{oracle:?} vs {front:?}");
    assert!((s - sigma).abs() <= 1e-9);
}

#[test]
fn one_family_is_the_mirror_of_the_four_family() {
    let g = gas();
    let t = 1.2f64.ln();
    let (f4, s4) = hugoniot_log(&g, &U, WaveFamily::F4, t).unwrap();
    let (f1, s1) = hugoniot_log(&g, &U, WaveFamily::F1, t).unwrap();
    assert!(f1.v < 0.0);
    assert!(f1.sup_dist(&f4.mirrored()) <= 1e-14);
    assert_relative_eq!(s1, -s4, epsilon = 1e-14);
}

#[test]
fn admissible_shocks() {
    let g = gas();
    let w = shock_state(&g, &U, WaveFamily::F4, 0.05).unwrap();
    let c = check_entropy(&g, &w).unwrap();
    assert!(c.admissible(LaxOrdering::Characteristic));
    assert!(c.lax_margin > 0.02 && c.density_jump > 0.07, "{c:?}");
    assert!(rankine_hugoniot_residual(&g, &w.back, &w.front, w.speed()).unwrap() <= 1e-10);

    let mut reversed = w;
    std::mem::swap(&mut reversed.back, &mut reversed.front);
    assert!(!check_entropy(&g, &reversed).unwrap().admissible(LaxOrdering::Characteristic));

    let ob = oblique_shock(&g, &U, WaveFamily::F4, 1.2).unwrap();
    assert_eq!(ob.front, U);
    assert_relative_eq!(ob.back.rho, 1.68, epsilon = 1e-12);
    assert!(ob.is_shock());
    assert!(check_entropy(&g, &ob).unwrap().admissible(LaxOrdering::Characteristic));
}

#[test]
fn rarefactions_are_isentropic() {
    let g = gas();
    assert_eq!(rarefaction_state(&g, &U, WaveFamily::F4, 0.0).unwrap().front, U);
    let w = rarefaction_state(&g, &U, WaveFamily::F4, 0.05).unwrap();
    assert!((g.entropy(&w.front).unwrap() - g.entropy(&w.back).unwrap()).abs() <= 1e-8);
    assert!(w.speed_lo < w.speed_hi);
}

#[test]
fn shock_and_rarefaction_curves_osculate() {
    // Same point and same curvature at the base: the gap is third order.
    let g = gas();
    let gap = |t: f64| {
        let r = rarefaction_log(&g, &U, WaveFamily::F4, t).unwrap();
        let (s, _) = hugoniot_log(&g, &U, WaveFamily::F4, t).unwrap();
        r.sup_dist(&s)
    };
    for t in [0.04, -0.04] {
        let ratio = gap(t) / gap(t / 2.0);
        assert!((6.0..10.0).contains(&ratio), "t {t}: ratio {ratio}");
    }
}

#[test]
fn composite_curve_joins_twice_differentiably() {
    let g = gas();
    let f = |a: f64| wave_map(&g, &U, WaveFamily::F4, a).unwrap().to_array();
    // One-sided second differences, Richardson-extrapolated.
    let second = |h: f64| -> [f64; 4] {
        let (a, b, c) = (f(0.0), f(h), f(2.0 * h));
        std::array::from_fn(|i| (c[i] - 2.0 * b[i] + a[i]) / (h * h))
    };
    let extrapolated = |h: f64| -> [f64; 4] {
        let (d1, d2) = (second(h), second(h / 2.0));
        std::array::from_fn(|i| 2.0 * d2[i] - d1[i])
    };
    let (plus, minus) = (extrapolated(1e-3), extrapolated(-1e-3));
    for i in 0..4 {
        let scale = plus[i].abs().max(minus[i].abs()).max(1e-3);
        assert!((plus[i] - minus[i]).abs() <= 1e-4 * scale, "component {i}: {} vs {}", plus[i], minus[i]);
    }
}

#[test]
fn contact_families() {
    let g = gas();
    assert_eq!(wave_map(&g, &U, WaveFamily::Contact2, 0.0).unwrap(), U);
    let s = wave_map(&g, &U, WaveFamily::Contact3, 0.03).unwrap();
    assert_eq!((s.u, s.v, s.p), (2.0, 0.0, 1.0));
    assert_relative_eq!(s.rho, 1.4 * 0.03f64.exp(), epsilon = 1e-15);
}

fn state() -> impl Strategy<Value = FlowState> {
    (0.5f64..2.0, 0.5f64..2.0, 1.5f64..4.0, -0.3f64..0.3).prop_map(|(p, rho, mach, angle)| {
        let c = (1.4 * p / rho).sqrt();
        let q = mach * c;
        FlowState::new(q * angle.cos(), q * angle.sin(), p, rho)
    })
}

fn nonlinear() -> impl Strategy<Value = WaveFamily> {
    prop_oneof![Just(WaveFamily::F1), Just(WaveFamily::F4)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn constructed_shocks_satisfy_the_jump_conditions(s in state(), f in nonlinear(), m in 1e-4f64..0.1) {
        let g = gas();
        let w = shock_state(&g, &s, f, m).unwrap();
        prop_assert!(rankine_hugoniot_residual(&g, &w.back, &w.front, w.speed()).unwrap() <= 1e-10);
        prop_assert!(check_entropy(&g, &w).unwrap().admissible(LaxOrdering::Characteristic));
    }

    #[test]
    fn contact_invariants(s in state(), a in -0.1f64..0.1) {
        let g = gas();
        let c2 = wave_map(&g, &s, WaveFamily::Contact2, a).unwrap();
        let c3 = wave_map(&g, &s, WaveFamily::Contact3, a).unwrap();
        prop_assert_eq!(c2.p, s.p);
        prop_assert_eq!(c3.p, s.p);
        prop_assert!((c2.v / c2.u - s.v / s.u).abs() <= 1e-15);
        prop_assert_eq!(c3.v / c3.u, s.v / s.u);
        prop_assert_eq!(g.entropy(&c2).unwrap(), g.entropy(&s).unwrap());
        if a.abs() > 1e-6 {
            prop_assert!((g.entropy(&c3).unwrap() - g.entropy(&s).unwrap()).abs() > 1e-7);
        }
    }

    #[test]
    fn mirror_swaps_the_nonlinear_families(s in state(), t in -0.1f64..0.1) {
        // y -> -y reverses the order of the two states: the 4-curve from
        // s to s' becomes the 1-curve from m(s') back to m(s).
        let g = gas();
        let (shocked, _) = hugoniot_log(&g, &s, WaveFamily::F4, t).unwrap();
        let (back, _) = hugoniot_log(&g, &shocked.mirrored(), WaveFamily::F1, -t).unwrap();
        prop_assert!(back.sup_dist(&s.mirrored()) <= 1e-12);
        let fanned = rarefaction_log(&g, &s, WaveFamily::F4, t).unwrap();
        let back = rarefaction_log(&g, &fanned.mirrored(), WaveFamily::F1, -t).unwrap();
        prop_assert!(back.sup_dist(&s.mirrored()) <= 1e-9);
        // Strengths are normalised at the lower state, so they agree to
        // first order only.
        let a4 = t / g.log_density_rate(&s, 1.0).unwrap();
        let a1 = -t / g.log_density_rate(&shocked.mirrored(), -1.0).unwrap();
        prop_assert!((a4 - a1).abs() <= 4.0 * a4 * a4, "{} vs {}", a4, a1);
    }
}
