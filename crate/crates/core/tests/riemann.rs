use approx::assert_relative_eq;
use euler_fronts::coefficients::{finite_difference_coefficients, interaction_measure, Background};
use euler_fronts::numerics::{newton4, NewtonOptions, Vec4};
use euler_fronts::riemann::{BoundaryEdge, Incoming, Riemann};
use euler_fronts::wave_curves::{check_entropy, contact_map, wave_map, LaxOrdering};
use euler_fronts::{CurveError, FlowState, GasModel, WaveFamily};
use proptest::prelude::*;

const MINUS: FlowState = FlowState::new(2.0, 0.0, 1.0, 1.4);
const FAMILIES: [WaveFamily; 4] = [WaveFamily::F1, WaveFamily::Contact2, WaveFamily::Contact3, WaveFamily::F4];

fn gas() -> GasModel {
    GasModel::new(1.4).unwrap()
}

fn background() -> Background {
    Background::new(&gas(), MINUS, 0.1, 0.05).unwrap()
}

fn solver() -> Riemann {
    let bg = background();
    Riemann::new(gas(), Riemann::lambda_hat_for(&gas(), &bg, 0.5).unwrap())
}

fn compose(gas: &GasModel, below: &FlowState, alpha: &[f64; 4]) -> Result<FlowState, CurveError> {
    let mut s = *below;
    for (f, a) in FAMILIES.iter().zip(alpha) {
        s = wave_map(gas, &s, *f, *a)?;
    }
    Ok(s)
}

#[test]
fn weak_solver_examples() {
    let r = solver();
    assert_eq!(r.weak_strengths(&MINUS, &MINUS).unwrap(), [0.0; 4]);
    let a = r.weak_strengths(&MINUS, &FlowState::new(2.0, 0.0, 1.0, 1.6)).unwrap();
    assert!(a[0].abs() < 1e-12 && a[1].abs() < 1e-12 && a[3].abs() < 1e-12);
    assert_relative_eq!(a[2], (1.6f64 / 1.4).ln(), epsilon = 1e-12);

    let built = [0.02, -0.01, 0.015, -0.03];
    let above = compose(&gas(), &MINUS, &built).unwrap();
    let found = r.weak_strengths(&MINUS, &above).unwrap();
    for j in 0..4 {
        assert!((found[j] - built[j]).abs() <= 1e-8, "{found:?}");
    }
}

fn strong_parts(fan: &euler_fronts::riemann::WaveFan) -> (f64, (f64, f64), f64) {
    let mut out = (0.0, (0.0, 0.0), 0.0);
    for w in &fan.waves {
        match w.family {
            WaveFamily::F1 => out.0 += w.strength,
            WaveFamily::F4 => out.2 += w.strength,
            WaveFamily::StrongContact => out.1 = w.pair.unwrap(),
            other => panic!("unexpected {other:?}"),
        }
    }
    out
}

#[test]
fn strong_solver_on_the_background() {
    let bg = background();
    let fan = solver().solve_strong(&bg, &bg.minus, &bg.plus).unwrap();
    let (d1, (s2, s3), d4) = strong_parts(&fan);
    assert!(d1.abs() < 1e-12 && d4.abs() < 1e-12);
    assert_relative_eq!(s2, 0.1, epsilon = 1e-12);
    assert_relative_eq!(s3, 0.05, epsilon = 1e-12);
}

#[test]
fn strong_solver_passes_a_wave_from_above() {
    let bg = background();
    let g = gas();
    let above = wave_map(&g, &bg.plus, WaveFamily::F4, -0.02).unwrap();
    let fan = solver().solve_strong(&bg, &bg.minus, &above).unwrap();
    let (d1, (s2, s3), d4) = strong_parts(&fan);
    assert!(d1.abs() <= 1e-8);
    assert!((d4 + 0.02).abs() <= 1e-8);
    assert!((s2 - 0.1).abs() <= 1e-8 && (s3 - 0.05).abs() <= 1e-8);
}

#[test]
fn strong_solver_reflects_and_transmits_to_first_order() {
    let bg = background();
    let r = solver();
    let k = finite_difference_coefficients(&r, &bg).unwrap();
    let mut errors = Vec::new();
    for a in [0.02, 0.01] {
        // A 4-wave of strength a lies below the strong contact.
        let below = r.inverse_wave_map(&bg.minus, WaveFamily::F4, a).unwrap();
        let (d1, _, d4) = strong_parts(&r.solve_strong(&bg, &below, &bg.plus).unwrap());
        let e = ((d1 - k.k11() * a).abs(), (d4 - k.k14() * a).abs());
        assert!(e.0 <= a * a && e.1 <= a * a, "a {a}: {e:?}");
        errors.push(e);
    }
    // Halving the wave quarters the error.
    assert!(errors[1].0 < 0.35 * errors[0].0 && errors[1].1 < 0.35 * errors[0].1, "{errors:?}");
}

/// Flow deflection through an oblique shock: solve the classical
/// deflection-angle relation for the weak shock angle.
fn oblique_density_ratio(mach: f64, deflection: f64, gamma: f64) -> f64 {
    let tan_theta = |beta: f64| {
        let m2 = mach * mach * beta.sin().powi(2);
        2.0 / beta.tan() * (m2 - 1.0) / (mach * mach * (gamma + (2.0 * beta).cos()) + 2.0)
    };
    let (mut lo, mut hi) = ((1.0 / mach).asin(), (1.0 / mach).asin() + 0.3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tan_theta(mid) < deflection.tan() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m2 = mach * mach * lo.sin().powi(2);
    (gamma + 1.0) * m2 / ((gamma - 1.0) * m2 + 2.0)
}

/// Isentropic expansion by `turn` radians from `mach`.
fn expansion_density_ratio(mach: f64, turn: f64, gamma: f64) -> f64 {
    let pm = |m: f64| {
        let k = (gamma + 1.0) / (gamma - 1.0);
        k.sqrt() * ((m * m - 1.0) / k).sqrt().atan() - (m * m - 1.0).sqrt().atan()
    };
    let target = pm(mach) + turn;
    let (mut lo, mut hi) = (mach, 2.0 * mach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if pm(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let stag = |m: f64| 1.0 + 0.5 * (gamma - 1.0) * m * m;
    (stag(mach) / stag(lo)).powf(1.0 / (gamma - 1.0))
}

#[test]
fn lateral_problems_match_the_shock_polar_and_the_expansion_fan() {
    let r = solver();
    let fan = r.solve_lateral(&MINUS, &BoundaryEdge::flat()).unwrap();
    assert!(fan.strengths()[3].abs() <= 1e-12);

    let edge = BoundaryEdge::new(0.01, 0.01);
    let fan = r.solve_lateral(&MINUS, &edge).unwrap();
    let w = fan.waves[0];
    assert_eq!(w.family, WaveFamily::F4);
    assert!(w.is_shock() && w.back.rho > w.front.rho);
    assert!(edge.tangency(&fan.below).abs() <= 1e-12);
    assert_relative_eq!(w.back.rho / 1.4, oblique_density_ratio(2.0, 0.01, 1.4), max_relative = 1e-9);

    let edge = BoundaryEdge::new(-0.01, -0.01);
    let fan = r.solve_lateral(&MINUS, &edge).unwrap();
    let w = fan.waves[0];
    assert!(w.is_rarefaction() && w.back.rho < w.front.rho);
    assert!(edge.tangency(&fan.below).abs() <= 1e-12);
    assert_relative_eq!(w.back.rho / 1.4, expansion_density_ratio(2.0, 0.01, 1.4), max_relative = 1e-8);
}

#[test]
fn wall_reflects_a_one_shock_as_a_four_shock() {
    let g = gas();
    let r = solver();
    let mut errors = Vec::new();
    for a in [-0.02, -0.01] {
        let above = wave_map(&g, &MINUS, WaveFamily::F1, a).unwrap();
        let d4 = r.solve_lateral(&above, &BoundaryEdge::flat()).unwrap().strengths()[3];
        // The wall coefficient is 1 at the origin.
        assert!((d4 - a).abs() <= 2.0 * a * a, "{d4} vs {a}");
        errors.push((d4 - a).abs());
    }
    assert!(errors[1] < 0.35 * errors[0]);
}

#[test]
fn simplified_solver_cases() {
    let g = gas();
    let r = solver();
    let bg = background();

    // Second wave of strength zero: pass-through.
    let s1 = wave_map(&g, &MINUS, WaveFamily::F4, 0.01).unwrap();
    let fan = r
        .solve_simplified(
            &Incoming::Nonlinear { family: WaveFamily::F4, strength: 0.01 },
            &Incoming::Nonlinear { family: WaveFamily::F1, strength: 0.0 },
            [MINUS, s1, s1],
        )
        .unwrap();
    assert_eq!(fan.nonphysical_strength, 0.0);
    assert_eq!(fan.strengths(), [0.0, 0.0, 0.0, 0.01]);

    // A weak 4-wave is absorbed by the strong contact; the defect is the
    // gap between the carried state and the true one above.
    let a = 1e-5;
    let below = r.inverse_wave_map(&bg.minus, WaveFamily::F4, a).unwrap();
    let fan = r
        .solve_simplified(
            &Incoming::Nonlinear { family: WaveFamily::F4, strength: a },
            &Incoming::Strong { sigma2: 0.1, sigma3: 0.05 },
            [below, bg.minus, bg.plus],
        )
        .unwrap();
    let strong = fan.waves.iter().find(|w| w.family == WaveFamily::StrongContact).unwrap();
    assert_eq!(strong.pair, Some((0.1, 0.05)));
    assert_eq!(fan.nonphysical_strength, contact_map(&below, 0.1, 0.05).sup_dist(&bg.plus));
    assert!(fan.nonphysical_strength > 0.0 && fan.nonphysical_strength <= 10.0 * a);
    // The exact solver moves the same mass into physical waves.
    let exact = r.solve_strong(&bg, &below, &bg.plus).unwrap();
    let (d1, _, d4) = strong_parts(&exact);
    assert!(fan.nonphysical_strength <= 5.0 * (d1.abs() + d4.abs()));

    // A non-physical front overtakes a weak wave: the wave is unchanged
    // and the defect is recomputed from the states.
    let s0 = MINUS;
    let s1 = FlowState::new(2.0 + 1e-6, 0.0, 1.0, 1.4);
    let s2 = wave_map(&g, &s1, WaveFamily::F1, -0.003).unwrap();
    let fan = r
        .solve_simplified(&Incoming::NonPhysical, &Incoming::Nonlinear { family: WaveFamily::F1, strength: -0.003 }, [s0, s1, s2])
        .unwrap();
    assert_eq!(fan.strengths(), [-0.003, 0.0, 0.0, 0.0]);
    assert_eq!(fan.nonphysical_strength, wave_map(&g, &s0, WaveFamily::F1, -0.003).unwrap().sup_dist(&s2));
    assert_eq!(fan.waves.last().unwrap().family, WaveFamily::NonPhysical);
}

#[test]
fn sampling_a_fan() {
    let g = gas();
    let r = solver();
    let above = compose(&g, &MINUS, &[0.01, 0.0, 0.0, 0.04]).unwrap();
    let fan = r.solve_weak(&MINUS, &above).unwrap();
    assert_eq!(fan.sample(&g, -10.0).unwrap(), MINUS);
    assert_eq!(fan.sample(&g, 10.0).unwrap(), above);
    let w = fan.waves.iter().find(|w| w.family == WaveFamily::F4).unwrap();
    let xi = 0.5 * (w.speed_lo + w.speed_hi);
    let s = fan.sample(&g, xi).unwrap();
    assert!((g.nonlinear_slope(&s, 1.0).unwrap() - xi).abs() <= 1e-8);
}

fn state() -> impl Strategy<Value = FlowState> {
    (0.8f64..1.5, 0.8f64..1.5, 1.6f64..3.5, -0.2f64..0.2).prop_map(|(p, rho, mach, angle)| {
        let c = (1.4 * p / rho).sqrt();
        let q = mach * c;
        FlowState::new(q * angle.cos(), q * angle.sin(), p, rho)
    })
}

fn family() -> impl Strategy<Value = usize> {
    0usize..4
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn weak_solver_round_trip(s in state(), j in family(), a in -0.1f64..0.1) {
        let g = gas();
        let mut alpha = [0.0; 4];
        alpha[j] = a;
        let above = compose(&g, &s, &alpha).unwrap();
        let found = solver().weak_strengths(&s, &above).unwrap();
        for k in 0..4 {
            prop_assert!((found[k] - alpha[k]).abs() <= 1e-8, "{:?} vs {:?}", found, alpha);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn weak_fans_are_admissible_and_below_the_fast_speed(s in state(), a in prop::array::uniform4(-0.05f64..0.05)) {
        let g = gas();
        let bg = background();
        let r = solver();
        let above = compose(&g, &s, &a).unwrap();
        let fan = r.solve_weak(&s, &above).unwrap();
        for w in fan.waves.iter().filter(|w| w.is_shock()) {
            prop_assert!(check_entropy(&g, w).unwrap().admissible(LaxOrdering::Characteristic));
        }
        // lambda_hat is set from the background; fans near it stay below.
        if s.sup_dist(&bg.minus) < 0.1 && above.sup_dist(&bg.minus) < 0.1 {
            for w in &fan.waves {
                prop_assert!(r.lambda_hat - g.nonlinear_slope(&w.back, 1.0).unwrap() >= 0.1);
                prop_assert!(r.lambda_hat - g.nonlinear_slope(&w.front, 1.0).unwrap() >= 0.1);
            }
        }
    }

    #[test]
    fn the_wave_decomposition_is_locally_unique(
        s in state(),
        a in prop::array::uniform4(-0.05f64..0.05),
        starts in prop::array::uniform5(prop::array::uniform4(-0.05f64..0.05)),
    ) {
        let g = gas();
        let above = compose(&g, &s, &a).unwrap();
        let target = Vec4::from(above.to_array());
        let mut roots = Vec::new();
        for x0 in starts {
            let out = newton4(
                |x: &Vec4| -> Result<Vec4, CurveError> {
                    Ok(Vec4::from(compose(&g, &s, &[x[0], x[1], x[2], x[3]])?.to_array()) - target)
                },
                Vec4::from(x0),
                &NewtonOptions::default(),
            )
            .unwrap();
            roots.push(out.root);
        }
        for r in &roots[1..] {
            prop_assert!((r - roots[0]).amax() <= 1e-9, "{:?}", roots);
        }
    }
}

#[test]
fn weak_interactions_are_additive_to_first_order() {
    // alpha below beta, approaching: outgoing = alpha + beta + O(|alpha beta|).
    use rand::{Rng, SeedableRng};
    let g = gas();
    let r = solver();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut fitted: f64 = 0.0;
    for _ in 0..200 {
        let (ja, jb) = loop {
            let (x, y) = (rng.gen_range(0..4), rng.gen_range(0..4));
            if x > y {
                break (x, y);
            }
        };
        let (mut a, mut b) = ([0.0; 4], [0.0; 4]);
        a[ja] = rng.gen_range(-0.05..0.05);
        b[jb] = rng.gen_range(-0.05..0.05);
        let mid = compose(&g, &MINUS, &a).unwrap();
        let top = compose(&g, &mid, &b).unwrap();
        let out = r.weak_strengths(&MINUS, &top).unwrap();
        let err = (0..4).map(|k| (out[k] - a[k] - b[k]).abs()).sum::<f64>();
        let m = interaction_measure(&a, &b);
        if m == 0.0 {
            // Contacts of different families commute.
            assert!(err <= 1e-10, "{a:?} {b:?}: {err}");
        } else {
            fitted = fitted.max(err / m);
        }
    }
    println!("fitted additivity constant {fitted:.4}");
    assert!(fitted.is_finite() && fitted < 10.0);
}
