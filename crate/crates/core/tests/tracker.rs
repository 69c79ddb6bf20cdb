use std::collections::BTreeSet;

use euler_fronts::geometry::{Bump, InflowProfile, Perturbation, Profile};
use euler_fronts::scenario::{Scenario, Setup};
use euler_fronts::tracker::{run, EventKind, FrontKind, RunOptions, SliceSnapshot, Solution, SolverUsed, TANGENCY_TOL};
use euler_fronts::{FlowState, WaveFamily};

const MINUS: FlowState = FlowState::new(2.0, 0.0, 1.0, 1.4);

fn background() -> Scenario {
    Scenario::background_only(MINUS, 0.1, 0.05, 1.0)
}

fn demo(theta: f64) -> Scenario {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/demo.json");
    Scenario::load(path.as_ref()).unwrap().at_theta(theta)
}

/// Background setup whose inflow below the strong contact is replaced by
/// `lower` on `[0, y)` and `U-` on `[y, 1)`.
fn single_wave_setup(lower: impl Fn(&Setup) -> FlowState, y: f64, theta: f64, window: f64) -> Setup {
    let mut sc = background().at_theta(theta);
    sc.window = window;
    let mut setup = sc.prepare().unwrap();
    let below = lower(&setup);
    let (minus, plus) = (setup.bg.minus, setup.bg.plus);
    setup.inflow = InflowProfile {
        profile: Profile { base: 0.0, breaks: vec![y, 1.0], states: vec![below, minus, plus] },
        strong_jump_y: 1.0,
        tv_perturbation: below.sup_dist(&minus),
        coarsening_error: 0.0,
        jump_budget: None,
    };
    setup
}

fn born_at(sol: &Solution, x: f64, y0: f64) -> Vec<FrontKind> {
    sol.history
        .as_ref()
        .unwrap()
        .fronts
        .iter()
        .filter(|r| r.born == x && (r.front.y0 - y0).abs() < 1e-12)
        .map(|r| r.front.kind)
        .collect()
}

/// First `x` at which two neighbouring fronts of a slice meet.
fn first_crossing(slice: &SliceSnapshot) -> f64 {
    slice
        .fronts
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (&w[0].0, &w[1].0);
            let closing = a.slope - b.slope;
            (closing > 0.0).then(|| slice.x + (b.y_at(slice.x) - a.y_at(slice.x)) / closing)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn background_run_has_no_events_and_one_strong_front() {
    let sol = run(&background().prepare().unwrap(), &RunOptions::default()).unwrap();
    assert!(sol.events.is_empty());
    for slice in [&sol.initial, &sol.last] {
        assert_eq!(slice.fronts.len(), 1);
        assert!(matches!(slice.fronts[0].0.kind, FrontKind::Strong { sigma2, sigma3 }
            if (sigma2 - 0.1).abs() < 1e-12 && (sigma3 - 0.05).abs() < 1e-12));
        assert_eq!(slice.bottom, MINUS);
    }
    let strong = sol.last.fronts[0].0;
    // A contact moves with the flow on both sides.
    assert!((strong.slope - MINUS.v / MINUS.u).abs() < 1e-12);
    assert_eq!(sol.stats.glimm_violations, 0);
}

#[test]
fn one_entropy_jump_gives_one_entropy_front() {
    let mut sc = background();
    sc.perturbation = Perturbation::Intervals(vec![Bump { y0: 0.0, y1: 0.5, du: 0.0, dv: 0.0, dp: 0.0, drho: 0.01 }]);
    let sol = run(&sc.prepare().unwrap(), &RunOptions::default()).unwrap();
    let kinds: Vec<WaveFamily> = sol.initial.fronts.iter().map(|(f, _)| f.kind.family()).collect();
    assert_eq!(kinds, vec![WaveFamily::Contact3, WaveFamily::StrongContact]);
    let (entropy, _) = sol.initial.fronts[0];
    assert!((entropy.y0 - 0.5).abs() < 1e-12);
    // Moves with the flow direction, which is horizontal below the sheet.
    assert!(entropy.slope.abs() < 1e-12);
}

#[test]
fn inflow_rarefaction_splits_into_delta_sized_fronts() {
    let alpha = 0.03;
    let mut setup = single_wave_setup(
        |s| s.solver.inverse_wave_map(&s.bg.minus, WaveFamily::F4, alpha).unwrap(),
        0.5,
        4e-3,
        0.5,
    );
    setup.scenario.theta.delta = Some(0.01);
    let sol = run(&setup, &RunOptions::default()).unwrap();
    let fronts: Vec<_> = sol.initial.fronts.iter().filter(|(f, _)| (f.y0 - 0.5).abs() < 1e-12).collect();
    assert_eq!(fronts.len(), 3);
    let mut last_slope = f64::NEG_INFINITY;
    for (f, _) in &fronts {
        match f.kind {
            FrontKind::Nonlinear { family: WaveFamily::F4, strength } => assert!((strength - 0.01).abs() < 1e-9),
            other => panic!("unexpected front {other:?}"),
        }
        // A fan opens upwards: later fronts are steeper.
        assert!(f.slope > last_slope);
        last_slope = f.slope;
    }
    let top = fronts.last().unwrap().1;
    assert!(top.sup_dist(&setup.bg.minus) < 1e-10);
}

#[test]
fn four_shock_hits_strong_contact_with_first_order_coefficients() {
    let alpha = -0.02;
    let setup = single_wave_setup(
        |s| s.solver.inverse_wave_map(&s.bg.minus, WaveFamily::F4, alpha).unwrap(),
        0.5,
        4e-3,
        1.2,
    );
    let sol = run(&setup, &RunOptions::default()).unwrap();
    let hits: Vec<_> = sol
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Collision && e.incoming.contains(&Some(WaveFamily::StrongContact)))
        .collect();
    assert_eq!(hits.len(), 1);
    let hit = hits[0];
    assert_eq!(hit.solver, SolverUsed::Accurate);
    assert_eq!(hit.incoming, [Some(WaveFamily::F4), Some(WaveFamily::StrongContact)]);

    // The shock meets the sheet where the two initial lines cross.
    let shock = sol.initial.fronts.iter().find(|(f, _)| (f.y0 - 0.5).abs() < 1e-12).unwrap().0;
    let strong = sol.initial.fronts.iter().find(|(f, _)| f.kind.family() == WaveFamily::StrongContact).unwrap().0;
    let x_meet = (strong.y0 - shock.y0) / (shock.slope - strong.slope);
    assert!((hit.x - x_meet).abs() < 1e-9, "{} vs {x_meet}", hit.x);

    let k = &setup.calibration.coefficients;
    let out = born_at(&sol, hit.x, hit.y);
    let strength = |fam: WaveFamily| {
        out.iter()
            .filter_map(|f| match *f {
                FrontKind::Nonlinear { family, strength } if family == fam => Some(strength),
                _ => None,
            })
            .sum::<f64>()
    };
    let reflected = strength(WaveFamily::F1);
    let transmitted = strength(WaveFamily::F4);
    assert!((reflected - k.k11() * alpha).abs() <= alpha * alpha, "{reflected} vs {}", k.k11() * alpha);
    assert!((transmitted - k.k14() * alpha).abs() <= alpha * alpha, "{transmitted} vs {}", k.k14() * alpha);
}

#[test]
fn first_event_is_the_first_line_intersection() {
    // Flat wall so only front pairs can interact; entropy jumps make the
    // early geometry non-trivial.
    let mut sc = demo(4e-3);
    sc.wall = euler_fronts::scenario::WallSpec::default();
    let sol = run(&sc.prepare().unwrap(), &RunOptions::default()).unwrap();
    let wall_first = sol
        .initial
        .fronts
        .first()
        .filter(|(f, _)| f.slope < 0.0)
        .map_or(f64::INFINITY, |(f, _)| -f.y0 / f.slope);
    let predicted = first_crossing(&sol.initial).min(wall_first);
    let first = sol.events.iter().find(|e| e.solver != SolverUsed::Ignored).unwrap();
    // No non-physical fronts exist yet, so nothing can happen unrecorded.
    assert!((first.x - predicted).abs() < 1e-9, "{} vs {predicted}", first.x);
    let slice = sol.snapshot_at(0.5 * predicted).unwrap();
    assert_eq!(slice.fronts.len(), sol.initial.fronts.len());
}

fn event_xs(sol: &Solution) -> Vec<f64> {
    let mut xs: Vec<f64> = sol.events.iter().map(|e| e.x).collect();
    xs.push(0.0);
    xs.push(sol.window);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[test]
fn slices_between_events_keep_fronts_and_move_at_bounded_speed() {
    let sol = run(&demo(4e-3).prepare().unwrap(), &RunOptions::default()).unwrap();
    let xs = event_xs(&sol);
    let mut checked = 0;
    for w in xs.windows(2).step_by(5) {
        let gap = w[1] - w[0];
        if gap < 1e-9 {
            continue;
        }
        let x1 = w[0] + 0.25 * gap;
        let x2 = w[0] + 0.75 * gap;
        let (a, b) = (sol.snapshot_at(x1).unwrap(), sol.snapshot_at(x2).unwrap());
        assert_eq!(a.fronts.len(), b.fronts.len(), "front count changed between events at {x1}..{x2}");
        let ids = |s: &SliceSnapshot| s.fronts.iter().map(|(f, _)| f.id).collect::<BTreeSet<_>>();
        if ids(&a) != ids(&b) {
            // An unrecorded non-physical crossing: same count, new ids.
            continue;
        }
        // Each front sweeps |slope| dx times its jump.
        let mut swept = 0.0;
        let mut below = a.bottom;
        for (f, above) in &a.fronts {
            swept += f.slope.abs() * (x2 - x1) * below.sup_dist(above);
            below = *above;
        }
        let dist = a.profile().l1_distance(&b.profile());
        assert!(dist <= swept * (1.0 + 1e-9) + 1e-12, "L1 {dist} > swept {swept}");
        checked += 1;
    }
    assert!(checked > 10, "only {checked} intervals checked");
}

#[test]
fn glimm_and_tangency_monitors_hold_on_seeded_runs() {
    for seed in 1..=3u64 {
        let mut sc = demo(4e-3);
        sc.seed = seed;
        if let euler_fronts::geometry::Perturbation::Random { seed: s, .. } = &mut sc.perturbation {
            *s = 100 + seed;
        }
        let sol = run(&sc.prepare().unwrap(), &RunOptions { keep_history: false, sample_xs: Vec::new() }).unwrap();
        for e in &sol.events {
            assert!(e.delta_g <= 1e-12 + e.defect, "seed {seed}: dG {} at x {}", e.delta_g, e.x);
        }
        assert_eq!(sol.stats.glimm_violations, 0);
        assert!(sol.stats.max_tangency <= TANGENCY_TOL, "seed {seed}: {}", sol.stats.max_tangency);
    }
}

#[test]
fn front_count_grows_only_at_wall_fans_and_simplified_weak_pairs() {
    let sol = run(&demo(4e-3).prepare().unwrap(), &RunOptions { keep_history: false, sample_xs: Vec::new() }).unwrap();
    // Ignored wall vertices leave no trace row; every other event does.
    let traced: Vec<_> = sol.events.iter().filter(|e| e.solver != SolverUsed::Ignored).collect();
    assert!(sol.trace.len() > traced.len());
    let mut grew_simplified = 0;
    for (i, e) in traced.iter().enumerate() {
        let d = sol.trace[i + 1].front_count as i64 - sol.trace[i].front_count as i64;
        let incoming = e.incoming.iter().flatten().count() as i64;
        assert_eq!(d, e.outgoing as i64 - incoming, "event {i} at x {}", e.x);
        match (e.kind, e.solver) {
            (EventKind::Vertex, _) => {}
            (EventKind::WallHit, _) => {}
            (EventKind::Collision, SolverUsed::Accurate) => {}
            (EventKind::Collision, SolverUsed::Simplified) => {
                assert!(d <= 1);
                if d == 1 {
                    assert!(!e.incoming.contains(&Some(WaveFamily::StrongContact)));
                    assert!(!e.incoming.contains(&Some(WaveFamily::NonPhysical)));
                    grew_simplified += 1;
                }
            }
            other => panic!("unexpected event {other:?}"),
        }
    }
    assert!(grew_simplified > 0);
}

#[test]
fn runs_are_deterministic() {
    let setup = demo(4e-3).prepare().unwrap();
    let a = run(&setup, &RunOptions::default()).unwrap();
    let b = run(&setup, &RunOptions::default()).unwrap();
    assert_eq!(a.events, b.events);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.last, b.last);
}
