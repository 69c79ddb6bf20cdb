//! Runs, pairwise stability experiments and refinement studies, with the
//! files they leave behind.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::WeightSet;
use crate::error::{FunctionalError, ScenarioError, TrackerError};
use crate::functionals::{
    boundary_decay_terms, boundary_relations, equivalence_constant, hugoniot_norm_constant, lyapunov_phi,
    phi_decay_terms, PhiSnapshot,
};
use crate::scenario::{Scenario, Setup, ThetaParams};
use crate::tracker::{run, EventRecord, FrontKind, RunOptions, RunStats, SliceSnapshot, Solution, TraceRow};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "EULER_FRONTS_OUT";

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const MONITOR: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const SOLVER: i32 = 4;
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error("scenarios are not comparable: {0}")]
    Mismatch(String),
    #[error("invalid study: {0}")]
    Study(String),
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Scenario(_) | ExperimentError::Mismatch(_) | ExperimentError::Study(_) => exit::CONFIG,
            // Running out of events means the front count did not stay finite.
            ExperimentError::Tracker(TrackerError::Budget { .. }) => exit::MONITOR,
            _ => exit::SOLVER,
        }
    }
}

fn output_error(path: &Path, e: impl std::fmt::Display) -> ExperimentError {
    ExperimentError::Output { path: path.display().to_string(), message: e.to_string() }
}

/// What is needed to replay a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario_hash: String,
    pub scenario: Scenario,
    pub theta: ThetaParams,
    pub weights: WeightSet,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<String>,
}

/// Monitor verdicts of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: Option<String>,
    pub scenario_hash: String,
    pub stats: RunStats,
    pub glimm_nonincreasing: bool,
    /// Realised decrease rate of the potential is positive (vacuous when
    /// no event owes a decrease).
    pub nu_positive: bool,
    pub wall_tangent: bool,
    /// Name of the first failed monitor.
    pub violation: Option<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            exit::OK
        } else {
            exit::MONITOR
        }
    }
}

pub struct RunOutcome {
    pub setup: Setup,
    pub solution: Solution,
    pub report: RunReport,
    pub manifest: RunManifest,
}

pub fn report_for(scenario: &Scenario, solution: &Solution) -> RunReport {
    let s = &solution.stats;
    let glimm = s.glimm_violations == 0;
    let nu = s.nu.is_none_or(|nu| nu > 0.0);
    let tangent = s.max_tangency <= 1e-8;
    let violation = if !glimm {
        Some(format!("glimm functional increased at x={}", s.first_glimm_violation.unwrap_or(f64::NAN)))
    } else if !nu {
        Some(format!("potential decrease rate nu={} is not positive", s.nu.unwrap_or(f64::NAN)))
    } else if !tangent {
        Some(format!("flow next to the wall not tangent (residual {:e})", s.max_tangency))
    } else {
        None
    };
    RunReport {
        name: scenario.name.clone(),
        scenario_hash: scenario.hash(),
        stats: s.clone(),
        glimm_nonincreasing: glimm,
        nu_positive: nu,
        wall_tangent: tangent,
        violation,
    }
}

/// Prepare and run a scenario; with `out_dir`, write the trace, event
/// log, wave diagram, slices, manifest and report there.
pub fn run_scenario(scenario: &Scenario, out_dir: Option<&Path>) -> Result<RunOutcome, ExperimentError> {
    let setup = scenario.prepare()?;
    let solution = run(&setup, &RunOptions::default())?;
    let report = report_for(scenario, &solution);
    let mut manifest = RunManifest {
        scenario_hash: scenario.hash(),
        scenario: scenario.clone(),
        theta: scenario.theta,
        weights: solution.weights,
        seed: scenario.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: Vec::new(),
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| output_error(dir, e))?;
        let mut written = Vec::new();
        let mut out = |name: &str| {
            written.push(name.to_string());
            dir.join(name)
        };
        write_trace(&out("trace.csv"), &solution.trace)?;
        write_events(&out("events.csv"), &solution.events)?;
        write_wave_diagram(&out("waves.csv"), &solution)?;
        write_slices(&out("slices.csv"), &[&solution.initial, &solution.last])?;
        let report_path = out("report.json");
        let manifest_path = out("manifest.json");
        manifest.outputs = written;
        write_json(&report_path, &report)?;
        write_json(&manifest_path, &manifest)?;
    }
    Ok(RunOutcome { setup, solution, report, manifest })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| output_error(path, e))?;
    let mut f = File::create(path).map_err(|e| output_error(path, e))?;
    writeln!(f, "{text}").map_err(|e| output_error(path, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| output_error(path, e))?;
    }
    w.flush().map_err(|e| output_error(path, e))
}

/// Columns: x, V, Q_A, Q_ve, Q_b, Q_Theta, G, front_count, nonphysical_mass.
pub fn write_trace(path: &Path, trace: &[TraceRow]) -> Result<(), ExperimentError> {
    write_rows(path, trace)
}

#[derive(Serialize)]
struct EventRow {
    x: f64,
    y: f64,
    kind: String,
    solver: String,
    lower: String,
    upper: String,
    outgoing: usize,
    defect: f64,
    delta_g: f64,
    delta_q: f64,
    measure: f64,
}

pub fn write_events(path: &Path, events: &[EventRecord]) -> Result<(), ExperimentError> {
    let name = |f: Option<crate::WaveFamily>| f.map(|f| format!("{f:?}")).unwrap_or_default();
    write_rows(
        path,
        events.iter().map(|e| EventRow {
            x: e.x,
            y: e.y,
            kind: format!("{:?}", e.kind),
            solver: format!("{:?}", e.solver),
            lower: name(e.incoming[0]),
            upper: name(e.incoming[1]),
            outgoing: e.outgoing,
            defect: e.defect,
            delta_g: e.delta_g,
            delta_q: e.delta_q,
            measure: e.measure,
        }),
    )
}

#[derive(Serialize)]
struct SegmentRow {
    id: u64,
    kind: &'static str,
    family: String,
    strength: f64,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

fn kind_name(kind: &FrontKind) -> (&'static str, f64) {
    match *kind {
        FrontKind::Nonlinear { strength, .. } => ("nonlinear", strength),
        FrontKind::Contact { sigma2, sigma3 } => ("contact", sigma2.abs() + sigma3.abs()),
        FrontKind::Strong { sigma2, sigma3 } => ("strong", sigma2 + sigma3),
        FrontKind::NonPhysical { strength } => ("nonphysical", strength),
    }
}

/// One straight segment per front: columns id, kind, family, strength,
/// x0, y0, x1, y1.
pub fn write_wave_diagram(path: &Path, solution: &Solution) -> Result<(), ExperimentError> {
    let Some(h) = solution.history.as_ref() else {
        return write_rows::<SegmentRow>(path, std::iter::empty());
    };
    let mut rows: Vec<SegmentRow> = h
        .fronts
        .iter()
        .map(|r| {
            let end = r.died.min(solution.window);
            let (kind, strength) = kind_name(&r.front.kind);
            SegmentRow {
                id: r.front.id,
                kind,
                family: format!("{:?}", r.front.kind.family()),
                strength,
                x0: r.born,
                y0: r.front.y_at(r.born),
                x1: end,
                y1: r.front.y_at(end),
            }
        })
        .collect();
    rows.sort_by_key(|r| r.id);
    write_rows(path, rows)
}

#[derive(Serialize)]
struct SliceRow {
    x: f64,
    y_from: f64,
    y_to: f64,
    u: f64,
    v: f64,
    p: f64,
    rho: f64,
}

/// Piecewise constant slices: one row per constant piece.
pub fn write_slices(path: &Path, slices: &[&SliceSnapshot]) -> Result<(), ExperimentError> {
    let mut rows = Vec::new();
    for s in slices {
        let p = s.profile();
        let mut lo = p.base;
        for (i, st) in p.states.iter().enumerate() {
            let hi = p.breaks.get(i).copied().unwrap_or(f64::INFINITY);
            rows.push(SliceRow { x: s.x, y_from: lo, y_to: hi, u: st.u, v: st.v, p: st.p, rho: st.rho });
            lo = hi;
        }
    }
    write_rows(path, rows)
}

/// `n + 1` equally spaced abscissae on `[0, window]`.
pub fn sample_grid(window: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|i| window * i as f64 / n as f64).collect()
}

/// Φ and the decay checks at one abscissa of a pair run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub x: f64,
    pub phi: f64,
    pub l1: f64,
    pub equivalence: f64,
    pub equivalence_holds: bool,
    pub m_bound: f64,
    pub max_weight: f64,
    /// Largest `sum_j E` over strong contacts crossed at this `x`.
    pub strong_decay: Option<f64>,
    /// `sum_j E_b` next to the wall, both sign conventions.
    pub boundary_transport: f64,
    pub boundary_as_printed: f64,
    /// Largest `sum_j E / (theta |alpha|)` over weak fronts.
    pub weak_decay_ratio: Option<f64>,
    /// Ratio `|h1| / |h4|` at the wall lies in (1/2, 3/2) (or `h4 = 0`).
    pub wall_ratio_ok: bool,
    pub max_residual: f64,
}

/// Outcome of a pairwise stability experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub theta: f64,
    pub window: f64,
    pub norm_constant: f64,
    pub samples: Vec<PairSample>,
    pub initial_l1: f64,
    pub initial_phi: f64,
    /// Smallest `C` with `Phi(x) <= Phi(0) + C theta x` on the samples.
    pub phi_drift: f64,
    /// Equivalence-based constants: `L = C_eq^2`, `C = C_eq * phi_drift`.
    pub lipschitz: f64,
    pub drift: f64,
    /// Smallest `L` with `|U(x) - V(x)| <= L |U(0) - V(0)|` on the samples.
    pub empirical_lipschitz: f64,
    pub equivalence_holds: bool,
    pub strong_decay_max: Option<f64>,
    pub strong_crossings: usize,
    pub boundary_transport_max: f64,
    pub boundary_as_printed_max: f64,
    pub weak_decay_max: Option<f64>,
    pub wall_ratio_ok: bool,
    pub l1_bound_holds: bool,
    pub stats: (RunStats, RunStats),
}

impl StabilityReport {
    pub fn strong_decay_ok(&self) -> bool {
        self.strong_decay_max.is_none_or(|e| e <= 1e-12)
    }

    pub fn boundary_decay_ok(&self) -> bool {
        self.boundary_transport_max <= 1e-12
    }
}

fn comparable(u: &Scenario, v: &Scenario) -> Result<(), ExperimentError> {
    if u.gas != v.gas {
        return Err(ExperimentError::Mismatch("gas models differ".into()));
    }
    if u.background != v.background {
        return Err(ExperimentError::Mismatch("backgrounds differ".into()));
    }
    if u.wall != v.wall {
        return Err(ExperimentError::Mismatch("walls differ".into()));
    }
    Ok(())
}

/// Wall slope seen by the tracker at `x`.
fn wall_slope(solution: &Solution, x: f64) -> f64 {
    solution.effective_wall.angle_at(x).tan()
}

/// Decay checks across every front of `slice` that is not shared with
/// the other solution.
fn front_decay(
    snap: &PhiSnapshot,
    slice: &SliceSnapshot,
    others: &[f64],
    theta: f64,
    strong: &mut Option<f64>,
    weak: &mut Option<f64>,
) {
    let profile = slice.profile();
    let near = |ys: &[f64], y: f64| {
        let i = ys.partition_point(|&z| z < y - 1e-12);
        i < ys.len() && ys[i] <= y + 1e-12
    };
    let own = &profile.breaks;
    for (k, (front, _)) in slice.fronts.iter().enumerate() {
        let y = own[k];
        let crowded = (k > 0 && y - own[k - 1] <= 1e-12) || (k + 1 < own.len() && own[k + 1] - y <= 1e-12);
        if crowded || near(others, y) {
            continue;
        }
        let Some(i) = snap.below(y) else { continue };
        let e = phi_decay_terms(&snap.intervals[i], &snap.intervals[i + 1], front.slope).sum;
        match front.kind {
            FrontKind::Strong { .. } => *strong = Some(strong.map_or(e, |s: f64| s.max(e))),
            k if k.is_weak() => {
                let r = e / (theta * k.size());
                *weak = Some(weak.map_or(r, |s: f64| s.max(r)));
            }
            _ => {}
        }
    }
}

/// Evaluate Φ and its checks between two solutions at `x`.
fn pair_sample(setup: &Setup, a: &Solution, b: &Solution, x: f64, norm_constant: f64) -> Result<PairSample, ExperimentError> {
    let (su, sv) = (a.snapshot_at(x)?, b.snapshot_at(x)?);
    let w = &a.weights;
    let snap = lyapunov_phi(&setup.solver.gas, &su, &sv, a.trace_at(x).q_total(), b.trace_at(x).q_total(), w)?;
    let c = equivalence_constant(norm_constant, w, snap.m_bound);
    let holds = snap.phi <= c * snap.l1 * (1.0 + 1e-12) && snap.l1 <= c * snap.phi * (1.0 + 1e-12);
    let theta = a.theta.theta;
    let (mut strong, mut weak) = (None, None);
    let ys_u: Vec<f64> = su.profile().breaks;
    let ys_v: Vec<f64> = sv.profile().breaks;
    front_decay(&snap, &su, &ys_v, theta, &mut strong, &mut weak);
    front_decay(&snap, &sv, &ys_u, theta, &mut strong, &mut weak);
    let slope = wall_slope(a, x);
    let bd = boundary_decay_terms(&snap.intervals[0], slope);
    let wall_ratio_ok = boundary_relations(&setup.solver.gas, &su.bottom, &sv.bottom, slope, w)
        .map(|r| r.ratio_in_range)
        .unwrap_or(true);
    Ok(PairSample {
        x,
        phi: snap.phi,
        l1: snap.l1,
        equivalence: c,
        equivalence_holds: holds,
        m_bound: snap.m_bound,
        max_weight: snap.max_weight,
        strong_decay: strong,
        boundary_transport: bd.transport.sum,
        boundary_as_printed: bd.as_printed.sum,
        weak_decay_ratio: weak,
        wall_ratio_ok,
        max_residual: snap.max_residual,
    })
}

/// Run `u` and `v` at `theta` (their own when `None`) and compare them on
/// `samples + 1` equally spaced abscissae.
pub fn stability_experiment(u: &Scenario, v: &Scenario, theta: Option<f64>, samples: usize) -> Result<StabilityReport, ExperimentError> {
    comparable(u, v)?;
    let (mut u, mut v) = (u.clone(), v.clone());
    if let Some(t) = theta {
        u = u.at_theta(t);
        v = v.at_theta(t);
    }
    v.window = u.window;
    v.theta = u.theta;
    let (su, sv) = rayon::join(|| u.prepare(), || v.prepare());
    let (su, sv) = (su?, sv?);
    let (a, b) = rayon::join(|| run(&su, &RunOptions::default()), || run(&sv, &RunOptions::default()));
    let (a, b) = (a?, b?);
    let norm_constant = hugoniot_norm_constant(&su.solver.gas, &su.bg)?;
    let xs = sample_grid(u.window, samples);
    let samples: Vec<PairSample> = xs
        .par_iter()
        .map(|&x| pair_sample(&su, &a, &b, x, norm_constant))
        .collect::<Result<_, _>>()?;
    Ok(summarise(u.theta.theta, u.window, norm_constant, samples, (a.stats, b.stats)))
}

fn summarise(theta: f64, window: f64, norm_constant: f64, samples: Vec<PairSample>, stats: (RunStats, RunStats)) -> StabilityReport {
    let first = samples[0];
    let phi_drift = samples
        .iter()
        .filter(|s| s.x > 0.0)
        .map(|s| (s.phi - first.phi) / (theta * s.x))
        .fold(0.0, f64::max);
    let c_eq = samples.iter().map(|s| s.equivalence).fold(0.0, f64::max);
    let lipschitz = c_eq * c_eq;
    let drift = c_eq * phi_drift;
    let empirical_lipschitz = if first.l1 > 0.0 {
        samples.iter().map(|s| s.l1 / first.l1).fold(0.0, f64::max)
    } else {
        0.0
    };
    let l1_bound_holds = samples
        .iter()
        .all(|s| s.l1 <= lipschitz * first.l1 + drift * theta * s.x + 1e-12);
    let opt_max = |it: &mut dyn Iterator<Item = Option<f64>>| it.flatten().reduce(f64::max);
    StabilityReport {
        theta,
        window,
        norm_constant,
        initial_l1: first.l1,
        initial_phi: first.phi,
        phi_drift,
        lipschitz,
        drift,
        empirical_lipschitz,
        equivalence_holds: samples.iter().all(|s| s.equivalence_holds),
        strong_decay_max: opt_max(&mut samples.iter().map(|s| s.strong_decay)),
        strong_crossings: samples.iter().filter(|s| s.strong_decay.is_some()).count(),
        boundary_transport_max: samples.iter().map(|s| s.boundary_transport).fold(f64::NEG_INFINITY, f64::max),
        boundary_as_printed_max: samples.iter().map(|s| s.boundary_as_printed).fold(f64::NEG_INFINITY, f64::max),
        weak_decay_max: opt_max(&mut samples.iter().map(|s| s.weak_decay_ratio)),
        wall_ratio_ok: samples.iter().all(|s| s.wall_ratio_ok),
        l1_bound_holds,
        samples,
        stats,
    }
}

/// Per-pair Φ trace: x, Φ, L1_distance, bound `C theta x`.
pub fn write_phi_trace(path: &Path, report: &StabilityReport) -> Result<(), ExperimentError> {
    #[derive(Serialize)]
    struct Row {
        x: f64,
        #[serde(rename = "Phi")]
        phi: f64,
        #[serde(rename = "L1_distance")]
        l1: f64,
        bound: f64,
    }
    write_rows(
        path,
        report.samples.iter().map(|s| Row { x: s.x, phi: s.phi, l1: s.l1, bound: report.drift * report.theta * s.x }),
    )
}

/// One line of a refinement table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub coarse: f64,
    pub fine: f64,
    /// `sup_x |U_coarse(x) - U_fine(x)|_L1` over the sample grid.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyTable {
    pub rows: Vec<CauchyRow>,
    pub strictly_decreasing: bool,
    /// Smallest `C'` with `distance <= C' * coarse` on every row.
    pub c_prime: f64,
    /// Least-squares slope of `ln distance` against `ln theta`.
    pub rate: Option<f64>,
    pub stats: Vec<RunStats>,
}

/// Run `scenario` at each level in `thetas` (decreasing) and tabulate
/// distances between consecutive levels.
pub fn convergence_study(scenario: &Scenario, thetas: &[f64], samples: usize) -> Result<CauchyTable, ExperimentError> {
    if thetas.len() < 2 {
        return Err(ExperimentError::Study("need at least two levels".into()));
    }
    if thetas.windows(2).any(|w| !(w[1] < w[0])) || thetas.iter().any(|&t| !(t > 0.0)) {
        return Err(ExperimentError::Study("levels must be positive and strictly decreasing".into()));
    }
    let runs: Vec<Solution> = thetas
        .par_iter()
        .map(|&t| -> Result<Solution, ExperimentError> {
            let setup = scenario.at_theta(t).prepare()?;
            Ok(run(&setup, &RunOptions::default())?)
        })
        .collect::<Result<_, _>>()?;
    let xs = sample_grid(scenario.window, samples);
    let rows: Vec<CauchyRow> = (0..runs.len() - 1)
        .into_par_iter()
        .map(|k| -> Result<CauchyRow, ExperimentError> {
            let mut sup: f64 = 0.0;
            for &x in &xs {
                let d = runs[k].solution_slice(x)?.l1_distance(&runs[k + 1].solution_slice(x)?);
                sup = sup.max(d);
            }
            Ok(CauchyRow { coarse: thetas[k], fine: thetas[k + 1], distance: sup })
        })
        .collect::<Result<_, _>>()?;
    let strictly_decreasing = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    let c_prime = rows.iter().map(|r| r.distance / r.coarse).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.distance > 0.0).map(|r| (r.coarse.ln(), r.distance.ln())).collect();
    let rate = (pts.len() >= 2).then(|| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    });
    Ok(CauchyTable { rows, strictly_decreasing, c_prime, rate, stats: runs.into_iter().map(|r| r.stats).collect() })
}

/// Default output directory: `$EULER_FRONTS_OUT`, else `./out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
}
