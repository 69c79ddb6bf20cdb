//! Command line front end: a single run, a pairwise stability experiment
//! (`--pair`) or a refinement study (`--levels`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use euler_fronts::experiments::{
    convergence_study, exit, run_scenario, stability_experiment, write_json, write_phi_trace, ExperimentError, OUT_DIR_ENV,
};
use euler_fronts::scenario::Scenario;

#[derive(Parser, Debug)]
#[command(name = "euler-fronts", version, about = "Front tracking for steady supersonic Euler flow with a strong vortex sheet")]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Approximation parameter; overrides the scenario.
    #[arg(long)]
    theta: Option<f64>,
    /// Length of the x window; overrides the scenario.
    #[arg(long)]
    window: Option<f64>,
    /// Seed for calibration and tie-breaking; overrides the scenario.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    out_dir: PathBuf,
    /// Second scenario: run a stability experiment against it.
    #[arg(long, conflicts_with = "levels")]
    pair: Option<PathBuf>,
    /// Comma separated decreasing theta values for a refinement study.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<f64>>,
    /// Sample intervals on the x window for pair and refinement studies.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

fn load(path: &Path, cli: &Cli) -> Result<Scenario, ExperimentError> {
    let mut s = Scenario::load(path)?;
    if let Some(t) = cli.theta {
        s.theta.theta = t;
    }
    if let Some(w) = cli.window {
        s.window = w;
    }
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn execute(cli: &Cli) -> Result<i32, ExperimentError> {
    let scenario = load(&cli.scenario, cli)?;
    let out = cli.out_dir.as_path();
    let mkdir = |dir: &Path| {
        std::fs::create_dir_all(dir)
            .map_err(|e| ExperimentError::Output { path: dir.display().to_string(), message: e.to_string() })
    };
    if let Some(levels) = &cli.levels {
        let table = convergence_study(&scenario, levels, cli.samples)?;
        mkdir(out)?;
        write_json(&out.join("cauchy.json"), &table)?;
        for r in &table.rows {
            println!("{:e} -> {:e}: {:.6e}", r.coarse, r.fine, r.distance);
        }
        println!("strictly decreasing: {}, C' = {:.4}", table.strictly_decreasing, table.c_prime);
        if !table.strictly_decreasing {
            eprintln!("monitor violated: refinement distances do not decrease");
            return Ok(exit::MONITOR);
        }
        return Ok(exit::OK);
    }
    if let Some(pair) = &cli.pair {
        let other = load(pair, cli)?;
        let report = stability_experiment(&scenario, &other, None, cli.samples)?;
        mkdir(out)?;
        write_json(&out.join("stability.json"), &report)?;
        write_phi_trace(&out.join("phi_trace.csv"), &report)?;
        println!(
            "L1(0) = {:.4e}, Phi(0) = {:.4e}, L = {:.4e}, C = {:.4e}, empirical L = {:.4}",
            report.initial_l1, report.initial_phi, report.lipschitz, report.drift, report.empirical_lipschitz
        );
        let checks = [
            ("equivalence", report.equivalence_holds),
            ("strong contact decay", report.strong_decay_ok()),
            ("boundary decay", report.boundary_decay_ok()),
            ("L1 bound", report.l1_bound_holds),
        ];
        if let Some((name, _)) = checks.iter().find(|c| !c.1) {
            eprintln!("monitor violated: {name}");
            return Ok(exit::MONITOR);
        }
        return Ok(exit::OK);
    }
    let outcome = run_scenario(&scenario, Some(out))?;
    let s = &outcome.report.stats;
    println!(
        "events {} (accurate {}, simplified {}), fronts {}, G {:.6e} -> {:.6e}",
        s.events,
        s.accurate,
        s.simplified,
        s.final_fronts,
        outcome.solution.trace.first().map_or(0.0, |r| r.g),
        outcome.solution.trace.last().map_or(0.0, |r| r.g),
    );
    if let Some(v) = &outcome.report.violation {
        eprintln!("monitor violated: {v}");
    }
    Ok(outcome.report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Help and version are not errors; bad arguments are configuration errors.
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
