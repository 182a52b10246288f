//! Command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vmfp_core::diagnostics::{entropy_dissipation, free_energy, kinetic_energy, kinetic_relative_entropy};
use vmfp_core::fieldsolve::{div_b, gauss_residual};
use vmfp_core::harness::check::run_checks;
use vmfp_core::harness::io::{read_checkpoint, Checkpoint};
use vmfp_core::harness::run::{run_kinetic, run_limit, run_sweep, write_kinetic_outputs, write_limit_outputs};
use vmfp_core::harness::{ScenarioConfig, StepMode};
use vmfp_core::kinetic::CollisionOp;
use vmfp_core::Result;

#[derive(Parser)]
#[command(name = "vmfp", version, about = "Kinetic and guiding-center plasma solvers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// Scenario file (TOML); defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the kinetic model and sample diagnostics against the limit.
    RunKinetic {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        mode: Option<StepMode>,
    },
    /// Run the guiding-center limit model.
    RunLimit {
        #[command(flatten)]
        common: Common,
    },
    /// Run the limit model once and the kinetic model for each epsilon.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: Option<StepMode>,
    },
    /// Run the quick invariant suite.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Recompute diagnostics from the checkpoint in a run directory.
    Diag {
        /// Directory holding checkpoint.json and checkpoint.bin.
        dir: PathBuf,
    },
}

fn load(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ScenarioConfig, default: &str) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(default))
}

fn diag(dir: &Path) -> Result<()> {
    let json = match read_checkpoint(dir)? {
        Checkpoint::Kinetic(k) => {
            let rho = vmfp_core::moments::density(&k.f).zip(&k.background, |a, b| k.params.q * (a - b));
            let op = CollisionOp::new(k.f.vel, k.params.sigma, Default::default());
            serde_json::json!({
                "kind": "kinetic",
                "t": k.f.t,
                "eps": k.params.eps,
                "mass": k.f.total_mass(),
                "min_f": k.f.min_value(),
                "kinetic_energy": kinetic_energy(&k.f),
                "field_energy": k.em.energy(&k.params),
                "free_energy": free_energy(&k.f, &k.em, &k.params),
                "entropy_dissipation": entropy_dissipation(&k.f, &op),
                "kinetic_relative_entropy": kinetic_relative_entropy(&k.f, &k.params),
                "gauss_residual": gauss_residual(&k.em.e, &rho, &k.params),
                "div_b": div_b(&k.em.b),
                "dissipated": k.dissipated,
            })
        }
        Checkpoint::Limit(l) => {
            let solver = vmfp_core::limit::LimitSolver::new(l.params, l.state.n.clone(), l.b_ext, l.background)?;
            let mut solver = solver;
            solver.state = l.state;
            serde_json::json!({
                "kind": "limit",
                "t": solver.state.t,
                "mass": solver.state.n.integral(),
                "min_n": solver.state.n.min(),
                "free_energy": solver.free_energy()?,
                "e_mean": solver.state.e_mean,
            })
        }
    };
    let s = serde_json::to_string_pretty(&json).expect("json");
    println!("{s}");
    std::fs::write(dir.join("diag.json"), s)?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::RunKinetic { common, eps, mode } => {
            let mut cfg = load(&common)?;
            if let Some(e) = eps {
                cfg = cfg.with_eps(e);
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            let dir = out_dir(&common, &cfg, "out/kinetic");
            let run = run_kinetic(&cfg, None)?;
            write_kinetic_outputs(&dir, &cfg, &run)?;
            let last = run.records.last().expect("records");
            println!(
                "eps = {}  t = {}  records = {}  sup ME = {:.6e}  mass = {:.16e}  -> {}",
                cfg.params.eps,
                last.t,
                run.records.len(),
                run.sup_modulated_energy(),
                last.mass,
                dir.display()
            );
        }
        Cmd::RunLimit { common } => {
            let cfg = load(&common)?;
            let dir = out_dir(&common, &cfg, "out/limit");
            let run = run_limit(&cfg)?;
            write_limit_outputs(&dir, &cfg, &run)?;
            let last = run.records.last().expect("records");
            println!("t = {}  mass = {:.16e}  free energy = {:.16e}  -> {}", last.t, last.mass, last.free_energy, dir.display());
        }
        Cmd::Sweep { common, mode } => {
            let mut cfg = load(&common)?;
            if let Some(m) = mode {
                cfg.mode = m;
            }
            let dir = out_dir(&common, &cfg, "out/sweep");
            let m = run_sweep(&cfg, &dir)?;
            for e in &m.entries {
                println!("eps = {:<6} sup ME = {:.6e}  sup KRE = {:.6e}", e.eps, e.sup_modulated_energy, e.sup_kinetic_relative_entropy);
            }
            match m.slope {
                Some(s) => println!("slope of ln(sup ME) vs ln(eps): {s:.4}"),
                None => println!("slope: n/a"),
            }
            println!("manifest: {}", dir.join("manifest.json").display());
        }
        Cmd::Check { common } => {
            let cfg = load(&common)?;
            let outcomes = run_checks(&cfg, cfg.seed)?;
            let mut all = true;
            for o in &outcomes {
                println!("{} {:<24} {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
                all &= o.passed;
            }
            return Ok(all);
        }
        Cmd::Diag { dir } => diag(&dir)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
