//! `stflow` command line driver.

mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use stflow::bench::{
    emit_report, fill_eoc, run_cavity, run_manufactured, text_table, CavityHorizon, ReportFormat, RunRow, SolverConfig,
};
use stflow::solver::EwVariant;
use stflow::stmg::CoarseningOrder;

#[derive(Parser, Debug)]
#[command(name = "stflow", version, about = "Space-time finite element Navier-Stokes studies")]
#[command(args_override_self = true)]
struct Cli {
    /// File of `key = value` lines; entries override command line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "STFLOW_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Manufactured-solution convergence study.
    Convergence(StudyArgs),
    /// Two-dimensional lid-driven cavity iteration study.
    Cavity(CavityArgs),
    /// Property suites: quadrature, dense oracle, surrogate bounds, probe slopes.
    Verify,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EwChoice {
    /// Ratio power scaled by the previous forcing term.
    PreviousEta,
    /// Ratio power alone.
    RatioOnly,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrderChoice {
    /// Spatial degree first, then the mesh, then the temporal degree.
    TemporalLast,
    /// Spatial and temporal degrees together, then the mesh.
    Joint,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Spatial degrees (comma separated).
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "1")]
    r: Vec<usize>,
    /// Refinement levels: a list, or a single `n` for `1..=n`.
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "1,2,3")]
    levels: Vec<usize>,
    /// Smoothing steps before and after the coarse correction.
    #[arg(long, default_value_t = 1)]
    nsm: usize,
    #[arg(long, default_value_t = 0.8)]
    omega: f64,
    #[arg(long, default_value_t = 10.0)]
    gamma1: f64,
    #[arg(long, default_value_t = 10.0)]
    gamma2: f64,
    /// Output file; `.txt` writes the text table, anything else CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero wall times so that output is reproducible.
    #[arg(long)]
    deterministic: bool,
    #[arg(long = "rebuild-thetaN", alias = "rebuild-theta-n")]
    rebuild_theta_n: Option<f64>,
    #[arg(long = "rebuild-thetaL", alias = "rebuild-theta-l")]
    rebuild_theta_l: Option<f64>,
    #[arg(long = "rebuild-kappaabs", alias = "rebuild-kappa-abs")]
    rebuild_kappa_abs: Option<f64>,
    #[arg(long, value_enum, default_value = "previous-eta")]
    ew_variant: EwChoice,
    #[arg(long, value_enum, default_value = "temporal-last")]
    coarsening: OrderChoice,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Temporal degree; defaults to `k = r`.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1e-2)]
    nu: f64,
}

#[derive(Args, Debug)]
struct CavityArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Viscosities (comma separated).
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "4e-4")]
    nu: Vec<f64>,
    #[arg(long, default_value_t = 8.0)]
    t_end: f64,
    /// Slabs on level 0; level `c` uses `base_slabs * 2^c`.
    #[arg(long, default_value_t = 16)]
    base_slabs: usize,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut cfg = SolverConfig { gamma1: self.gamma1, gamma2: self.gamma2, deterministic: self.deterministic, ..Default::default() };
        cfg.multigrid.pre_smooth = self.nsm;
        cfg.multigrid.post_smooth = self.nsm;
        cfg.multigrid.omega = self.omega;
        cfg.multigrid.order = match self.coarsening {
            OrderChoice::TemporalLast => CoarseningOrder::TemporalLast,
            OrderChoice::Joint => CoarseningOrder::Joint,
        };
        cfg.newton.ew_variant = match self.ew_variant {
            EwChoice::PreviousEta => EwVariant::PreviousEta,
            EwChoice::RatioOnly => EwVariant::RatioOnly,
        };
        let rebuild = &mut cfg.newton.rebuild;
        if let Some(x) = self.rebuild_theta_n {
            rebuild.theta_n = x;
        }
        if let Some(x) = self.rebuild_theta_l {
            rebuild.theta_l = x;
        }
        if let Some(x) = self.rebuild_kappa_abs {
            rebuild.kappa_abs = x;
        }
        cfg
    }

    fn levels(&self) -> Vec<usize> {
        match self.levels.as_slice() {
            [n] => (1..=*n).collect(),
            l => l.to_vec(),
        }
    }
}

/// Turns `key = value` lines into long flags. Blank lines and `#` comments
/// are skipped; `key = true` becomes a bare switch and `key = false` is
/// dropped.
fn config_flags(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected `key = value`", path.display(), i + 1);
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => {
                out.push(format!("--{key}"));
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

/// Parses the command line, then re-parses with the config entries appended
/// so that they take precedence.
fn parse() -> Result<Cli> {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse_from(&args);
    match &cli.config {
        None => Ok(cli),
        Some(path) => {
            let mut full = args.clone();
            full.extend(config_flags(path)?);
            Ok(Cli::try_parse_from(full)?)
        }
    }
}

fn finish(rows: &[RunRow], solver: &SolverArgs) -> Result<()> {
    print!("{}", text_table(rows));
    if let Some(path) = &solver.out {
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => ReportFormat::Text,
            _ => ReportFormat::Csv,
        };
        emit_report(rows, path, format).with_context(|| format!("writing {}", path.display()))?;
    }
    let failed = rows.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        eprintln!("warning: {failed} run(s) did not converge");
    }
    Ok(())
}

fn convergence(args: &StudyArgs) -> Result<()> {
    let cfg = args.solver.config();
    let mut rows = Vec::new();
    for &r in &args.solver.r {
        for c in args.solver.levels() {
            rows.push(run_manufactured(args.nu, r, args.k.unwrap_or(r), c, &cfg)?.row);
        }
    }
    fill_eoc(&mut rows);
    finish(&rows, &args.solver)
}

fn cavity(args: &CavityArgs) -> Result<()> {
    let cfg = args.solver.config();
    let horizon = CavityHorizon { t_end: args.t_end, base_slabs: args.base_slabs };
    let rows = run_cavity(&args.solver.levels(), &args.solver.r, &args.nu, args.solver.nsm, horizon, &cfg)?;
    finish(&rows, &args.solver)
}

fn run() -> Result<bool> {
    let cli = parse()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring threads")?;
    }
    match &cli.command {
        Command::Convergence(a) => convergence(a).map(|_| true),
        Command::Cavity(a) => cavity(a).map(|_| true),
        Command::Verify => Ok(verify::run()),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            if let Some(clap) = e.downcast_ref::<clap::Error>() {
                clap.exit();
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
