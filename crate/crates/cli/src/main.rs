use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use emopt::experiments::{self, ExperimentConfig};
use emopt::metrics::MetricsReport;

#[derive(Parser)]
#[command(name = "emopt", version, about = "Empirical-optimal diffusion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probe RMSE of the empirical optimum against the analytic oracle
    Converge(RunArgs),
    /// Nearest-neighbour audit of DDIM and DDPM samples
    Memorize(RunArgs),
    /// Recovery of training vs held-out points from a partial start
    PartialRecover(RunArgs),
    /// Step-by-step divergence of oracle, eps* and xi* trajectories
    TrajectoryCompare(RunArgs),
    /// Closed-form mutual-information upper bound
    MiBound(RunArgs),
    /// Gaussian mean-estimation example, closed form and Monte Carlo
    GaussianExample(RunArgs),
    /// Run every *.cfg in a directory
    RunAll {
        dir: PathBuf,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    /// Report directory
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    #[arg(long = "T")]
    t: Option<usize>,
    #[arg(long)]
    beta_start: Option<f64>,
    #[arg(long)]
    beta_end: Option<f64>,
    /// Reverse steps K (`full` keeps all T)
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Any other config key, as KEY=VALUE (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl RunArgs {
    fn config(&self, kind: &str) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(k) = cfg.opt_str("kind") {
            if k != kind {
                bail!("config declares kind `{k}` but the subcommand is `{kind}`");
            }
        }
        cfg.set("kind", kind);
        cfg.set("seed", self.seed);
        let flags: [(&str, Option<String>); 8] = [
            ("T", self.t.map(|v| v.to_string())),
            ("beta-start", self.beta_start.map(|v| v.to_string())),
            ("beta-end", self.beta_end.map(|v| v.to_string())),
            ("steps", self.steps.clone()),
            ("target", self.target.clone()),
            ("n", self.n.map(|v| v.to_string())),
            ("count", self.count.map(|v| v.to_string())),
            ("dataset", self.dataset.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v);
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            cfg.set(k.trim(), v.trim());
        }
        Ok(cfg)
    }
}

fn print_report(report: &MetricsReport, dir: &Path) {
    println!("{} -> {}", report.name, dir.display());
    for (k, v) in &report.scalars {
        println!("  {k} = {v}");
    }
    for c in &report.checks {
        println!("  [{}] {}: {}", if c.passed { "ok" } else { "FAIL" }, c.name, c.detail);
    }
}

fn run_one(kind: &str, args: &RunArgs) -> anyhow::Result<bool> {
    let cfg = args.config(kind)?;
    let report = experiments::execute(&cfg)?;
    report
        .write(&args.out)
        .with_context(|| format!("writing report to {}", args.out.display()))?;
    print_report(&report, &args.out);
    Ok(experiments::enforce(kind, &report).is_ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Converge(a) => run_one("converge", a),
        Command::Memorize(a) => run_one("memorize", a),
        Command::PartialRecover(a) => run_one("partial-recover", a),
        Command::TrajectoryCompare(a) => run_one("trajectory-compare", a),
        Command::MiBound(a) => run_one("mi-bound", a),
        Command::GaussianExample(a) => run_one("gaussian-example", a),
        Command::RunAll { dir, out } => experiments::run_all(dir, out)
            .map_err(anyhow::Error::from)
            .map(|outcomes| {
                let mut ok = true;
                for o in &outcomes {
                    match &o.result {
                        Ok(()) => println!("ok    {} -> {}", o.name, o.report_dir.display()),
                        Err(e) => {
                            ok = false;
                            println!("FAIL  {}: {e}", o.name);
                        }
                    }
                }
                println!("{} config(s) run", outcomes.len());
                ok
            }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
