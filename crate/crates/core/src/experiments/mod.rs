//! Config-driven experiment runners.
//!
//! Each experiment is a [`Experiment`] registered by kind. A run resolves the
//! config against the experiment's defaults, executes, and returns a
//! [`MetricsReport`] whose metadata echoes the fully resolved config, so the
//! echoed `config.txt` re-runs to identical CSVs.

mod analytic;
mod compare;
mod config;
mod converge;
mod memorize;
mod partial;

use std::path::{Path, PathBuf};
use std::sync::Arc;

pub use config::ExperimentConfig;

use crate::datasets::{load_dataset, sample_dataset, Dataset, FileFormat, TargetSpec};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::schedule::Schedule;

/// Keys every experiment accepts. `None` means optional without default.
const COMMON_KEYS: &[(&str, Option<&str>)] = &[
    ("kind", None),
    ("seed", None),
    ("T", Some("1000")),
    ("beta-start", Some("0.0001")),
    ("beta-end", Some("0.02")),
];

pub trait Experiment: Send + Sync {
    fn kind(&self) -> &'static str;

    /// Experiment-specific keys and their defaults.
    fn keys(&self) -> &'static [(&'static str, Option<&'static str>)];

    /// Runs on a resolved config (defaults filled, seed present).
    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricsReport>;
}

pub const EXPERIMENT_KINDS: [&str; 6] = [
    "converge",
    "memorize",
    "partial-recover",
    "trajectory-compare",
    "mi-bound",
    "gaussian-example",
];

pub fn by_kind(kind: &str) -> Result<Box<dyn Experiment>> {
    Ok(match kind {
        "converge" => Box::new(converge::Converge),
        "memorize" => Box::new(memorize::Memorize),
        "partial-recover" => Box::new(partial::PartialRecover),
        "trajectory-compare" => Box::new(compare::TrajectoryCompare),
        "mi-bound" => Box::new(analytic::MiBoundRun),
        "gaussian-example" => Box::new(analytic::GaussianExample),
        other => {
            return Err(Error::config(format!(
                "unknown experiment `{other}` (known: {})",
                EXPERIMENT_KINDS.join(", ")
            )))
        }
    })
}

/// Fills defaults and rejects unknown keys.
pub fn resolve(cfg: &ExperimentConfig) -> Result<ExperimentConfig> {
    let exp = by_kind(cfg.kind()?)?;
    let allowed: Vec<(&str, Option<&str>)> =
        COMMON_KEYS.iter().chain(exp.keys()).copied().collect();
    if let Some(bad) = cfg.keys().find(|k| !allowed.iter().any(|(a, _)| a == k)) {
        let names: Vec<&str> = allowed.iter().map(|(k, _)| *k).collect();
        return Err(Error::config(format!(
            "`{}` does not take key `{bad}` (accepted: {})",
            exp.kind(),
            names.join(", ")
        )));
    }
    let mut out = cfg.clone();
    for (k, v) in &allowed {
        if let Some(v) = v {
            out.set_default(k, v);
        }
    }
    out.seed()?;
    Ok(out)
}

/// Resolves and runs one experiment. Failing checks stay in the report; see
/// [`enforce`].
pub fn execute(cfg: &ExperimentConfig) -> Result<MetricsReport> {
    let kind = cfg.kind()?.to_string();
    let wrap = |e: Error| Error::Experiment {
        experiment: kind.clone(),
        source: Box::new(e),
    };
    let resolved = resolve(cfg).map_err(wrap)?;
    let exp = by_kind(&kind)?;
    let mut report = exp.run(&resolved).map_err(wrap)?;
    for (k, v) in resolved.iter() {
        report.meta(k, v);
    }
    Ok(report)
}

/// First failing check as a contract error.
pub fn enforce(name: &str, report: &MetricsReport) -> Result<()> {
    match report.failed_checks().next() {
        Some(c) => Err(Error::Contract {
            experiment: name.to_string(),
            check: c.name.clone(),
            detail: c.detail.clone(),
        }),
        None => Ok(()),
    }
}

/// Outcome of one config in [`run_all`].
#[derive(Debug)]
pub struct RunOutcome {
    pub name: String,
    pub report_dir: PathBuf,
    pub result: Result<()>,
}

/// Runs every `*.cfg` in `dir` (sorted by file name), writing each report to
/// `out/<file stem>/`. Every config is attempted; the returned outcomes carry
/// per-experiment errors, including contract violations.
pub fn run_all(dir: &Path, out: &Path) -> Result<Vec<RunOutcome>> {
    let listing = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in listing {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("cfg") {
            files.push(path);
        }
    }
    files.sort();
    let mut outcomes = Vec::with_capacity(files.len());
    for path in files {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("config")
            .to_string();
        let report_dir = out.join(&name);
        let result = ExperimentConfig::load(&path)
            .and_then(|cfg| execute(&cfg))
            .and_then(|report| {
                report.write(&report_dir)?;
                enforce(&name, &report)
            })
            .map_err(|e| match e {
                e @ (Error::Contract { .. } | Error::Experiment { .. }) => e,
                other => Error::Experiment {
                    experiment: name.clone(),
                    source: Box::new(other),
                },
            });
        outcomes.push(RunOutcome {
            name,
            report_dir,
            result,
        });
    }
    Ok(outcomes)
}

/// Linear schedule from `T`, `beta-start`, `beta-end`, reduced to `steps`
/// (`full` keeps every step).
pub(crate) fn schedule(cfg: &ExperimentConfig) -> Result<Schedule> {
    let full = Schedule::linear(
        cfg.parse("T")?,
        cfg.parse("beta-start")?,
        cfg.parse("beta-end")?,
    )?;
    match cfg.opt_str("steps") {
        None | Some("full") => Ok(full),
        Some(_) => full.subsequence(cfg.parse("steps")?),
    }
}

pub(crate) fn target(cfg: &ExperimentConfig) -> Result<TargetSpec> {
    let spec: TargetSpec = cfg.str("target")?.parse()?;
    spec.validate()?;
    Ok(spec)
}

/// The file named by `key` if set, otherwise `n` draws from the target.
pub(crate) fn training_set(
    cfg: &ExperimentConfig,
    key: &str,
    n: usize,
    seed: u64,
) -> Result<Arc<Dataset>> {
    if let Some(path) = cfg.opt_str(key) {
        let path = Path::new(path);
        return Ok(Arc::new(load_dataset(path, FileFormat::from_path(path))?));
    }
    Ok(Arc::new(sample_dataset(&target(cfg)?, n, seed)?))
}
