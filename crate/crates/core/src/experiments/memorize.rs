use std::collections::BTreeMap;

use super::{schedule, training_set, Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::metrics::{nn_audit, MetricsReport, Table};
use crate::numeric::median;
use crate::predictors::EpsEmpirical;
use crate::samplers::{self, generate_endpoints, Start};

/// Generates from the empirical optimum with each sampler and audits the
/// samples against the training set.
pub struct Memorize;

const MAX_TRAINING_POINTS: usize = 1000;

impl Experiment for Memorize {
    fn kind(&self) -> &'static str {
        "memorize"
    }

    fn keys(&self) -> &'static [(&'static str, Option<&'static str>)] {
        &[
            ("steps", Some("50")),
            ("target", Some("gaussian:dim=2;sigma=1")),
            ("dataset", None),
            ("n", Some("64")),
            ("count", Some("256")),
            ("samplers", Some("ddim,ddpm")),
            ("replicates", Some("3")),
            ("tau-frac", Some("0.05")),
            ("min-fraction", Some("0.95")),
        ]
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricsReport> {
        let seed = cfg.seed()?;
        let sched = schedule(cfg)?;
        let n: usize = cfg.parse("n")?;
        let count: usize = cfg.parse("count")?;
        let replicates: usize = cfg.parse("replicates")?;
        let tau_frac: f64 = cfg.parse("tau-frac")?;
        let min_fraction: f64 = cfg.parse("min-fraction")?;
        let names: Vec<String> = cfg.list("samplers")?;
        if replicates == 0 || count == 0 {
            return Err(Error::config("replicates and count must be >= 1"));
        }

        let mut r = MetricsReport::new("memorize");
        let mut per_rep = Table::new(&["replicate", "seed", "sampler", "tau", "memorized_fraction", "median_nn"]);
        // sampler -> (distances, memorized count)
        let mut pooled: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
        for rep in 0..replicates {
            let rep_seed = seed.wrapping_add(rep as u64);
            let data = training_set(cfg, "dataset", n, rep_seed)?;
            if data.len() > MAX_TRAINING_POINTS {
                return Err(Error::config(format!(
                    "memorize audits at most {MAX_TRAINING_POINTS} training points, got {}",
                    data.len()
                )));
            }
            let tau = tau_frac * data.radius();
            let pred = EpsEmpirical::new(sched.clone(), data.clone())?;
            for name in &names {
                let sampler = samplers::by_name(name)?;
                let samples =
                    generate_endpoints(&sched, &pred, sampler.as_ref(), count, &Start::Noise, rep_seed)?;
                let audit = nn_audit(&samples, &data, tau)?;
                let frac = audit.get("memorized_fraction").unwrap_or(f64::NAN);
                let med = audit.get("median").unwrap_or(f64::NAN);
                per_rep.push(vec![
                    rep.to_string(),
                    rep_seed.to_string(),
                    name.clone(),
                    format!("{tau:?}"),
                    format!("{frac:?}"),
                    format!("{med:?}"),
                ]);
                let entry = pooled.entry(name.clone()).or_default();
                let dists = &audit.series["nn_distance"];
                entry.0.extend(dists.iter().map(|(_, v)| *v));
                entry.1 += dists.iter().filter(|(_, v)| *v <= tau).count();
                if name == "ddim" {
                    r.check(
                        &format!("ddim_collapse_r{rep}"),
                        frac >= min_fraction,
                        format!("memorized fraction {frac} (need >= {min_fraction}) at tau {tau}"),
                    );
                }
                r.absorb(&format!("r{rep}.{name}"), audit);
            }
        }
        for (name, (dists, hits)) in &pooled {
            r.scalar(&format!("pooled.{name}.memorized_fraction"), *hits as f64 / dists.len() as f64);
            r.scalar(&format!("pooled.{name}.median"), median(dists));
        }
        if pooled.contains_key("ddim") && pooled.contains_key("ddpm") {
            let f = |s: &str| r.get(&format!("pooled.{s}.memorized_fraction")).unwrap_or(f64::NAN);
            let m = |s: &str| r.get(&format!("pooled.{s}.median")).unwrap_or(f64::NAN);
            let (fi, fp, mi, mp) = (f("ddim"), f("ddpm"), m("ddim"), m("ddpm"));
            r.check(
                "ddpm_fraction_lower",
                fp < fi,
                format!("pooled memorized fraction ddpm {fp} vs ddim {fi}"),
            );
            r.check(
                "ddpm_median_larger",
                mp > mi,
                format!("pooled median NN distance ddpm {mp} vs ddim {mi}"),
            );
        }
        r.tables.insert("replicates".into(), per_rep);
        Ok(r)
    }
}
