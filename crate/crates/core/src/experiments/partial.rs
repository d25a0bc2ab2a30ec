use std::sync::Arc;

use super::{schedule, training_set, Experiment, ExperimentConfig};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::{MetricsReport, Table};
use crate::numeric::{median, quantile, sq_dist};
use crate::predictors::EpsEmpirical;
use crate::rng;
use crate::samplers::{generate_endpoints, Ddim, Start};
use crate::schedule::Schedule;

/// Noises training and held-out points to an intermediate step, reverses
/// them with DDIM under the empirical optimum, and measures how far each
/// result lands from its own source.
pub struct PartialRecover;

/// Control band for the `s = K` comparison: held-out/train median ratio.
const CONTROL_BAND: (f64, f64) = (0.8, 1.25);

fn first_rows(data: &Dataset, k: usize) -> Arc<Matrix> {
    let k = k.min(data.len());
    let d = data.dim();
    Arc::new(Matrix::new(k, d, data.points().as_slice()[..k * d].to_vec()))
}

fn recovery(
    sched: &Schedule,
    pred: &EpsEmpirical,
    sources: &Arc<Matrix>,
    s: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let start = Start::Partial {
        sources: sources.clone(),
        s,
    };
    let ends = generate_endpoints(sched, pred, &Ddim, sources.rows(), &start, seed)?;
    Ok((0..sources.rows())
        .map(|i| sq_dist(ends.row(i), sources.row(i)).sqrt())
        .collect())
}

fn summarize(r: &mut MetricsReport, prefix: &str, d: &[f64]) -> f64 {
    let m = median(d);
    r.scalar(&format!("{prefix}.median"), m);
    r.scalar(&format!("{prefix}.q10"), quantile(d, 0.1));
    r.scalar(&format!("{prefix}.q90"), quantile(d, 0.9));
    m
}

impl Experiment for PartialRecover {
    fn kind(&self) -> &'static str {
        "partial-recover"
    }

    fn keys(&self) -> &'static [(&'static str, Option<&'static str>)] {
        &[
            ("steps", Some("50")),
            ("target", Some("gaussian:dim=16;sigma=1")),
            ("dataset", None),
            ("heldout-dataset", None),
            ("n", Some("128")),
            ("heldout", Some("128")),
            ("sources", Some("128")),
            ("start-step", Some("auto")),
            ("signal", Some("0.6678")),
            ("noise", Some("0.7743")),
            ("replicates", Some("3")),
            ("tau-frac", Some("0.05")),
            ("control", Some("true")),
        ]
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricsReport> {
        let seed = cfg.seed()?;
        let sched = schedule(cfg)?;
        let n: usize = cfg.parse("n")?;
        let n_held: usize = cfg.parse("heldout")?;
        let n_sources: usize = cfg.parse("sources")?;
        let replicates: usize = cfg.parse("replicates")?;
        let tau_frac: f64 = cfg.parse("tau-frac")?;
        let control = cfg.flag("control")?;
        let s = match cfg.str("start-step")? {
            "auto" => sched.best_matching_step(cfg.parse("signal")?, cfg.parse("noise")?),
            _ => cfg.parse("start-step")?,
        };
        if s == 0 || s > sched.steps() {
            return Err(Error::config(format!("start-step {s} outside 1..={}", sched.steps())));
        }
        if n_sources == 0 || replicates == 0 {
            return Err(Error::config("sources and replicates must be >= 1"));
        }

        let mut r = MetricsReport::new("partial-recover");
        r.scalar("start_step", s as f64);
        r.scalar("start_timestep", sched.timestep(s)? as f64);
        r.scalar("signal_coef", sched.alpha_bar(s)?.sqrt());
        r.scalar("noise_coef", sched.one_minus_alpha_bar(s)?.sqrt());
        let mut table = Table::new(&["replicate", "start_step", "source_set", "source", "distance"]);

        for rep in 0..replicates {
            let rep_seed = seed.wrapping_add(rep as u64);
            let train = training_set(cfg, "dataset", n, rep_seed)?;
            let held = training_set(
                cfg,
                "heldout-dataset",
                n_held,
                rng::derive(rep_seed, &[rng::tag::HELDOUT]),
            )?;
            if train.dim() != held.dim() {
                return Err(Error::config("training and held-out sets differ in dimension"));
            }
            let overlap = held
                .points()
                .iter_rows()
                .position(|h| train.points().iter_rows().any(|p| p == h));
            if let Some(i) = overlap {
                return Err(Error::config(format!(
                    "held-out point {i} also appears in the training set"
                )));
            }
            let tau = tau_frac * train.radius();
            let pred = EpsEmpirical::new(sched.clone(), train.clone())?;
            let train_src = first_rows(&train, n_sources);
            let held_src = first_rows(&held, n_sources);

            let mut starts = vec![s];
            if control && s != sched.steps() {
                starts.push(sched.steps());
            }
            for &from in &starts {
                let label = if from == s { "matched" } else { "control" };
                let dt = recovery(&sched, &pred, &train_src, from, rng::derive(rep_seed, &[rng::tag::PARTIAL, 0]))?;
                let dh = recovery(&sched, &pred, &held_src, from, rng::derive(rep_seed, &[rng::tag::PARTIAL, 1]))?;
                for (set, dists) in [("train", &dt), ("heldout", &dh)] {
                    for (i, v) in dists.iter().enumerate() {
                        table.push(vec![
                            rep.to_string(),
                            from.to_string(),
                            set.to_string(),
                            i.to_string(),
                            format!("{v:?}"),
                        ]);
                    }
                }
                let mt = summarize(&mut r, &format!("r{rep}.{label}.train"), &dt);
                let mh = summarize(&mut r, &format!("r{rep}.{label}.heldout"), &dh);
                if label == "matched" {
                    r.scalar(&format!("r{rep}.tau"), tau);
                    r.check(
                        &format!("train_recovered_r{rep}"),
                        mt < tau,
                        format!("train median {mt} vs tau {tau}"),
                    );
                    r.check(
                        &format!("heldout_not_recovered_r{rep}"),
                        mt < mh,
                        format!("train median {mt} vs held-out median {mh}"),
                    );
                } else {
                    let ratio = mh / mt;
                    r.scalar(&format!("r{rep}.control.ratio"), ratio);
                    r.check(
                        &format!("control_indistinguishable_r{rep}"),
                        ratio >= CONTROL_BAND.0 && ratio <= CONTROL_BAND.1,
                        format!(
                            "s = {from}: held-out/train median ratio {ratio} (band {:?})",
                            CONTROL_BAND
                        ),
                    );
                }
            }
        }
        r.tables.insert("distances".into(), table);
        Ok(r)
    }
}
