use std::sync::Arc;

use super::{schedule, target, Experiment, ExperimentConfig};
use crate::datasets::{sample_dataset, Dataset, TargetSpec};
use crate::error::{Error, Result};
use crate::metrics::{predictor_rmse, probes_from_target, MetricsReport, Table};
use crate::numeric::median;
use crate::predictors::{EpsEmpirical, OracleEps, Predictor, SGrid, XiEmpirical, XiFromEps};
use crate::rng;
use crate::schedule::Schedule;

/// Probe RMSE between the empirical optimum and the analytic oracle over a
/// grid of steps and training-set sizes.
pub struct Converge;

fn pair(
    mode: &str,
    sched: &Schedule,
    spec: &TargetSpec,
    data: Arc<Dataset>,
) -> Result<(Box<dyn Predictor>, Box<dyn Predictor>)> {
    let oracle = OracleEps::new(sched.clone(), spec)?;
    Ok(match mode {
        "eps" => (
            Box::new(EpsEmpirical::new(sched.clone(), data)?),
            Box::new(oracle),
        ),
        "xi" => (
            Box::new(XiEmpirical::new(
                sched.clone(),
                data,
                SGrid::point_mass(sched.steps(), 0, 0),
            )?),
            Box::new(XiFromEps::new(oracle)?),
        ),
        other => return Err(Error::config(format!("predictor must be eps or xi, got `{other}`"))),
    })
}

/// Steps `K/4, K/2, 3K/4`, at least 1.
pub(crate) fn eval_steps(k: usize) -> [usize; 3] {
    [(k / 4).max(1), (k / 2).max(1), (3 * k / 4).max(1)]
}

impl Experiment for Converge {
    fn kind(&self) -> &'static str {
        "converge"
    }

    fn keys(&self) -> &'static [(&'static str, Option<&'static str>)] {
        &[
            ("steps", Some("full")),
            ("target", Some("gaussian:dim=2;sigma=1")),
            ("ns", Some("100,1000,10000")),
            ("replicates", Some("3")),
            ("probes", Some("256")),
            ("predictor", Some("eps")),
            ("max-rmse", Some("0.1")),
        ]
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricsReport> {
        let seed = cfg.seed()?;
        let sched = schedule(cfg)?;
        let spec = target(cfg)?;
        OracleEps::new(sched.clone(), &spec)?;
        let ns: Vec<usize> = cfg.list("ns")?;
        let replicates: usize = cfg.parse("replicates")?;
        let probes: usize = cfg.parse("probes")?;
        let mode = cfg.str("predictor")?;
        let max_rmse: f64 = cfg.parse("max-rmse")?;
        if ns.is_empty() || replicates == 0 || probes == 0 {
            return Err(Error::config("ns, replicates and probes must be nonempty"));
        }
        let cloud = match &spec {
            TargetSpec::PointCloud { points } => Some(Arc::new(Dataset::new(points.clone())?)),
            _ => None,
        };

        let mut r = MetricsReport::new("converge");
        let mut all = Table::new(&["t", "timestep", "n", "replicate", "rmse"]);
        let mut grid = Table::new(&["t", "timestep", "n", "median_rmse"]);
        let mut finite = true;
        let mut worst = 0.0f64;
        let steps = eval_steps(sched.steps());
        for &t in &steps {
            let probe_set =
                probes_from_target(&spec, &sched, t, probes, rng::derive(seed, &[rng::tag::PROBE, t as u64]))?;
            let mut medians = Vec::with_capacity(ns.len());
            for &n in &ns {
                let mut values = Vec::with_capacity(replicates);
                for rep in 0..replicates {
                    let data = match &cloud {
                        Some(c) => c.clone(),
                        None => Arc::new(sample_dataset(
                            &spec,
                            n,
                            rng::derive(seed, &[rng::tag::DATA, n as u64, rep as u64]),
                        )?),
                    };
                    let (emp, oracle) = pair(mode, &sched, &spec, data)?;
                    let v = predictor_rmse(emp.as_ref(), oracle.as_ref(), &probe_set, t)?;
                    finite &= v.is_finite();
                    worst = worst.max(v);
                    all.push(vec![
                        t.to_string(),
                        sched.timestep(t)?.to_string(),
                        n.to_string(),
                        rep.to_string(),
                        format!("{v:?}"),
                    ]);
                    values.push(v);
                }
                let m = median(&values);
                grid.push(vec![
                    t.to_string(),
                    sched.timestep(t)?.to_string(),
                    n.to_string(),
                    format!("{m:?}"),
                ]);
                r.scalar(&format!("median.t{t}.n{n}"), m);
                medians.push((n, m));
            }
            if cloud.is_none() {
                let monotone = medians.windows(2).all(|w| w[1].1 < w[0].1);
                r.check(
                    &format!("monotone_t{t}"),
                    monotone,
                    format!("medians by n: {medians:?}"),
                );
            }
            r.series.insert(format!("median_t{t}"), medians);
        }
        r.check("finite", finite, "every RMSE is finite");
        if cloud.is_some() {
            r.check(
                "exact_identity",
                worst < 1e-10,
                format!("largest RMSE against the point-cloud oracle: {worst:e}"),
            );
        } else {
            let mid = steps[1];
            let n_max = *ns.iter().max().expect("ns nonempty");
            let v = r.get(&format!("median.t{mid}.n{n_max}")).unwrap_or(f64::NAN);
            r.check(
                "largest_n_below_threshold",
                v < max_rmse,
                format!("median RMSE at t={mid}, n={n_max}: {v} (threshold {max_rmse})"),
            );
        }
        r.tables.insert("rmse".into(), all);
        r.tables.insert("rmse_median".into(), grid);
        Ok(r)
    }
}
