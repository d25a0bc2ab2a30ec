use super::{schedule, target, training_set, Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::metrics::{trajectory_divergence, MetricsReport};
use crate::predictors::{EpsEmpirical, EpsFromXi, OracleEps, Predictor, SGrid, XiEmpirical};
use crate::rng;
use crate::samplers::{self, generate, Start};

/// Runs the same starts through the analytic oracle, the empirical optimum
/// ε* and the previous-status optimum ξ*, and tracks how far the paths
/// drift apart step by step.
///
/// The oracle stands in for a trained network: it is the function a network
/// would converge to with unlimited data, so the oracle-vs-ε* gap isolates
/// the effect of the finite training set.
pub struct TrajectoryCompare;

pub(crate) const REFERENCE_NOTE: &str =
    "reference predictor is the analytic oracle, substituted for a trained network";

impl Experiment for TrajectoryCompare {
    fn kind(&self) -> &'static str {
        "trajectory-compare"
    }

    fn keys(&self) -> &'static [(&'static str, Option<&'static str>)] {
        &[
            ("steps", Some("50")),
            ("target", Some("gaussian:dim=2;sigma=1")),
            ("dataset", None),
            ("n", Some("10000")),
            ("count", Some("256")),
            ("sampler", Some("ddim")),
            ("grid", Some("sampled")),
            ("grid-size", Some("8")),
            ("min-nondecreasing", Some("0.8")),
        ]
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricsReport> {
        let seed = cfg.seed()?;
        let sched = schedule(cfg)?;
        let spec = target(cfg)?;
        let count: usize = cfg.parse("count")?;
        let min_frac: f64 = cfg.parse("min-nondecreasing")?;
        let data = training_set(cfg, "dataset", cfg.parse("n")?, rng::derive(seed, &[rng::tag::DATA]))?;
        let grid = match cfg.str("grid")? {
            "zero" => SGrid::point_mass(sched.steps(), 0, 0),
            "sampled" => SGrid::sampled(
                sched.steps(),
                cfg.parse("grid-size")?,
                rng::derive(seed, &[rng::tag::GRID]),
            )?,
            other => return Err(Error::config(format!("grid must be zero or sampled, got `{other}`"))),
        };
        let sampler = samplers::by_name(cfg.str("sampler")?)?;

        let oracle = OracleEps::new(sched.clone(), &spec)?;
        let eps = EpsEmpirical::new(sched.clone(), data.clone())?;
        let xi = EpsFromXi::new(XiEmpirical::new(sched.clone(), data, grid)?)?;
        let preds: [(&str, &dyn Predictor); 3] = [("oracle", &oracle), ("eps", &eps), ("xi", &xi)];
        let runs = preds
            .iter()
            .map(|(name, p)| Ok((*name, generate(&sched, *p, sampler.as_ref(), count, &Start::Noise, seed)?)))
            .collect::<Result<Vec<_>>>()?;

        let mut r = MetricsReport::new("trajectory-compare");
        r.meta("note", REFERENCE_NOTE);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let div = trajectory_divergence(&runs[i].1, &runs[j].1)?;
            let key = format!("{}_vs_{}", runs[i].0, runs[j].0);
            if (i, j) == (0, 1) {
                let frac = div.get("nondecreasing_fraction").unwrap_or(f64::NAN);
                r.check(
                    "oracle_vs_eps_accumulates",
                    frac >= min_frac,
                    format!("nondecreasing fraction {frac} (need >= {min_frac})"),
                );
            }
            r.absorb(&key, div);
        }
        Ok(r)
    }
}
