use super::{schedule, Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::metrics::{gaussian_example_errors, gaussian_example_simulate, mi_upper_bound, MetricsReport, Table};
use crate::schedule::Schedule;

pub struct MiBoundRun;

impl Experiment for MiBoundRun {
    fn kind(&self) -> &'static str {
        "mi-bound"
    }

    fn keys(&self) -> &'static [(&'static str, Option<&'static str>)] {
        &[
            ("steps", Some("full")),
            ("radius", Some("1")),
            ("sweep-beta-start", Some("0.0001,0.001,0.01")),
        ]
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricsReport> {
        let sched = schedule(cfg)?;
        let radius: f64 = cfg.parse("radius")?;
        let bound = mi_upper_bound(&sched, radius)?;
        let doubled = mi_upper_bound(&sched, 2.0 * radius)?;

        let mut r = MetricsReport::new("mi-bound");
        r.scalar("bound", bound.value);
        r.scalar("radius", radius);
        r.scalar("beta1", sched.beta(1)?);
        r.scalar("first_term", bound.terms[0]);
        r.scalar("bound_at_double_radius", doubled.value);
        r.series
            .insert("terms".into(), bound.terms.iter().copied().enumerate().map(|(i, v)| (i + 1, v)).collect());
        r.check(
            "finite",
            bound.value.is_finite(),
            format!("bound = {}", bound.value),
        );
        r.check(
            "radius_homogeneity",
            doubled.value == 4.0 * bound.value,
            format!("value(2R) = {}, 4 value(R) = {}", doubled.value, 4.0 * bound.value),
        );

        let mut sweep = Table::new(&["beta_start", "beta1", "bound"]);
        let steps = sched.steps();
        for b in cfg.list::<f64>("sweep-beta-start")? {
            let full = Schedule::linear(cfg.parse("T")?, b, cfg.parse("beta-end")?)?;
            let s = if steps == full.steps() { full } else { full.subsequence(steps)? };
            let v = mi_upper_bound(&s, radius)?.value;
            sweep.push(vec![format!("{b:?}"), format!("{:?}", s.beta(1)?), format!("{v:?}")]);
        }
        r.tables.insert("beta_start_sweep".into(), sweep);
        Ok(r)
    }
}

pub struct GaussianExample;

fn parse_cases(raw: &str) -> Result<Vec<(usize, usize)>> {
    raw.split(',')
        .map(|item| {
            let (d, n) = item
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::config(format!("case `{item}` is not `d:n`")))?;
            let p = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::config(format!("case `{item}`: {e}")))
            };
            Ok((p(d)?, p(n)?))
        })
        .collect()
}

impl Experiment for GaussianExample {
    fn kind(&self) -> &'static str {
        "gaussian-example"
    }

    fn keys(&self) -> &'static [(&'static str, Option<&'static str>)] {
        &[("cases", Some("1:1,2:100,5:1000")), ("trials", Some("10000"))]
    }

    fn run(&self, cfg: &ExperimentConfig) -> Result<MetricsReport> {
        let seed = cfg.seed()?;
        let trials: usize = cfg.parse("trials")?;
        let mut r = MetricsReport::new("gaussian-example");
        let mut table = Table::new(&[
            "d",
            "n",
            "optimization",
            "generalization_bound",
            "estimate",
            "standard_error",
            "z",
        ]);
        for (k, (d, n)) in parse_cases(cfg.str("cases")?)?.into_iter().enumerate() {
            let (opt, gen) = gaussian_example_errors(d, n)?;
            let sim = gaussian_example_simulate(d, n, trials, seed.wrapping_add(k as u64))?;
            table.push(vec![
                d.to_string(),
                n.to_string(),
                format!("{opt:?}"),
                format!("{gen:?}"),
                format!("{:?}", sim.get("estimate").unwrap_or(f64::NAN)),
                format!("{:?}", sim.get("standard_error").unwrap_or(f64::NAN)),
                format!("{:?}", sim.get("z").unwrap_or(f64::NAN)),
            ]);
            r.absorb(&format!("d{d}_n{n}"), sim);
        }
        r.tables.insert("cases".into(), table);
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases_parse() {
        assert_eq!(parse_cases("1:1, 2:100").unwrap(), vec![(1, 1), (2, 100)]);
        assert!(parse_cases("2x100").is_err());
    }
}
