//! Memorization and generalization measurements plus closed-form bounds.

mod report;

pub use report::{svg_polyline, Check, MetricsReport, Table};

use rayon::prelude::*;

use crate::datasets::{Dataset, TargetSpec};
use crate::error::{Error, Result};
use crate::forward;
use crate::matrix::Matrix;
use crate::numeric::{median, quantile, sq_dist};
use crate::predictors::Predictor;
use crate::rng;
use crate::samplers::Trajectory;
use crate::schedule::Schedule;

/// Distance from each sample to its nearest training point, by exhaustive
/// search.
pub fn nn_distances(samples: &Matrix, data: &Dataset) -> Result<Vec<f64>> {
    if samples.cols() != data.dim() {
        return Err(Error::arg(format!(
            "samples have dimension {}, training set {}",
            samples.cols(),
            data.dim()
        )));
    }
    Ok((0..samples.rows())
        .into_par_iter()
        .map(|i| {
            let x = samples.row(i);
            data.points()
                .iter_rows()
                .map(|p| sq_dist(x, p))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect())
}

/// Nearest-neighbour audit. A sample counts as memorized when its distance
/// is `≤ tau`.
///
/// Scalars: `median`, `mean`, `q10`, `q90`, `max`, `tau`, `memorized_fraction`.
/// Series: `nn_distance` (one entry per sample).
pub fn nn_audit(samples: &Matrix, data: &Dataset, tau: f64) -> Result<MetricsReport> {
    if !(tau > 0.0) {
        return Err(Error::arg(format!("tau must be positive, got {tau}")));
    }
    if samples.rows() == 0 {
        return Err(Error::arg("no samples to audit"));
    }
    let dist = nn_distances(samples, data)?;
    let n = dist.len() as f64;
    let mut r = MetricsReport::new("nn-audit");
    r.scalar("tau", tau);
    r.scalar("median", median(&dist));
    r.scalar("mean", dist.iter().sum::<f64>() / n);
    r.scalar("q10", quantile(&dist, 0.1));
    r.scalar("q90", quantile(&dist, 0.9));
    r.scalar("max", dist.iter().copied().fold(0.0, f64::max));
    r.scalar(
        "memorized_fraction",
        dist.iter().filter(|&&v| v <= tau).count() as f64 / n,
    );
    r.series
        .insert("nn_distance".into(), dist.into_iter().enumerate().collect());
    Ok(r)
}

/// Per-step `mean_i ‖x_t^{a,i} − x_t^{b,i}‖² / d`, indexed by step and
/// ordered from the start step down to 0 (series `divergence`).
///
/// Scalars: `final`, `max`, `nondecreasing_fraction` (share of adjacent
/// pairs, in reverse time, where the divergence does not drop).
pub fn trajectory_divergence(a: &[Trajectory], b: &[Trajectory]) -> Result<MetricsReport> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::arg(format!(
            "need equally many trajectories, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let steps: Vec<usize> = a[0].states.iter().map(|(t, _)| *t).collect();
    let d = a[0].states[0].1.len() as f64;
    for (ta, tb) in a.iter().zip(b) {
        let grid_a = ta.states.iter().map(|(t, _)| *t);
        let grid_b = tb.states.iter().map(|(t, _)| *t);
        if !grid_a.eq(steps.iter().copied()) || !grid_b.eq(steps.iter().copied()) {
            return Err(Error::arg("trajectories do not share a step grid"));
        }
        if ta.states[0].1 != tb.states[0].1 {
            return Err(Error::arg(format!(
                "trajectory pair {} does not share its start state",
                ta.index
            )));
        }
    }
    let count = a.len() as f64;
    let series: Vec<(usize, f64)> = steps
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let total: f64 = a
                .iter()
                .zip(b)
                .map(|(ta, tb)| sq_dist(&ta.states[k].1, &tb.states[k].1) / d)
                .sum();
            (t, total / count)
        })
        .collect();
    let pairs = series.len().saturating_sub(1);
    let rising = series.windows(2).filter(|w| w[1].1 >= w[0].1).count();
    let mut r = MetricsReport::new("trajectory-divergence");
    r.scalar("final", series.last().map_or(0.0, |p| p.1));
    r.scalar("max", series.iter().map(|p| p.1).fold(0.0, f64::max));
    r.scalar(
        "nondecreasing_fraction",
        if pairs == 0 { 1.0 } else { rising as f64 / pairs as f64 },
    );
    r.series.insert("divergence".into(), series);
    Ok(r)
}

/// Closed-form upper bound on `I(x_0; S)` for the stochastic sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct MiBound {
    pub value: f64,
    /// `terms[0]` is the `t = 1` term, `terms[t−1]` the term for step `t`.
    pub terms: Vec<f64>,
}

/// `(1−β_1) R² / (2β_1²) + Σ_{t=2}^{T} ᾱ_t R² / (2(1−ᾱ_{t−1})²)`.
pub fn mi_upper_bound(sched: &Schedule, radius: f64) -> Result<MiBound> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::arg(format!("radius must be finite and >= 0, got {radius}")));
    }
    let r2 = radius * radius;
    let b1 = sched.beta(1)?;
    let mut terms = Vec::with_capacity(sched.steps());
    terms.push((1.0 - b1) / (2.0 * b1 * b1) * r2);
    for t in 2..=sched.steps() {
        let c = sched.one_minus_alpha_bar(t - 1)?;
        terms.push(sched.alpha_bar(t)? / (2.0 * c * c) * r2);
    }
    Ok(MiBound {
        value: terms.iter().sum(),
        terms,
    })
}

/// `(d/n, (d/2) ln(1 + 1/n))`: the optimization error and the
/// generalization bound of the sample-mean estimator for `N(μ, I_d)`.
pub fn gaussian_example_errors(d: usize, n: usize) -> Result<(f64, f64)> {
    if d == 0 || n == 0 {
        return Err(Error::arg("d and n must be at least 1"));
    }
    let (d, n) = (d as f64, n as f64);
    Ok((d / n, 0.5 * d * (1.0 / n).ln_1p()))
}

/// Monte Carlo estimate of `E‖μ̂ − μ‖²` for the sample mean of `n` draws
/// from `N(0, I_d)`. Trial `k` uses the stream `(seed, TRIAL, k)`.
///
/// Scalars: `estimate`, `standard_error`, `expected` (= d/n), `z`.
/// Check `within_5_se`.
pub fn gaussian_example_simulate(
    d: usize,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<MetricsReport> {
    if trials < 100 {
        return Err(Error::arg(format!("need at least 100 trials, got {trials}")));
    }
    let (expected, bound) = gaussian_example_errors(d, n)?;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut r = rng::stream(seed, &[rng::tag::TRIAL, k as u64]);
            let mut mean = vec![0.0; d];
            for _ in 0..n {
                for m in mean.iter_mut() {
                    *m += rng::gaussian(&mut r);
                }
            }
            mean.iter().map(|m| (m / n as f64).powi(2)).sum::<f64>()
        })
        .collect();
    let count = trials as f64;
    let estimate = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - estimate).powi(2)).sum::<f64>() / (count - 1.0);
    let se = (var / count).sqrt();
    let z = (estimate - expected) / se;
    let mut r = MetricsReport::new("gaussian-example");
    r.scalar("estimate", estimate);
    r.scalar("standard_error", se);
    r.scalar("expected", expected);
    r.scalar("generalization_bound", bound);
    r.scalar("z", z);
    r.check(
        "within_5_se",
        z.abs() <= 5.0,
        format!("d={d} n={n} estimate={estimate} expected={expected} se={se}"),
    );
    Ok(r)
}

/// `√(mean_i ‖a(x_i,t) − b(x_i,t)‖² / d)` over the probe rows.
pub fn predictor_rmse(a: &dyn Predictor, b: &dyn Predictor, probes: &Matrix, t: usize) -> Result<f64> {
    if probes.rows() == 0 {
        return Err(Error::arg("empty probe set"));
    }
    let total = (0..probes.rows())
        .into_par_iter()
        .map(|i| {
            let x = probes.row(i);
            Ok(sq_dist(&a.predict(x, t)?, &b.predict(x, t)?))
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>();
    Ok((total / (probes.rows() * probes.cols()) as f64).sqrt())
}

/// `count` probes from the true noised marginal `P_t`: fresh target draws
/// pushed through the forward process. Probe `i` uses streams keyed by
/// `(seed, PROBE, i)`.
pub fn probes_from_target(
    spec: &TargetSpec,
    sched: &Schedule,
    t: usize,
    count: usize,
    seed: u64,
) -> Result<Matrix> {
    spec.validate()?;
    let d = spec.dim();
    let mut data = Vec::with_capacity(count * d);
    for i in 0..count {
        let key = rng::derive(seed, &[rng::tag::PROBE, i as u64]);
        let x0 = spec.draw(&mut rng::stream(key, &[]));
        data.extend(forward::noise_to(sched, &x0, t, key)?.x_t);
    }
    Ok(Matrix::new(count, d, data))
}
