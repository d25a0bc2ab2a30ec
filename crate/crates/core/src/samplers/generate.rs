use std::sync::Arc;

use rayon::prelude::*;

use super::Sampler;
use crate::error::{Error, Result};
use crate::forward;
use crate::matrix::Matrix;
use crate::predictors::{Predictor, PredictorKind};
use crate::rng;
use crate::schedule::Schedule;

/// How a batch of reverse chains is initialized.
#[derive(Debug, Clone)]
pub enum Start {
    /// `x_T ~ N(0, I)`.
    Noise,
    /// Trajectory `i` starts from `noise_to(sources[i mod m], s)` and
    /// reverses from `s`.
    Partial { sources: Arc<Matrix>, s: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartRecord {
    PureNoise,
    Partial { s: usize, source: usize },
}

/// One reverse chain, states ordered from the start step down to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub index: usize,
    pub seed: u64,
    pub method: &'static str,
    pub predictor: PredictorKind,
    pub start: StartRecord,
    pub states: Vec<(usize, Vec<f64>)>,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        &self.states.last().expect("trajectory has a start state").1
    }

    pub fn state_at(&self, t: usize) -> Option<&[f64]> {
        self.states
            .iter()
            .find(|(s, _)| *s == t)
            .map(|(_, x)| x.as_slice())
    }
}

fn step_seed(seed: u64, index: usize, t: usize) -> u64 {
    rng::derive(seed, &[rng::tag::STEP, index as u64, t as u64])
}

fn check_pairing(sched: &Schedule, pred: &dyn Predictor, sampler: &dyn Sampler) -> Result<()> {
    if pred.parameterization() != sampler.accepts() {
        return Err(Error::config(format!(
            "sampler `{}` cannot use predictor `{}`",
            sampler.name(),
            pred.kind()
        )));
    }
    if pred.schedule().alpha_bars() != sched.alpha_bars() {
        return Err(Error::config(
            "predictor was built for a different schedule than the sampler",
        ));
    }
    Ok(())
}

fn initial(
    sched: &Schedule,
    dim: usize,
    start: &Start,
    index: usize,
    seed: u64,
) -> Result<(usize, Vec<f64>, StartRecord)> {
    match start {
        Start::Noise => {
            let mut r = rng::stream(seed, &[rng::tag::START, index as u64]);
            Ok((sched.steps(), rng::gaussian_vec(&mut r, dim), StartRecord::PureNoise))
        }
        Start::Partial { sources, s } => {
            if sources.rows() == 0 || sources.cols() != dim {
                return Err(Error::arg("partial-start sources do not match the predictor"));
            }
            let source = index % sources.rows();
            let noise_seed = rng::derive(seed, &[rng::tag::PARTIAL, index as u64]);
            let x = forward::noise_to(sched, sources.row(source), *s, noise_seed)?.x_t;
            Ok((*s, x, StartRecord::Partial { s: *s, source }))
        }
    }
}

fn run_chain(
    sched: &Schedule,
    pred: &dyn Predictor,
    sampler: &dyn Sampler,
    start: &Start,
    index: usize,
    seed: u64,
    keep_all: bool,
) -> Result<(StartRecord, Vec<(usize, Vec<f64>)>)> {
    let (from, mut x, record) = initial(sched, pred.dim(), start, index, seed)?;
    let mut states = Vec::with_capacity(if keep_all { from + 1 } else { 1 });
    if keep_all {
        states.push((from, x.clone()));
    }
    for t in (1..=from).rev() {
        x = sampler.step(sched, pred, &x, t, step_seed(seed, index, t))?;
        if keep_all {
            states.push((t - 1, x.clone()));
        }
    }
    if !keep_all {
        states.push((0, x));
    }
    Ok((record, states))
}

/// Runs `count` independent reverse chains in parallel. Chain `i` reads only
/// streams keyed by `(seed, i)`, so the output does not depend on the thread
/// pool.
pub fn generate(
    sched: &Schedule,
    pred: &dyn Predictor,
    sampler: &dyn Sampler,
    count: usize,
    start: &Start,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    check_pairing(sched, pred, sampler)?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let (record, states) = run_chain(sched, pred, sampler, start, i, seed, true)?;
            Ok(Trajectory {
                index: i,
                seed,
                method: sampler.name(),
                predictor: pred.kind(),
                start: record,
                states,
            })
        })
        .collect()
}

/// Same chains as [`generate`] but keeps only the final `x_0` of each, as
/// rows of a matrix.
pub fn generate_endpoints(
    sched: &Schedule,
    pred: &dyn Predictor,
    sampler: &dyn Sampler,
    count: usize,
    start: &Start,
    seed: u64,
) -> Result<Matrix> {
    check_pairing(sched, pred, sampler)?;
    let finals: Vec<Vec<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let (_, mut states) = run_chain(sched, pred, sampler, start, i, seed, false)?;
            Ok(states.pop().expect("one final state").1)
        })
        .collect::<Result<_>>()?;
    Ok(Matrix::new(count, pred.dim(), finals.concat()))
}

/// Re-executes `traj` from its recorded seed and reports whether every state
/// is reproduced bit for bit.
pub fn replay(
    traj: &Trajectory,
    sched: &Schedule,
    pred: &dyn Predictor,
    sampler: &dyn Sampler,
    start: &Start,
) -> Result<bool> {
    check_pairing(sched, pred, sampler)?;
    if sampler.name() != traj.method || pred.kind() != traj.predictor {
        return Ok(false);
    }
    let (record, states) = run_chain(sched, pred, sampler, start, traj.index, traj.seed, true)?;
    Ok(record == traj.start && states == traj.states)
}
