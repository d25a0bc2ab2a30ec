//! Forward (noising) process.
//!
//! `x_t = √ᾱ_t x_0 + √(1−ᾱ_t) ε` and, between two steps,
//! `x_t = √r(t,s) x_s + √(1−r(t,s)) ξ`.

use crate::error::{Error, Result};
use crate::rng;
use crate::schedule::Schedule;

/// A noised state together with the standard Gaussian draw that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePair {
    pub x_t: Vec<f64>,
    pub eps: Vec<f64>,
}

/// `√r x + √(1−r) eps` with `r = r(t, s)`.
pub fn combine(
    sched: &Schedule,
    x: &[f64],
    t: usize,
    s: usize,
    eps: &[f64],
) -> Result<Vec<f64>> {
    if x.len() != eps.len() {
        return Err(Error::arg("state and noise differ in dimension"));
    }
    let a = sched.ratio(t, s)?.sqrt();
    let b = sched.one_minus_ratio(t, s)?.sqrt();
    Ok(x.iter().zip(eps).map(|(x, e)| a * x + b * e).collect())
}

/// Samples `x_t | x_0`. The Gaussian draw comes from the stream `(seed, NOISE)`.
pub fn noise_to(sched: &Schedule, x0: &[f64], t: usize, seed: u64) -> Result<NoisePair> {
    if t == 0 || t > sched.steps() {
        return Err(Error::arg(format!(
            "noising step {t} outside 1..={}",
            sched.steps()
        )));
    }
    let eps = rng::gaussian_vec(&mut rng::stream(seed, &[rng::tag::NOISE]), x0.len());
    let x_t = combine(sched, x0, t, 0, &eps)?;
    Ok(NoisePair { x_t, eps })
}

/// Samples `x_t | x_s` for `s < t`. With `s = 0` this reproduces
/// [`noise_to`] bit for bit.
pub fn noise_between(
    sched: &Schedule,
    x_s: &[f64],
    t: usize,
    s: usize,
    seed: u64,
) -> Result<NoisePair> {
    if s >= t {
        return Err(Error::arg(format!("noise_between needs s < t, got s={s}, t={t}")));
    }
    if t > sched.steps() {
        return Err(Error::arg(format!(
            "noising step {t} outside 1..={}",
            sched.steps()
        )));
    }
    let eps = rng::gaussian_vec(&mut rng::stream(seed, &[rng::tag::NOISE]), x_s.len());
    let x_t = combine(sched, x_s, t, s, &eps)?;
    Ok(NoisePair { x_t, eps })
}
