use std::sync::Arc;

use super::{check_eval, Parameterization, Predictor, PredictorKind};
use crate::datasets::Dataset;
use crate::error::Result;
use crate::numeric::{softmax_in_place, sq_dist_scaled};
use crate::schedule::Schedule;

/// Exact minimizer of the empirical noise-prediction objective:
///
/// `ε*(x,t) = (x − √ᾱ_t Σ_i w_i x_0^i) / √(1−ᾱ_t)`,
/// `w = softmax(−‖x − √ᾱ_t x_0^i‖² / (2(1−ᾱ_t)))`.
#[derive(Debug, Clone)]
pub struct EpsEmpirical {
    sched: Schedule,
    data: Arc<Dataset>,
}

impl EpsEmpirical {
    pub fn new(sched: Schedule, data: Arc<Dataset>) -> Result<Self> {
        Ok(Self { sched, data })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Softmax weights over the training points.
    pub fn weights(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let (a, c) = check_eval(&self.sched, self.data.dim(), x, t)?;
        Ok(self.weights_unchecked(x, a.sqrt(), c))
    }

    fn weights_unchecked(&self, x: &[f64], root_a: f64, c: f64) -> Vec<f64> {
        let mut logits: Vec<f64> = self
            .data
            .points()
            .iter_rows()
            .map(|p| -sq_dist_scaled(x, root_a, p) / (2.0 * c))
            .collect();
        softmax_in_place(&mut logits);
        logits
    }

    /// `Ê[x_0 | x_t = x] = Σ_i w_i x_0^i`.
    pub fn posterior_mean(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let (a, c) = check_eval(&self.sched, self.data.dim(), x, t)?;
        Ok(self.posterior_mean_unchecked(x, a.sqrt(), c))
    }

    fn posterior_mean_unchecked(&self, x: &[f64], root_a: f64, c: f64) -> Vec<f64> {
        let w = self.weights_unchecked(x, root_a, c);
        let mut mean = vec![0.0; x.len()];
        for (wi, p) in w.iter().zip(self.data.points().iter_rows()) {
            if *wi == 0.0 {
                continue;
            }
            for (m, v) in mean.iter_mut().zip(p) {
                *m += wi * v;
            }
        }
        mean
    }
}

impl Predictor for EpsEmpirical {
    fn kind(&self) -> PredictorKind {
        PredictorKind::EpsEmpirical
    }

    fn parameterization(&self) -> Parameterization {
        Parameterization::Eps
    }

    fn schedule(&self) -> &Schedule {
        &self.sched
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn predict(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let (a, c) = check_eval(&self.sched, self.data.dim(), x, t)?;
        let root_a = a.sqrt();
        let root_c = c.sqrt();
        let mean = self.posterior_mean_unchecked(x, root_a, c);
        Ok(x.iter()
            .zip(&mean)
            .map(|(xv, m)| (xv - root_a * m) / root_c)
            .collect())
    }
}

/// `Ê[x_0 | x_t = x]` implied by the empirical optimum.
pub fn posterior_mean_estimate(
    sched: &Schedule,
    data: &Arc<Dataset>,
    x: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    EpsEmpirical::new(sched.clone(), data.clone())?.posterior_mean(x, t)
}
