//! Reverse-process samplers.
//!
//! All three update rules stop at `t = 1` with the mean only (`β̃_1 = 0`
//! anyway since `ᾱ_0 = 1`). Stochastic rules add `√β̃_t · ξ` with `ξ` drawn
//! from the stream `(seed, STEP)`.

mod generate;

pub use generate::{generate, generate_endpoints, replay, Start, StartRecord, Trajectory};

use crate::error::{Error, Result};
use crate::predictors::{Parameterization, Predictor};
use crate::rng;
use crate::schedule::Schedule;

pub trait Sampler: Send + Sync {
    fn name(&self) -> &'static str;

    /// Parameterization the update rule consumes.
    fn accepts(&self) -> Parameterization;

    /// `x_t → x_{t−1}`. Deterministic rules ignore `seed`.
    fn step(
        &self,
        sched: &Schedule,
        pred: &dyn Predictor,
        x: &[f64],
        t: usize,
        seed: u64,
    ) -> Result<Vec<f64>>;
}

fn check_step(sched: &Schedule, t: usize) -> Result<()> {
    if t == 0 || t > sched.steps() {
        return Err(Error::arg(format!(
            "reverse step {t} outside 1..={}",
            sched.steps()
        )));
    }
    Ok(())
}

fn check_kind(pred: &dyn Predictor, want: Parameterization, method: &str) -> Result<()> {
    if pred.parameterization() != want {
        return Err(Error::config(format!(
            "{method} needs a {want:?} predictor, got `{}` ({:?})",
            pred.kind(),
            pred.parameterization()
        )));
    }
    Ok(())
}

fn add_noise(sched: &Schedule, mut mean: Vec<f64>, t: usize, seed: u64) -> Result<Vec<f64>> {
    if t >= 2 {
        let sd = sched.tilde_beta(t)?.sqrt();
        let mut r = rng::stream(seed, &[rng::tag::STEP]);
        for m in mean.iter_mut() {
            *m += sd * rng::gaussian(&mut r);
        }
    }
    Ok(mean)
}

/// `μ_θ(x_t, t) = (x_t − β_t/√(1−ᾱ_t) · ε(x_t, t)) / √α_t`.
pub fn ddpm_mean(sched: &Schedule, pred: &dyn Predictor, x: &[f64], t: usize) -> Result<Vec<f64>> {
    check_step(sched, t)?;
    check_kind(pred, Parameterization::Eps, "ddpm")?;
    let eps = pred.predict(x, t)?;
    let beta = sched.beta(t)?;
    let root_alpha = sched.alpha(t)?.sqrt();
    let coef = beta / sched.one_minus_alpha_bar(t)?.sqrt();
    Ok(x.iter()
        .zip(&eps)
        .map(|(xv, e)| (xv - coef * e) / root_alpha)
        .collect())
}

/// Ancestral DDPM step with standard deviation `√β̃_t`.
pub fn ddpm_step(
    sched: &Schedule,
    pred: &dyn Predictor,
    x: &[f64],
    t: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mean = ddpm_mean(sched, pred, x, t)?;
    add_noise(sched, mean, t, seed)
}

/// Deterministic DDIM step:
/// `x_{t−1} = √ᾱ_{t−1} (x_t − √(1−ᾱ_t) ε)/√ᾱ_t + √(1−ᾱ_{t−1}) ε`.
pub fn ddim_step(sched: &Schedule, pred: &dyn Predictor, x: &[f64], t: usize) -> Result<Vec<f64>> {
    check_step(sched, t)?;
    check_kind(pred, Parameterization::Eps, "ddim")?;
    let eps = pred.predict(x, t)?;
    let root_a = sched.alpha_bar(t)?.sqrt();
    let root_c = sched.one_minus_alpha_bar(t)?.sqrt();
    let root_a_prev = sched.alpha_bar(t - 1)?.sqrt();
    let root_c_prev = sched.one_minus_alpha_bar(t - 1)?.sqrt();
    Ok(x.iter()
        .zip(&eps)
        .map(|(xv, e)| root_a_prev * (xv - root_c * e) / root_a + root_c_prev * e)
        .collect())
}

/// `E[x_{t−1} | x_t] ≈ x_t/√r − ((1−r)/√r) ξ(x_t, t)` with `r = r(t, t−1)`.
pub fn prev_status_mean(
    sched: &Schedule,
    pred: &dyn Predictor,
    x: &[f64],
    t: usize,
) -> Result<Vec<f64>> {
    check_step(sched, t)?;
    check_kind(pred, Parameterization::Xi, "prev-status")?;
    let xi = pred.predict(x, t)?;
    let root_r = sched.ratio(t, t - 1)?.sqrt();
    let c = sched.one_minus_ratio(t, t - 1)?;
    Ok(x.iter()
        .zip(&xi)
        .map(|(xv, v)| (xv - c * v) / root_r)
        .collect())
}

pub fn prev_status_step(
    sched: &Schedule,
    pred: &dyn Predictor,
    x: &[f64],
    t: usize,
    stochastic: bool,
    seed: u64,
) -> Result<Vec<f64>> {
    let mean = prev_status_mean(sched, pred, x, t)?;
    if stochastic {
        add_noise(sched, mean, t, seed)
    } else {
        Ok(mean)
    }
}

pub struct Ddpm;

impl Sampler for Ddpm {
    fn name(&self) -> &'static str {
        "ddpm"
    }
    fn accepts(&self) -> Parameterization {
        Parameterization::Eps
    }
    fn step(&self, sched: &Schedule, pred: &dyn Predictor, x: &[f64], t: usize, seed: u64) -> Result<Vec<f64>> {
        ddpm_step(sched, pred, x, t, seed)
    }
}

pub struct Ddim;

impl Sampler for Ddim {
    fn name(&self) -> &'static str {
        "ddim"
    }
    fn accepts(&self) -> Parameterization {
        Parameterization::Eps
    }
    fn step(&self, sched: &Schedule, pred: &dyn Predictor, x: &[f64], t: usize, _seed: u64) -> Result<Vec<f64>> {
        ddim_step(sched, pred, x, t)
    }
}

pub struct PrevStatus {
    pub stochastic: bool,
}

impl Sampler for PrevStatus {
    fn name(&self) -> &'static str {
        if self.stochastic {
            "prev-status"
        } else {
            "prev-status-mean"
        }
    }
    fn accepts(&self) -> Parameterization {
        Parameterization::Xi
    }
    fn step(&self, sched: &Schedule, pred: &dyn Predictor, x: &[f64], t: usize, seed: u64) -> Result<Vec<f64>> {
        prev_status_step(sched, pred, x, t, self.stochastic, seed)
    }
}

pub const SAMPLER_NAMES: [&str; 4] = ["ddpm", "ddim", "prev-status", "prev-status-mean"];

pub fn by_name(name: &str) -> Result<Box<dyn Sampler>> {
    Ok(match name {
        "ddpm" => Box::new(Ddpm),
        "ddim" => Box::new(Ddim),
        "prev-status" => Box::new(PrevStatus { stochastic: true }),
        "prev-status-mean" => Box::new(PrevStatus { stochastic: false }),
        other => {
            return Err(Error::config(format!(
                "unknown sampler `{other}` (known: {})",
                SAMPLER_NAMES.join(", ")
            )))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{Dataset, TargetSpec};
    use crate::predictors::{EpsEmpirical, OracleEps, SGrid, XiEmpirical};
    use crate::schedule::Schedule;
    use std::sync::Arc;

    struct Zero(Schedule, Parameterization);

    impl Predictor for Zero {
        fn kind(&self) -> crate::predictors::PredictorKind {
            crate::predictors::PredictorKind::EpsOracle
        }
        fn parameterization(&self) -> Parameterization {
            self.1
        }
        fn schedule(&self) -> &Schedule {
            &self.0
        }
        fn dim(&self) -> usize {
            2
        }
        fn predict(&self, x: &[f64], _t: usize) -> Result<Vec<f64>> {
            Ok(vec![0.0; x.len()])
        }
    }

    fn cloud() -> Arc<Dataset> {
        Arc::new(
            Dataset::from_rows(&[vec![1.0, 0.5], vec![-0.5, 2.0], vec![0.3, -1.2], vec![2.0, 2.0]])
                .unwrap(),
        )
    }

    #[test]
    fn final_step_ignores_seed() {
        let sched = Schedule::default();
        let p = EpsEmpirical::new(sched.clone(), cloud()).unwrap();
        let x = [0.3, 0.3];
        assert_eq!(
            ddpm_step(&sched, &p, &x, 1, 1).unwrap(),
            ddpm_step(&sched, &p, &x, 1, 2).unwrap()
        );
        assert_ne!(
            ddpm_step(&sched, &p, &x, 2, 1).unwrap(),
            ddpm_step(&sched, &p, &x, 2, 2).unwrap()
        );
    }

    #[test]
    fn zero_prediction_rescales() {
        let sched = Schedule::default();
        let z = Zero(sched.clone(), Parameterization::Eps);
        let x = [1.0, -3.0];
        let m = ddpm_mean(&sched, &z, &x, 400).unwrap();
        let a = sched.alpha(400).unwrap().sqrt();
        assert_eq!(m, vec![1.0 / a, -3.0 / a]);
        let zx = Zero(sched.clone(), Parameterization::Xi);
        let m = prev_status_step(&sched, &zx, &x, 400, false, 0).unwrap();
        let r = sched.ratio(400, 399).unwrap().sqrt();
        assert_eq!(m, vec![1.0 / r, -3.0 / r]);
    }

    #[test]
    fn ddpm_mean_equals_posterior_mean_form() {
        let sched = Schedule::default();
        let data = cloud();
        let p = EpsEmpirical::new(sched.clone(), data.clone()).unwrap();
        for t in [2, 10, 300, 1000] {
            let x = [0.4, -0.7];
            let m = ddpm_mean(&sched, &p, &x, t).unwrap();
            // μ̃_t(x_t, x̂_0) = √ᾱ_{t−1}β_t/(1−ᾱ_t) x̂_0 + √α_t(1−ᾱ_{t−1})/(1−ᾱ_t) x_t
            let x0 = p.posterior_mean(&x, t).unwrap();
            let a_prev = sched.alpha_bar(t - 1).unwrap();
            let beta = sched.beta(t).unwrap();
            let c = sched.one_minus_alpha_bar(t).unwrap();
            let c_prev = sched.one_minus_alpha_bar(t - 1).unwrap();
            let alpha = sched.alpha(t).unwrap();
            for j in 0..2 {
                let want = a_prev.sqrt() * beta / c * x0[j] + alpha.sqrt() * c_prev / c * x[j];
                assert!((m[j] - want).abs() < 1e-12 * want.abs().max(1.0), "t={t}");
            }
        }
    }

    #[test]
    fn ddim_fixed_point_at_the_gaussian_mean() {
        let sched = Schedule::default().subsequence(50).unwrap();
        let spec: TargetSpec = "gaussian:mean=1.5,-0.5;sigma=0.7".parse().unwrap();
        let o = OracleEps::new(sched.clone(), &spec).unwrap();
        for t in [1, 20, 50] {
            let a = sched.alpha_bar(t).unwrap().sqrt();
            let x = [a * 1.5, a * -0.5];
            let next = ddim_step(&sched, &o, &x, t).unwrap();
            let ap = sched.alpha_bar(t - 1).unwrap().sqrt();
            assert!((next[0] - ap * 1.5).abs() < 1e-12);
            assert!((next[1] - ap * -0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ddim_last_step_is_x0_estimate() {
        let sched = Schedule::default();
        let p = EpsEmpirical::new(sched.clone(), cloud()).unwrap();
        let x = [0.1, 0.2];
        let out = ddim_step(&sched, &p, &x, 1).unwrap();
        let x0 = p.posterior_mean(&x, 1).unwrap();
        for j in 0..2 {
            assert!((out[j] - x0[j]).abs() < 1e-10);
        }
        assert_eq!(out, ddim_step(&sched, &p, &x, 1).unwrap());
    }

    #[test]
    fn prev_status_with_zero_grid_matches_ddpm_mean() {
        let sched = Schedule::default().subsequence(50).unwrap();
        let data = cloud();
        let eps = EpsEmpirical::new(sched.clone(), data.clone()).unwrap();
        let xi = XiEmpirical::new(sched.clone(), data, SGrid::point_mass(50, 0, 0)).unwrap();
        for t in 1..=50 {
            let x = [0.9, -0.2];
            let a = ddpm_mean(&sched, &eps, &x, t).unwrap();
            let b = prev_status_step(&sched, &xi, &x, t, false, 0).unwrap();
            for j in 0..2 {
                assert!((a[j] - b[j]).abs() < 1e-10 * a[j].abs().max(1.0), "t={t}");
            }
        }
    }

    #[test]
    fn vanishing_step_is_identity() {
        let sched = Schedule::from_betas(vec![1e-3, 1e-15]).unwrap();
        let z = Zero(sched.clone(), Parameterization::Xi);
        let x = [2.0, -1.0];
        let y = prev_status_step(&sched, &z, &x, 2, false, 0).unwrap();
        assert!((y[0] - 2.0).abs() < 1e-12 && (y[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pairing_and_range_errors() {
        let sched = Schedule::default();
        let xi = Zero(sched.clone(), Parameterization::Xi);
        let eps = Zero(sched.clone(), Parameterization::Eps);
        assert!(matches!(ddim_step(&sched, &xi, &[0.0, 0.0], 5), Err(Error::Config(_))));
        assert!(matches!(prev_status_mean(&sched, &eps, &[0.0, 0.0], 5), Err(Error::Config(_))));
        assert!(matches!(ddpm_step(&sched, &eps, &[0.0, 0.0], 0, 0), Err(Error::Argument(_))));
        assert!(matches!(ddim_step(&sched, &eps, &[0.0, 0.0], 1001), Err(Error::Argument(_))));
        for name in SAMPLER_NAMES {
            assert_eq!(by_name(name).unwrap().name(), name);
        }
        assert!(by_name("euler").is_err());
    }
}
