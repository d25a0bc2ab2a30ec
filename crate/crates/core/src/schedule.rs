//! Variance schedule and derived coefficients.
//!
//! Steps are 1-based: `β_1 … β_T`, with `ᾱ_0 = 1` stored at index 0 of every
//! per-step array. `ᾱ_t` is the running product of `α_s = 1 − β_s`; the
//! running sum of `ln(1 − β_s)` is kept next to it so that complements such as
//! `1 − ᾱ_t` and `1 − ᾱ_t/ᾱ_s` are evaluated with `expm1` and stay accurate
//! when they are tiny.

use crate::error::{Error, Result};

pub const DEFAULT_STEPS: usize = 1000;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    betas: Vec<f64>,
    alpha_bars: Vec<f64>,
    log_alpha_bars: Vec<f64>,
    tilde_betas: Vec<f64>,
    /// Step of the parent schedule each step was taken from (identity for a
    /// schedule built directly from betas).
    timesteps: Vec<usize>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self::linear(DEFAULT_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END)
            .expect("default schedule parameters are valid")
    }
}

impl Schedule {
    /// Linearly spaced `β_t` from `beta_start` to `beta_end`.
    pub fn linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::config("schedule needs at least one step"));
        }
        let valid = |b: f64| b > 0.0 && b < 1.0;
        if !valid(beta_start) || !valid(beta_end) || beta_start > beta_end {
            return Err(Error::config(format!(
                "need 0 < beta_start <= beta_end < 1, got {beta_start} and {beta_end}"
            )));
        }
        let betas = if steps == 1 {
            vec![beta_start]
        } else {
            let span = beta_end - beta_start;
            (0..steps)
                .map(|i| beta_start + i as f64 * span / (steps - 1) as f64)
                .collect()
        };
        Self::from_betas(betas)
    }

    /// Schedule from explicit `β_1 … β_T`, each in `(0, 1)`.
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::config("schedule needs at least one step"));
        }
        if let Some((i, b)) = betas
            .iter()
            .enumerate()
            .find(|(_, b)| !(**b > 0.0 && **b < 1.0))
        {
            return Err(Error::config(format!("beta_{} = {b} is outside (0, 1)", i + 1)));
        }
        let steps = betas.len();
        let mut alpha_bars = Vec::with_capacity(steps + 1);
        let mut log_alpha_bars = Vec::with_capacity(steps + 1);
        alpha_bars.push(1.0);
        log_alpha_bars.push(0.0);
        for (i, &b) in betas.iter().enumerate() {
            alpha_bars.push(alpha_bars[i] * (1.0 - b));
            log_alpha_bars.push(log_alpha_bars[i] + (-b).ln_1p());
        }
        let mut full_betas = Vec::with_capacity(steps + 1);
        full_betas.push(0.0);
        full_betas.extend(betas);
        Ok(Self::assemble(
            full_betas,
            alpha_bars,
            log_alpha_bars,
            (0..=steps).collect(),
        ))
    }

    fn assemble(
        betas: Vec<f64>,
        alpha_bars: Vec<f64>,
        log_alpha_bars: Vec<f64>,
        timesteps: Vec<usize>,
    ) -> Self {
        let steps = betas.len() - 1;
        let mut tilde_betas = vec![0.0; steps + 1];
        for t in 2..=steps {
            let prev = -log_alpha_bars[t - 1].exp_m1();
            let cur = -log_alpha_bars[t].exp_m1();
            tilde_betas[t] = betas[t] * prev / cur;
        }
        Self {
            betas,
            alpha_bars,
            log_alpha_bars,
            tilde_betas,
            timesteps,
        }
    }

    /// `K`-step sub-schedule at parent steps `t_i = ⌈i·T/K⌉`, `i = 1..=K`.
    ///
    /// `ᾱ'_i` is copied from the parent; `β'_i = 1 − ᾱ'_i/ᾱ'_{i−1}` and
    /// `β̃'_i` are recomputed from consecutive ratios.
    pub fn subsequence(&self, k: usize) -> Result<Self> {
        let steps = self.steps();
        if k == 0 || k > steps {
            return Err(Error::config(format!(
                "sub-schedule length {k} must be in 1..={steps}"
            )));
        }
        if k == steps {
            return Ok(self.clone());
        }
        let picked: Vec<usize> = std::iter::once(0)
            .chain((1..=k).map(|i| (steps * i).div_ceil(k)))
            .collect();
        let alpha_bars: Vec<f64> = picked.iter().map(|&t| self.alpha_bars[t]).collect();
        let log_alpha_bars: Vec<f64> = picked.iter().map(|&t| self.log_alpha_bars[t]).collect();
        let mut betas = vec![0.0; k + 1];
        for i in 1..=k {
            betas[i] = -(log_alpha_bars[i] - log_alpha_bars[i - 1]).exp_m1();
        }
        let timesteps = picked.iter().map(|&t| self.timesteps[t]).collect();
        Ok(Self::assemble(betas, alpha_bars, log_alpha_bars, timesteps))
    }

    /// Number of steps `T`.
    pub fn steps(&self) -> usize {
        self.betas.len() - 1
    }

    fn check(&self, t: usize) -> Result<()> {
        if t > self.steps() {
            return Err(Error::arg(format!(
                "step {t} outside 0..={}",
                self.steps()
            )));
        }
        Ok(())
    }

    fn check_positive(&self, t: usize) -> Result<()> {
        if t == 0 {
            return Err(Error::arg("step 0 has no beta"));
        }
        self.check(t)
    }

    pub fn beta(&self, t: usize) -> Result<f64> {
        self.check_positive(t)?;
        Ok(self.betas[t])
    }

    pub fn alpha(&self, t: usize) -> Result<f64> {
        Ok(1.0 - self.beta(t)?)
    }

    pub fn alpha_bar(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(self.alpha_bars[t])
    }

    pub fn log_alpha_bar(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(self.log_alpha_bars[t])
    }

    /// `1 − ᾱ_t`, accurate when `ᾱ_t` is close to one.
    pub fn one_minus_alpha_bar(&self, t: usize) -> Result<f64> {
        self.check(t)?;
        Ok(-self.log_alpha_bars[t].exp_m1())
    }

    pub fn tilde_beta(&self, t: usize) -> Result<f64> {
        self.check_positive(t)?;
        Ok(self.tilde_betas[t])
    }

    /// `r(t, s) = ᾱ_t / ᾱ_s` for `s ≤ t`; exactly `ᾱ_t` when `s = 0`.
    pub fn ratio(&self, t: usize, s: usize) -> Result<f64> {
        self.check_pair(t, s)?;
        Ok(self.alpha_bars[t] / self.alpha_bars[s])
    }

    /// `1 − r(t, s)`.
    pub fn one_minus_ratio(&self, t: usize, s: usize) -> Result<f64> {
        self.check_pair(t, s)?;
        Ok(-(self.log_alpha_bars[t] - self.log_alpha_bars[s]).exp_m1())
    }

    fn check_pair(&self, t: usize, s: usize) -> Result<()> {
        self.check(t)?;
        if s > t {
            return Err(Error::arg(format!("ratio needs s <= t, got s={s}, t={t}")));
        }
        Ok(())
    }

    /// Parent-schedule step that step `t` corresponds to.
    pub fn timestep(&self, t: usize) -> Result<usize> {
        self.check(t)?;
        Ok(self.timesteps[t])
    }

    pub fn timesteps(&self) -> &[usize] {
        &self.timesteps
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bars
    }

    /// Step in `1..=T` whose `(√ᾱ_t, √(1−ᾱ_t))` is closest in Euclidean
    /// distance to `(signal, noise)`.
    pub fn best_matching_step(&self, signal: f64, noise: f64) -> usize {
        (1..=self.steps())
            .min_by(|&a, &b| {
                let da = self.coefficient_distance(a, signal, noise);
                let db = self.coefficient_distance(b, signal, noise);
                da.total_cmp(&db)
            })
            .unwrap_or(1)
    }

    fn coefficient_distance(&self, t: usize, signal: f64, noise: f64) -> f64 {
        let a = self.alpha_bars[t].sqrt() - signal;
        let b = (-self.log_alpha_bars[t].exp_m1()).sqrt() - noise;
        a * a + b * b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_step() -> Schedule {
        Schedule::linear(2, 0.5, 0.5).unwrap()
    }

    #[test]
    fn default_first_alpha_bar() {
        let s = Schedule::default();
        assert_eq!(s.steps(), 1000);
        assert_eq!(s.alpha_bar(1).unwrap(), 0.9999);
        assert_eq!(s.beta(1000).unwrap(), 0.02);
    }

    #[test]
    fn single_step_schedule() {
        let s = Schedule::linear(1, 0.5, 0.5).unwrap();
        assert_eq!(s.alpha_bar(1).unwrap(), 0.5);
        assert_eq!(s.tilde_beta(1).unwrap(), 0.0);
    }

    #[test]
    fn two_step_hand_values() {
        let s = two_step();
        assert_eq!(s.alpha_bar(2).unwrap(), 0.25);
        assert!((s.tilde_beta(2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.ratio(2, 1).unwrap(), 0.5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(Schedule::linear(0, 0.1, 0.2), Err(Error::Config(_))));
        assert!(matches!(Schedule::linear(10, 0.0, 0.2), Err(Error::Config(_))));
        assert!(matches!(Schedule::linear(10, 0.3, 0.2), Err(Error::Config(_))));
        assert!(matches!(Schedule::linear(10, 0.1, 1.0), Err(Error::Config(_))));
        assert!(Schedule::from_betas(vec![0.1, 1.5]).is_err());
    }

    #[test]
    fn ratio_edges() {
        let s = Schedule::default();
        for t in [1, 17, 500, 1000] {
            assert_eq!(s.ratio(t, t).unwrap(), 1.0);
            assert_eq!(s.ratio(t, 0).unwrap(), s.alpha_bar(t).unwrap());
        }
        assert!(matches!(s.ratio(3, 4), Err(Error::Argument(_))));
        assert!(s.alpha_bar(1001).is_err());
    }

    #[test]
    fn schedule_invariants_hold() {
        let s = Schedule::default();
        assert_eq!(s.tilde_beta(1).unwrap(), 0.0);
        for t in 1..=s.steps() {
            assert!(s.alpha_bar(t).unwrap() < s.alpha_bar(t - 1).unwrap());
            if t >= 2 {
                assert!(s.tilde_beta(t).unwrap() < s.beta(t).unwrap());
            }
        }
        assert!(s.alpha_bar(1000).unwrap() < 1e-4);
    }

    #[test]
    fn product_and_log_sum_agree() {
        let s = Schedule::linear(5000, 1e-4, 0.02).unwrap();
        for t in 0..=5000 {
            let prod = s.alpha_bar(t).unwrap();
            let logs = s.log_alpha_bar(t).unwrap().exp();
            assert!(((prod - logs) / logs).abs() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn identity_subsequence() {
        let s = Schedule::default();
        assert_eq!(s.subsequence(1000).unwrap(), s);
    }

    #[test]
    fn fifty_step_subsequence_timesteps() {
        let s = Schedule::default();
        let sub = s.subsequence(50).unwrap();
        let expect: Vec<usize> = (0..=50).map(|i| 20 * i).collect();
        assert_eq!(sub.timesteps(), expect.as_slice());
        for i in 0..=50 {
            assert_eq!(sub.alpha_bar(i).unwrap(), s.alpha_bar(20 * i).unwrap());
        }
        for i in 1..=50 {
            let b = sub.beta(i).unwrap();
            let want = 1.0 - sub.alpha_bar(i).unwrap() / sub.alpha_bar(i - 1).unwrap();
            assert!((b - want).abs() < 1e-14);
        }
        assert_eq!(sub.tilde_beta(1).unwrap(), 0.0);
    }

    #[test]
    fn single_step_subsequence() {
        let s = Schedule::default();
        let sub = s.subsequence(1).unwrap();
        assert_eq!(sub.steps(), 1);
        assert_eq!(sub.alpha_bar(1).unwrap(), s.alpha_bar(1000).unwrap());
        assert!(s.subsequence(1001).is_err());
        assert!(s.subsequence(0).is_err());
    }

    #[test]
    fn best_matching_step_recovers_exact_coefficients() {
        let s = Schedule::default();
        let a = s.alpha_bar(280).unwrap();
        assert_eq!(s.best_matching_step(a.sqrt(), (1.0 - a).sqrt()), 280);
    }

    proptest! {
        #[test]
        fn ratios_compose(steps in 2usize..400, b0 in 1e-5f64..0.05, span in 0.0f64..0.3,
                          picks in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0)) {
            let s = Schedule::linear(steps, b0, b0 + span).unwrap();
            let mut idx = [picks.0, picks.1, picks.2].map(|p| (p * steps as f64) as usize);
            idx.sort();
            let [lo, mid, hi] = idx;
            let direct = s.ratio(hi, lo).unwrap();
            let composed = s.ratio(hi, mid).unwrap() * s.ratio(mid, lo).unwrap();
            prop_assert!((direct - composed).abs() <= 1e-12 * direct.max(1e-300));
            if lo < hi {
                prop_assert!(direct > 0.0 && direct < 1.0);
            }
            let c = s.one_minus_ratio(hi, lo).unwrap();
            prop_assert!((c - (1.0 - direct)).abs() < 1e-12);
        }
    }
}
