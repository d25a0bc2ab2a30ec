use super::{check_eval, Parameterization, Predictor, PredictorKind};
use crate::datasets::{Component, TargetSpec};
use crate::error::{Error, Result};
use crate::numeric::{logsumexp, softmax_in_place, sq_dist_scaled};
use crate::schedule::Schedule;

/// Exact `E[ε | x_t] = −√(1−ᾱ_t) ∇ log P_t(x_t)` for mixture-form targets.
///
/// The noised marginal of `Σ_k π_k N(μ_k, σ_k² I)` is
/// `P_t = Σ_k π_k N(√ᾱ_t μ_k, (ᾱ_t σ_k² + 1−ᾱ_t) I)`. Point clouds are
/// handled as mixtures with `σ_k = 0`, which makes this the exact optimum for
/// the empirical distribution of the cloud.
#[derive(Debug, Clone)]
pub struct OracleEps {
    sched: Schedule,
    components: Vec<Component>,
    dim: usize,
}

impl OracleEps {
    pub fn new(sched: Schedule, spec: &TargetSpec) -> Result<Self> {
        spec.validate()?;
        let components = spec.mixture_components().ok_or_else(|| {
            Error::config(format!("no analytic noised marginal for target `{spec}`"))
        })?;
        Ok(Self {
            sched,
            components,
            dim: spec.dim(),
        })
    }

    /// Log-responsibilities and per-component `(mean_t, var_t)` at step `t`.
    fn marginal(&self, x: &[f64], root_a: f64, c: f64) -> (Vec<f64>, Vec<f64>) {
        let d = x.len() as f64;
        let mut logits = Vec::with_capacity(self.components.len());
        let mut vars = Vec::with_capacity(self.components.len());
        for comp in &self.components {
            let v = root_a * root_a * comp.sigma * comp.sigma + c;
            logits.push(
                comp.weight.ln()
                    - 0.5 * d * (std::f64::consts::TAU * v).ln()
                    - sq_dist_scaled(x, root_a, &comp.mean) / (2.0 * v),
            );
            vars.push(v);
        }
        (logits, vars)
    }

    /// `log P_t(x)`.
    pub fn log_density(&self, x: &[f64], t: usize) -> Result<f64> {
        let (a, c) = check_eval(&self.sched, self.dim, x, t)?;
        let (logits, _) = self.marginal(x, a.sqrt(), c);
        Ok(logsumexp(&logits))
    }

    /// `∇ log P_t(x)`.
    pub fn score(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let (a, c) = check_eval(&self.sched, self.dim, x, t)?;
        let root_a = a.sqrt();
        let (mut gamma, vars) = self.marginal(x, root_a, c);
        softmax_in_place(&mut gamma);
        let mut out = vec![0.0; x.len()];
        for ((g, v), comp) in gamma.iter().zip(&vars).zip(&self.components) {
            if *g == 0.0 {
                continue;
            }
            for ((o, xv), m) in out.iter_mut().zip(x).zip(&comp.mean) {
                *o -= g * (xv - root_a * m) / v;
            }
        }
        Ok(out)
    }
}

impl Predictor for OracleEps {
    fn kind(&self) -> PredictorKind {
        PredictorKind::EpsOracle
    }

    fn parameterization(&self) -> Parameterization {
        Parameterization::Eps
    }

    fn schedule(&self) -> &Schedule {
        &self.sched
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn predict(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let score = self.score(x, t)?;
        let c = self.sched.one_minus_alpha_bar(t)?.sqrt();
        Ok(score.into_iter().map(|g| -c * g).collect())
    }
}

/// Largest pairwise distance between the rescaled conditional noise
/// `E[ξ_{t,s} | x_t] / √(1−r_{t,s})` evaluated for each `s` in `s_list`.
///
/// Each value is built from the route through `s`: the target is noised to
/// `P_s`, then convolved from `s` to `t`, and the Gaussian conditional mean of
/// `ξ_{t,s}` is taken per component and averaged with the posterior
/// component responsibilities. Tweedie's formula says the result does not
/// depend on `s`.
pub fn tweedie_check(
    spec: &TargetSpec,
    sched: &Schedule,
    x: &[f64],
    t: usize,
    s_list: &[usize],
) -> Result<f64> {
    spec.validate()?;
    let comps = spec
        .mixture_components()
        .ok_or_else(|| Error::config(format!("no analytic marginal for target `{spec}`")))?;
    if x.len() != spec.dim() {
        return Err(Error::arg("probe dimension does not match target"));
    }
    let routes = s_list
        .iter()
        .map(|&s| {
            if s >= t {
                return Err(Error::arg(format!("s = {s} is not below t = {t}")));
            }
            rescaled_conditional_noise(&comps, sched, x, t, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for i in 0..routes.len() {
        for j in i + 1..routes.len() {
            worst = worst.max(crate::numeric::sq_dist(&routes[i], &routes[j]).sqrt());
        }
    }
    Ok(worst)
}

fn rescaled_conditional_noise(
    comps: &[Component],
    sched: &Schedule,
    x: &[f64],
    t: usize,
    s: usize,
) -> Result<Vec<f64>> {
    let d = x.len() as f64;
    let a_s = sched.alpha_bar(s)?;
    let c_s = sched.one_minus_alpha_bar(s)?;
    let r = sched.ratio(t, s)?;
    let c_r = sched.one_minus_ratio(t, s)?;
    let root_r = r.sqrt();
    let root_c = c_r.sqrt();
    let mut logits = Vec::with_capacity(comps.len());
    let mut parts = Vec::with_capacity(comps.len());
    for comp in comps {
        // x_s | k ~ N(√ᾱ_s μ_k, v_s I), then x_t | k ~ N(√r m_s, (r v_s + 1−r) I).
        let m_s: Vec<f64> = comp.mean.iter().map(|m| a_s.sqrt() * m).collect();
        let v_s = a_s * comp.sigma * comp.sigma + c_s;
        let m_t: Vec<f64> = m_s.iter().map(|m| root_r * m).collect();
        let v_t = r * v_s + c_r;
        logits.push(
            comp.weight.ln()
                - 0.5 * d * (std::f64::consts::TAU * v_t).ln()
                - crate::numeric::sq_dist(x, &m_t) / (2.0 * v_t),
        );
        // Cov(ξ, x_t | k) = √(1−r) I, so E[ξ | x_t, k] = √(1−r)(x_t − m_t)/v_t.
        let cond: Vec<f64> = x
            .iter()
            .zip(&m_t)
            .map(|(xv, m)| root_c * (xv - m) / v_t)
            .collect();
        parts.push(cond);
    }
    softmax_in_place(&mut logits);
    let mut out = vec![0.0; x.len()];
    for (g, cond) in logits.iter().zip(&parts) {
        for (o, v) in out.iter_mut().zip(cond) {
            *o += g * v / root_c;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn mixture() -> TargetSpec {
        "mixture:weights=0.3|0.7;means=2,-1|-1.5,0.5;sigmas=0.4|0.9"
            .parse()
            .unwrap()
    }

    #[test]
    fn unit_gaussian_oracle_is_scaled_identity() {
        let sched = Schedule::default();
        let o = OracleEps::new(sched.clone(), &TargetSpec::unit_gaussian(2)).unwrap();
        for t in [1, 300, 1000] {
            let x = [0.7, -2.0];
            let c = sched.one_minus_alpha_bar(t).unwrap().sqrt();
            let e = o.predict(&x, t).unwrap();
            for j in 0..2 {
                assert!((e[j] - c * x[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn general_gaussian_closed_form() {
        let sched = Schedule::default();
        let spec: TargetSpec = "gaussian:mean=1,-2;sigma=0.5".parse().unwrap();
        let o = OracleEps::new(sched.clone(), &spec).unwrap();
        let mu = [1.0, -2.0];
        for t in [2, 150, 900] {
            let a = sched.alpha_bar(t).unwrap();
            let c = 1.0 - a;
            let x = [0.3, 0.4];
            let e = o.predict(&x, t).unwrap();
            for j in 0..2 {
                let want = c.sqrt() * (x[j] - a.sqrt() * mu[j]) / (a * 0.25 + c);
                assert!((e[j] - want).abs() < 1e-10 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn score_matches_central_differences() {
        let sched = Schedule::default();
        let o = OracleEps::new(sched, &mixture()).unwrap();
        let mut r = rng::stream(3, &[]);
        for t in [1, 50, 400, 999] {
            for _ in 0..10 {
                let x: Vec<f64> = rng::gaussian_vec(&mut r, 2).iter().map(|v| 2.0 * v).collect();
                let h = 1e-5 * (1.0 + crate::numeric::norm(&x));
                let g = o.score(&x, t).unwrap();
                let mut fd = vec![0.0; 2];
                for j in 0..2 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    fd[j] = (o.log_density(&xp, t).unwrap() - o.log_density(&xm, t).unwrap())
                        / (2.0 * h);
                }
                let err = crate::numeric::sq_dist(&g, &fd).sqrt();
                assert!(err / crate::numeric::norm(&g).max(1e-3) < 1e-6, "t={t} {g:?} {fd:?}");
            }
        }
    }

    #[test]
    fn ring_has_no_oracle() {
        let spec: TargetSpec = "ring:dim=2;radius=1;sigma=0.1".parse().unwrap();
        assert!(matches!(OracleEps::new(Schedule::default(), &spec), Err(Error::Config(_))));
        assert!(tweedie_check(&spec, &Schedule::default(), &[0.0, 0.0], 5, &[0]).is_err());
    }

    #[test]
    fn tweedie_single_gaussian() {
        let sched = Schedule::default();
        let spec: TargetSpec = "gaussian:mean=0.5,1;sigma=2".parse().unwrap();
        for t in [2, 100, 1000] {
            let dev = tweedie_check(&spec, &sched, &[0.1, -0.4], t, &[0, t - 1]).unwrap();
            assert!(dev < 1e-10, "{dev}");
        }
    }

    #[test]
    fn tweedie_mixture_and_agreement_with_score() {
        let sched = Schedule::default();
        let spec = mixture();
        let o = OracleEps::new(sched.clone(), &spec).unwrap();
        let mut r = rng::stream(4, &[]);
        for t in [2, 10, 500, 1000] {
            let x = rng::gaussian_vec(&mut r, 2);
            let dev = tweedie_check(&spec, &sched, &x, t, &[0, t / 2, t - 1]).unwrap();
            assert!(dev < 1e-8, "{dev}");
            let route = rescaled_conditional_noise(&spec.mixture_components().unwrap(), &sched, &x, t, 0)
                .unwrap();
            let score = o.score(&x, t).unwrap();
            for j in 0..2 {
                assert!((route[j] + score[j]).abs() < 1e-9 * score[j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn tweedie_singleton_and_bad_s() {
        let sched = Schedule::default();
        let spec = mixture();
        assert_eq!(tweedie_check(&spec, &sched, &[0.0, 0.0], 10, &[4]).unwrap(), 0.0);
        assert!(matches!(
            tweedie_check(&spec, &sched, &[0.0, 0.0], 10, &[10]),
            Err(Error::Argument(_))
        ));
    }
}
