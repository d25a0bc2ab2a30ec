//! Noise and score predictors.
//!
//! Every predictor maps `(x, t)` to a vector in `R^d` and declares which
//! quantity it estimates:
//!
//! * [`Parameterization::Eps`]: `E[ε | x_t]`, the DDPM noise target;
//! * [`Parameterization::Xi`]: `E[ξ_{t,t−1} | x_t] / √(1 − r_{t,t−1})`, which by
//!   Tweedie's formula equals `−∇ log P_t(x_t)`.
//!
//! The two are related by `ε = √(1−ᾱ_t) · ξ`; [`convert`] wraps one as the
//! other.

mod convert;
mod empirical;
mod grid;
mod oracle;
mod previous;

use std::fmt;
use std::sync::Arc;

pub use convert::{EpsFromXi, XiFromEps};
pub use empirical::{posterior_mean_estimate, EpsEmpirical};
pub use grid::{sample_gap_and_s, sample_s, SGrid, DEFAULT_GRID_SIZE};
pub use oracle::{tweedie_check, OracleEps};
pub use previous::XiEmpirical;

use crate::datasets::{Dataset, TargetSpec};
use crate::error::{Error, Result};
use crate::schedule::Schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameterization {
    Eps,
    Xi,
}

/// Where a predictor's output comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    EpsEmpirical,
    XiEmpirical,
    EpsOracle,
    ScoreOracleDerived,
}

impl PredictorKind {
    pub fn name(self) -> &'static str {
        match self {
            PredictorKind::EpsEmpirical => "eps-empirical",
            PredictorKind::XiEmpirical => "xi-empirical",
            PredictorKind::EpsOracle => "eps-oracle",
            PredictorKind::ScoreOracleDerived => "score-oracle-derived",
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub trait Predictor: Send + Sync {
    fn kind(&self) -> PredictorKind;

    fn parameterization(&self) -> Parameterization;

    fn schedule(&self) -> &Schedule;

    fn dim(&self) -> usize;

    /// Evaluates at `x` and step `t ∈ 1..=T`.
    fn predict(&self, x: &[f64], t: usize) -> Result<Vec<f64>>;
}

impl<P: Predictor + ?Sized> Predictor for Arc<P> {
    fn kind(&self) -> PredictorKind {
        (**self).kind()
    }
    fn parameterization(&self) -> Parameterization {
        (**self).parameterization()
    }
    fn schedule(&self) -> &Schedule {
        (**self).schedule()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn predict(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        (**self).predict(x, t)
    }
}

/// Validates `(x, t)` against a predictor's dimension and schedule and
/// returns `(ᾱ_t, 1 − ᾱ_t)`.
pub(crate) fn check_eval(
    sched: &Schedule,
    dim: usize,
    x: &[f64],
    t: usize,
) -> Result<(f64, f64)> {
    if x.len() != dim {
        return Err(Error::arg(format!(
            "input has dimension {}, predictor expects {dim}",
            x.len()
        )));
    }
    if t == 0 || t > sched.steps() {
        return Err(Error::arg(format!(
            "predictors are defined for t in 1..={}, got {t}",
            sched.steps()
        )));
    }
    let a = sched.alpha_bar(t)?;
    let c = sched.one_minus_alpha_bar(t)?;
    if c <= 0.0 {
        return Err(Error::arg(format!("1 - alpha_bar_{t} is zero")));
    }
    Ok((a, c))
}

/// Inputs a predictor may be built from.
#[derive(Clone)]
pub struct PredictorContext {
    pub schedule: Schedule,
    pub data: Option<Arc<Dataset>>,
    pub target: Option<TargetSpec>,
    pub grid: Option<SGrid>,
}

type Factory = fn(&PredictorContext) -> Result<Box<dyn Predictor>>;

fn need_data(ctx: &PredictorContext) -> Result<Arc<Dataset>> {
    ctx.data
        .clone()
        .ok_or_else(|| Error::config("predictor needs a training set"))
}

fn need_target(ctx: &PredictorContext) -> Result<&TargetSpec> {
    ctx.target
        .as_ref()
        .ok_or_else(|| Error::config("oracle predictor needs an analytic target"))
}

fn build_grid(ctx: &PredictorContext) -> SGrid {
    ctx.grid
        .clone()
        .unwrap_or_else(|| SGrid::point_mass(ctx.schedule.steps(), 0, 0))
}

/// Registered predictors: `(name, factory)`.
pub fn registry() -> &'static [(&'static str, Factory)] {
    &[
        ("eps-empirical", |ctx| {
            Ok(Box::new(EpsEmpirical::new(ctx.schedule.clone(), need_data(ctx)?)?))
        }),
        ("xi-empirical", |ctx| {
            Ok(Box::new(XiEmpirical::new(
                ctx.schedule.clone(),
                need_data(ctx)?,
                build_grid(ctx),
            )?))
        }),
        ("eps-oracle", |ctx| {
            Ok(Box::new(OracleEps::new(ctx.schedule.clone(), need_target(ctx)?)?))
        }),
        ("score-oracle-derived", |ctx| {
            let eps = OracleEps::new(ctx.schedule.clone(), need_target(ctx)?)?;
            Ok(Box::new(XiFromEps::new(eps)?))
        }),
        ("xi-empirical-as-eps", |ctx| {
            let xi = XiEmpirical::new(ctx.schedule.clone(), need_data(ctx)?, build_grid(ctx))?;
            Ok(Box::new(EpsFromXi::new(xi)?))
        }),
    ]
}

/// Builds the predictor registered under `name`.
pub fn by_name(name: &str, ctx: &PredictorContext) -> Result<Box<dyn Predictor>> {
    let (_, factory) = registry()
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| {
            let known: Vec<&str> = registry().iter().map(|(n, _)| *n).collect();
            Error::config(format!("unknown predictor `{name}` (known: {})", known.join(", ")))
        })?;
    factory(ctx)
}
