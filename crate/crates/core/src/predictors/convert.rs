use super::{Parameterization, Predictor, PredictorKind};
use crate::error::{Error, Result};
use crate::schedule::Schedule;

/// Presents a ξ-predictor (negative score) as an ε-predictor via
/// `ε = √(1−ᾱ_t) ξ`.
pub struct EpsFromXi<P> {
    inner: P,
}

impl<P: Predictor> EpsFromXi<P> {
    pub fn new(inner: P) -> Result<Self> {
        if inner.parameterization() != Parameterization::Xi {
            return Err(Error::config(format!(
                "`{}` is not a xi predictor",
                inner.kind()
            )));
        }
        Ok(Self { inner })
    }
}

impl<P: Predictor> Predictor for EpsFromXi<P> {
    fn kind(&self) -> PredictorKind {
        self.inner.kind()
    }

    fn parameterization(&self) -> Parameterization {
        Parameterization::Eps
    }

    fn schedule(&self) -> &Schedule {
        self.inner.schedule()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn predict(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let xi = self.inner.predict(x, t)?;
        let c = self.inner.schedule().one_minus_alpha_bar(t)?.sqrt();
        Ok(xi.into_iter().map(|v| c * v).collect())
    }
}

/// Presents an ε-predictor as a ξ-predictor via `ξ = ε / √(1−ᾱ_t)`.
/// Wrapping [`super::OracleEps`] gives the exact negative score.
pub struct XiFromEps<P> {
    inner: P,
}

impl<P: Predictor> XiFromEps<P> {
    pub fn new(inner: P) -> Result<Self> {
        if inner.parameterization() != Parameterization::Eps {
            return Err(Error::config(format!(
                "`{}` is not an eps predictor",
                inner.kind()
            )));
        }
        Ok(Self { inner })
    }
}

impl<P: Predictor> Predictor for XiFromEps<P> {
    fn kind(&self) -> PredictorKind {
        match self.inner.kind() {
            PredictorKind::EpsOracle => PredictorKind::ScoreOracleDerived,
            other => other,
        }
    }

    fn parameterization(&self) -> Parameterization {
        Parameterization::Xi
    }

    fn schedule(&self) -> &Schedule {
        self.inner.schedule()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn predict(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let eps = self.inner.predict(x, t)?;
        let c = self.inner.schedule().one_minus_alpha_bar(t)?.sqrt();
        Ok(eps.into_iter().map(|v| v / c).collect())
    }
}
