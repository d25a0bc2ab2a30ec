use std::sync::{Arc, OnceLock};

use super::{Parameterization, Predictor, PredictorKind, SGrid};
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::forward;
use crate::matrix::Matrix;
use crate::numeric::{softmax_in_place, sq_dist_scaled};
use crate::rng;
use crate::schedule::Schedule;

/// Exact minimizer of the previous-status objective, which regresses onto
/// noised copies `x_s^i` rather than the clean training points:
///
/// `ξ*(x,t) = Σ_{j,i} ω_j K_j(x, x_{s_j}^i) (x − √r_j x_{s_j}^i)/(1−r_j)
///            / Σ_{j,i} ω_j K_j(x, x_{s_j}^i)`
///
/// with `r_j = r(t, s_j)` and the normalized Gaussian kernel
/// `K_j = (2π(1−r_j))^{−d/2} exp(−‖x − √r_j x_{s_j}^i‖² / (2(1−r_j)))`.
/// The prefactor differs across `s_j`, so it stays in the log-weights.
pub struct XiEmpirical {
    sched: Schedule,
    data: Arc<Dataset>,
    grid: SGrid,
    noised: Vec<OnceLock<Arc<Matrix>>>,
}

impl XiEmpirical {
    pub fn new(sched: Schedule, data: Arc<Dataset>, grid: SGrid) -> Result<Self> {
        if grid.steps() != sched.steps() {
            return Err(Error::config(format!(
                "s-grid covers {} steps, schedule has {}",
                grid.steps(),
                sched.steps()
            )));
        }
        let noised = (0..=sched.steps()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            sched,
            data,
            grid,
            noised,
        })
    }

    pub fn grid(&self) -> &SGrid {
        &self.grid
    }

    /// `{x_s^i}`: the training set itself for `s = 0`, otherwise one forward
    /// draw per point from the stream `(noise_seed, i, s)`.
    pub fn noised_set(&self, s: usize) -> Result<Arc<Matrix>> {
        let slot = self
            .noised
            .get(s)
            .ok_or_else(|| Error::arg(format!("s = {s} beyond the schedule")))?;
        if let Some(m) = slot.get() {
            return Ok(m.clone());
        }
        let m = if s == 0 {
            self.data.points().clone()
        } else {
            let n = self.data.len();
            let d = self.data.dim();
            let mut out = Vec::with_capacity(n * d);
            for i in 0..n {
                let seed = rng::derive(self.grid.noise_seed(), &[i as u64, s as u64]);
                out.extend(forward::noise_to(&self.sched, self.data.point(i), s, seed)?.x_t);
            }
            Matrix::new(n, d, out)
        };
        Ok(slot.get_or_init(|| Arc::new(m)).clone())
    }
}

impl Predictor for XiEmpirical {
    fn kind(&self) -> PredictorKind {
        PredictorKind::XiEmpirical
    }

    fn parameterization(&self) -> Parameterization {
        Parameterization::Xi
    }

    fn schedule(&self) -> &Schedule {
        &self.sched
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn predict(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        super::check_eval(&self.sched, self.data.dim(), x, t)?;
        let entries = self.grid.entries(t)?;
        let d = x.len() as f64;
        let mut blocks = Vec::with_capacity(entries.len());
        let mut logits = Vec::with_capacity(entries.len() * self.data.len());
        for &(s, omega) in entries {
            if s >= t {
                return Err(Error::config(format!("s-grid entry s={s} is not below t={t}")));
            }
            let r = self.sched.ratio(t, s)?;
            let c = self.sched.one_minus_ratio(t, s)?;
            if c <= 0.0 {
                return Err(Error::arg(format!("r({t},{s}) = 1")));
            }
            let set = self.noised_set(s)?;
            let root_r = r.sqrt();
            let log_norm = omega.ln() - 0.5 * d * (std::f64::consts::TAU * c).ln();
            logits.extend(
                set.iter_rows()
                    .map(|p| log_norm - sq_dist_scaled(x, root_r, p) / (2.0 * c)),
            );
            blocks.push((set, root_r, c));
        }
        softmax_in_place(&mut logits);
        let mut out = vec![0.0; x.len()];
        let mut w = logits.iter();
        for (set, root_r, c) in &blocks {
            for p in set.iter_rows() {
                let wi = *w.next().expect("one weight per kernel");
                if wi == 0.0 {
                    continue;
                }
                let scale = wi / c;
                for ((o, xv), pv) in out.iter_mut().zip(x).zip(p) {
                    *o += scale * (xv - root_r * pv);
                }
            }
        }
        Ok(out)
    }
}
