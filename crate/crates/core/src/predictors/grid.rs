use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_GRID_SIZE: usize = 8;

/// Draws `(k, s)`: `k ~ U{1, …, T−1}` then `s ~ U{0, …, T−k}`.
pub fn sample_gap_and_s(steps: usize, r: &mut rng::Stream) -> (usize, usize) {
    let k = r.random_range(1..steps);
    let s = r.random_range(0..=steps - k);
    (k, s)
}

/// Earlier step `s < t` from the gap scheme above, drawing `(k, s)` pairs
/// until `s < t`. For `t = T` no draw is ever rejected.
pub fn sample_s(steps: usize, t: usize, seed: u64) -> Result<usize> {
    if steps < 2 {
        return Err(Error::config("sampling s needs at least two steps"));
    }
    if t == 0 || t > steps {
        return Err(Error::arg(format!("t = {t} outside 1..={steps}")));
    }
    let mut r = rng::stream(seed, &[rng::tag::GRID]);
    loop {
        let (_, s) = sample_gap_and_s(steps, &mut r);
        if s < t {
            return Ok(s);
        }
    }
}

/// Realized distribution of earlier steps `s` for every evaluation step `t`.
///
/// `entries(t)` lists `(s_j, ω_j)` with `s_j < t` and `Σ ω_j = 1`. The noised
/// copies `x_{s}^i` are regenerated from `noise_seed` keyed by `(i, s)`, one
/// copy per training point per distinct `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SGrid {
    per_step: Vec<Vec<(usize, f64)>>,
    noise_seed: u64,
}

impl SGrid {
    /// `s ≡ s0` at every `t > s0`; steps `t ≤ s0` are left empty.
    pub fn point_mass(steps: usize, s0: usize, noise_seed: u64) -> Self {
        Self::fixed(steps, &[(s0, 1.0)], noise_seed)
            .expect("a single unit weight is a valid grid")
    }

    /// The same weighted `s` values at every `t`, restricted to `s < t` and
    /// renormalized.
    pub fn fixed(steps: usize, entries: &[(usize, f64)], noise_seed: u64) -> Result<Self> {
        if entries.iter().any(|(_, w)| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::config("grid weights must be positive"));
        }
        let per_step = (0..=steps)
            .map(|t| {
                let kept: Vec<(usize, f64)> =
                    entries.iter().copied().filter(|(s, _)| *s < t).collect();
                let total: f64 = kept.iter().map(|(_, w)| w).sum();
                kept.into_iter().map(|(s, w)| (s, w / total)).collect()
            })
            .collect();
        Ok(Self {
            per_step,
            noise_seed,
        })
    }

    /// `J` draws of `s` per step via [`sample_s`], duplicates merged, each draw
    /// weighted `1/J`.
    pub fn sampled(steps: usize, draws: usize, seed: u64) -> Result<Self> {
        if draws == 0 {
            return Err(Error::config("grid needs at least one draw"));
        }
        let mut per_step = vec![Vec::new(); steps + 1];
        for (t, slot) in per_step.iter_mut().enumerate().skip(1) {
            let mut counts = std::collections::BTreeMap::new();
            for j in 0..draws {
                let s = if steps < 2 {
                    0
                } else {
                    sample_s(steps, t, rng::derive(seed, &[t as u64, j as u64]))?
                };
                *counts.entry(s).or_insert(0usize) += 1;
            }
            *slot = counts
                .into_iter()
                .map(|(s, c)| (s, c as f64 / draws as f64))
                .collect();
        }
        Ok(Self {
            per_step,
            noise_seed: rng::derive(seed, &[rng::tag::GRID_NOISE]),
        })
    }

    pub fn steps(&self) -> usize {
        self.per_step.len() - 1
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }

    /// Entries for evaluation step `t`; a configuration error if none exist.
    pub fn entries(&self, t: usize) -> Result<&[(usize, f64)]> {
        match self.per_step.get(t) {
            Some(e) if !e.is_empty() => Ok(e),
            _ => Err(Error::config(format!("s-grid has no entries with s < {t}"))),
        }
    }

    /// Every distinct `s` referenced anywhere in the grid.
    pub fn distinct_s(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.per_step.iter().flatten().map(|(s, _)| *s).collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}
