//! # emopt
//!
//! Closed-form ("empirical optimal") diffusion predictors and the reverse
//! samplers built around them.
//!
//! When a noise-prediction network is trained to the exact minimum of its
//! empirical objective, the minimizer has a closed form: a softmax-weighted
//! kernel estimator over the training set. This crate evaluates that estimator
//! (and the previous-status variant that regresses onto noised copies
//! `x_s` instead of clean data), runs DDPM/DDIM/previous-status reverse chains
//! with it, and measures how strongly the generated samples collapse onto the
//! training set. Analytic targets (Gaussians, Gaussian mixtures, point clouds)
//! provide exact oracles for every quantity, so no network is trained.
//!
//! ## Layout
//!
//! | Module | Purpose |
//! |--------|---------|
//! | [`schedule`] | variance schedule, `ᾱ_t`, `β̃_t`, ratios `ᾱ_t/ᾱ_s`, sub-schedules |
//! | [`datasets`] | training sets, synthetic targets, CSV and CIFAR-10 I/O |
//! | [`forward`] | forward noising `x_0 → x_t` and `x_s → x_t` |
//! | [`predictors`] | empirical optima, analytic oracles, conversions |
//! | [`samplers`] | DDPM, DDIM and previous-status reverse updates |
//! | [`metrics`] | nearest-neighbour audit, divergence, closed-form bounds |
//! | [`experiments`] | config-driven runners behind the CLI |
//!
//! Predictors, samplers and experiments are trait objects registered by name
//! ([`predictors::registry`], [`samplers::by_name`], [`experiments::by_kind`]),
//! so the CLI and config files select them at runtime.
//!
//! ## Reproducibility
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! `(master seed, stream ids...)` (see [`rng`]). Trajectory `i` of a batch only
//! reads streams keyed by `i`, so results do not depend on thread count.

pub mod datasets;
pub mod error;
pub mod experiments;
pub mod forward;
pub mod matrix;
pub mod metrics;
pub mod numeric;
pub mod predictors;
pub mod rng;
pub mod samplers;
pub mod schedule;

pub use datasets::{Dataset, TargetSpec};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use predictors::{Parameterization, Predictor, PredictorKind};
pub use samplers::{Sampler, Trajectory};
pub use schedule::Schedule;
