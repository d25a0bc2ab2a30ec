use std::sync::Arc;

use emopt::predictors::{EpsEmpirical, OracleEps};
use emopt::samplers::{generate, generate_endpoints, replay, Ddim, Ddpm, PrevStatus, Start};
use emopt::{Dataset, Schedule, TargetSpec};

fn column_moments(m: &emopt::Matrix, j: usize) -> (f64, f64) {
    let n = m.rows() as f64;
    let mean = m.iter_rows().map(|r| r[j]).sum::<f64>() / n;
    let var = m.iter_rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[test]
fn ddpm_with_oracle_reproduces_gaussian_target() {
    let sched = Schedule::linear(1000, 1e-4, 0.02).unwrap();
    let (mu, sigma) = (vec![1.0, -2.0], 0.5);
    let spec = TargetSpec::IsotropicGaussian {
        mean: mu.clone(),
        sigma,
    };
    let oracle = OracleEps::new(sched.clone(), &spec).unwrap();
    let count = 10_000;
    let out = generate_endpoints(&sched, &oracle, &Ddpm, count, &Start::Noise, 42).unwrap();
    for (j, m) in mu.iter().enumerate() {
        let (mean, var) = column_moments(&out, j);
        let tol = 4.0 * sigma / (count as f64).sqrt();
        assert!((mean - m).abs() < tol, "coord {j}: mean {mean} vs {m}");
        assert!((var / (sigma * sigma) - 1.0).abs() < 0.1, "coord {j}: variance {var}");
    }
}

#[test]
fn ddim_with_single_training_point_returns_it() {
    let sched = Schedule::linear(1000, 1e-4, 0.02).unwrap().subsequence(50).unwrap();
    let point = vec![0.3, -1.7, 2.2];
    let data = Arc::new(Dataset::from_rows(std::slice::from_ref(&point)).unwrap());
    let pred = EpsEmpirical::new(sched.clone(), data).unwrap();
    let out = generate_endpoints(&sched, &pred, &Ddim, 16, &Start::Noise, 3).unwrap();
    for row in out.iter_rows() {
        for (a, b) in row.iter().zip(&point) {
            assert!((a - b).abs() < 1e-10, "{row:?}");
        }
    }
}

#[test]
fn ddim_endpoint_is_posterior_mean_at_first_step() {
    let sched = Schedule::linear(1000, 1e-4, 0.02).unwrap().subsequence(50).unwrap();
    let data = Arc::new(emopt::datasets::sample_dataset(&TargetSpec::unit_gaussian(2), 8, 1).unwrap());
    let pred = EpsEmpirical::new(sched.clone(), data).unwrap();
    for tr in generate(&sched, &pred, &Ddim, 16, &Start::Noise, 2).unwrap() {
        let want = pred.posterior_mean(tr.state_at(1).unwrap(), 1).unwrap();
        for (a, b) in tr.final_state().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn every_sampler_replays_its_trajectories() {
    let sched = Schedule::linear(200, 1e-4, 0.02).unwrap().subsequence(20).unwrap();
    let data = Arc::new(emopt::datasets::sample_dataset(&TargetSpec::unit_gaussian(3), 16, 4).unwrap());
    let pred = EpsEmpirical::new(sched.clone(), data).unwrap();
    for sampler in [&Ddpm as &dyn emopt::Sampler, &Ddim] {
        let trajs = generate(&sched, &pred, sampler, 5, &Start::Noise, 17).unwrap();
        for tr in &trajs {
            assert_eq!(tr.states.len(), sched.steps() + 1);
            assert!(replay(tr, &sched, &pred, sampler, &Start::Noise).unwrap());
        }
    }
}

#[test]
fn prev_status_sampler_rejects_eps_predictor() {
    let sched = Schedule::linear(100, 1e-4, 0.02).unwrap();
    let data = Arc::new(Dataset::from_rows(&[vec![0.0]]).unwrap());
    let pred = EpsEmpirical::new(sched.clone(), data).unwrap();
    let r = generate(&sched, &pred, &PrevStatus { stochastic: true }, 1, &Start::Noise, 0);
    assert!(matches!(r, Err(emopt::Error::Config(_))), "{r:?}");
}
