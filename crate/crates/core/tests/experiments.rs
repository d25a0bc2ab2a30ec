use emopt::experiments::{self, enforce, execute, run_all, ExperimentConfig};
use emopt::{Error, Schedule};

fn cfg(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for (k, v) in pairs {
        c.set(k, v);
    }
    c
}

const SMALL_CONVERGE: &[(&str, &str)] = &[
    ("kind", "converge"),
    ("seed", "9"),
    ("steps", "20"),
    ("ns", "20,200"),
    ("replicates", "2"),
    ("probes", "32"),
];

#[test]
fn converge_on_point_cloud_is_exact() {
    let c = cfg(&[
        ("kind", "converge"),
        ("seed", "1"),
        ("steps", "20"),
        ("ns", "5"),
        ("replicates", "1"),
        ("probes", "64"),
        ("target", "points:values=0,0|1,2|-1,0.5"),
    ]);
    let r = execute(&c).unwrap();
    enforce("cloud", &r).unwrap();
    assert!(r.checks.iter().any(|c| c.name == "exact_identity" && c.passed));
}

#[test]
fn converge_xi_mode_is_rescaled_eps_mode() {
    let eps = execute(&cfg(SMALL_CONVERGE)).unwrap();
    let mut c = cfg(SMALL_CONVERGE);
    c.set("predictor", "xi");
    let xi = execute(&c).unwrap();
    let sched = Schedule::linear(1000, 1e-4, 0.02).unwrap().subsequence(20).unwrap();
    let mut compared = 0;
    for (k, v) in &eps.scalars {
        let Some(rest) = k.strip_prefix("median.t") else { continue };
        let t: usize = rest.split('.').next().unwrap().parse().unwrap();
        let want = v / sched.one_minus_alpha_bar(t).unwrap().sqrt();
        let got = xi.scalars[k];
        assert!((got - want).abs() <= 1e-10 * want.abs(), "{k}: {got} vs {want}");
        compared += 1;
    }
    assert_eq!(compared, 6);
}

#[test]
fn run_all_on_empty_directory_runs_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_all(tmp.path(), &tmp.path().join("out")).unwrap();
    assert!(out.is_empty());
}

#[test]
fn failing_contract_names_the_experiment() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("strict.cfg"),
        "kind = converge\nseed = 2\nsteps = 20\nns = 20,40\nreplicates = 1\nprobes = 16\nmax-rmse = 0\n",
    )
    .unwrap();
    let out = run_all(tmp.path(), &tmp.path().join("out")).unwrap();
    assert_eq!(out.len(), 1);
    match &out[0].result {
        Err(Error::Contract { experiment, check, .. }) => {
            assert_eq!(experiment, "strict");
            assert_eq!(check, "largest_n_below_threshold");
        }
        other => panic!("expected a contract error, got {other:?}"),
    }
    assert!(out[0].report_dir.join("scalars.csv").exists());
}

#[test]
fn echoed_config_reproduces_identical_report() {
    let tmp = tempfile::tempdir().unwrap();
    let first = execute(&cfg(SMALL_CONVERGE)).unwrap();
    let a = tmp.path().join("a");
    first.write(&a).unwrap();

    let echoed = std::fs::read_to_string(a.join("config.txt")).unwrap();
    let body: String = echoed.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let again = execute(&body.parse::<ExperimentConfig>().unwrap()).unwrap();
    let b = tmp.path().join("b");
    again.write(&b).unwrap();

    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in names {
        assert_eq!(
            std::fs::read(a.join(&name)).unwrap(),
            std::fs::read(b.join(&name)).unwrap(),
            "{name:?} differs"
        );
    }
}

#[test]
fn heldout_overlap_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("pts.csv");
    std::fs::write(&path, "0.0,1.0\n2.0,3.0\n-1.0,0.5\n").unwrap();
    let p = path.display().to_string();
    let c = cfg(&[
        ("kind", "partial-recover"),
        ("seed", "1"),
        ("dataset", &p),
        ("heldout-dataset", &p),
        ("replicates", "1"),
    ]);
    match execute(&c) {
        Err(Error::Experiment { experiment, source }) => {
            assert_eq!(experiment, "partial-recover");
            assert!(matches!(*source, Error::Config(_)), "{source}");
        }
        other => panic!("expected an experiment error, got {other:?}"),
    }
}

#[test]
fn converge_needs_an_analytic_target() {
    let c = cfg(&[("kind", "converge"), ("seed", "1"), ("target", "ring:dim=2")]);
    match execute(&c) {
        Err(Error::Experiment { source, .. }) => assert!(matches!(*source, Error::Config(_)), "{source}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn unknown_key_and_missing_seed_are_rejected() {
    assert!(matches!(
        execute(&cfg(&[("kind", "mi-bound"), ("seed", "1"), ("radius-typo", "2")])),
        Err(Error::Experiment { .. })
    ));
    assert!(execute(&cfg(&[("kind", "mi-bound")])).is_err());
    assert!(experiments::by_kind("no-such-kind").is_err());
}
