use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use weylab_core::harness::{
    acceptance_suite, emit, run_experiment, run_suite, Experiment, ExperimentConfig, SuiteConfig,
};
use weylab_core::operators::{build_laplacian_power, build_multiplication, commutator, Laplacian};
use weylab_core::spectra::{little_ideal_diagnostic, singular_values};
use weylab_core::{LatticeBasis, SphereFunction, TorusFunction};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

#[test]
fn shipped_acceptance_config_matches_builtin() {
    let shipped = SuiteConfig::load(&config_path("acceptance.json")).unwrap();
    assert_eq!(shipped, acceptance_suite());
    assert_eq!(SuiteConfig::from_json(&shipped.to_json()).unwrap(), shipped);
}

#[test]
fn example_suite_passes() {
    let suite = SuiteConfig::load(&config_path("examples.json")).unwrap();
    for r in run_suite(&suite) {
        let failed: Vec<_> = r.failed_gates().map(|g| g.name.clone()).collect();
        assert!(r.passed, "{} failed {failed:?}: {:?}", r.name, r.flags);
    }
}

#[test]
fn duplicate_names_are_rejected() {
    let mut suite = acceptance_suite();
    suite.experiments.push(suite.experiments[0].clone());
    assert!(SuiteConfig::from_json(&suite.to_json()).is_err());
}

#[test]
fn identical_config_gives_identical_files() {
    let cfg = ExperimentConfig::new(Experiment::E3 {
        d: 2,
        g: SphereFunction::coordinate_power(2, 1, 2),
        radius: 30.0,
        tol: 0.05,
        slope_tol: None,
        stability: Some(1.5),
        point_budget: 100_000,
    })
    .named("determinism");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    emit(&run_experiment(&cfg).unwrap(), a.path()).unwrap();
    emit(&run_experiment(&cfg).unwrap(), b.path()).unwrap();
    let csv = "determinism-spectrum.csv";
    let left = fs::read(a.path().join(csv)).unwrap();
    assert!(!left.is_empty());
    assert_eq!(left, fs::read(b.path().join(csv)).unwrap());
}

#[test]
fn constant_f_commutes_exactly() {
    let basis = Arc::new(LatticeBasis::enumerate(2, 12.0).unwrap());
    let m = build_multiplication(&basis, &TorusFunction::constant(2, 3.0)).unwrap();
    let c = commutator(
        &m,
        &build_laplacian_power(&basis, -1.0, Laplacian::Homogeneous),
    )
    .unwrap();
    assert_eq!(c.max_abs_entry(), 0.0);
}

#[test]
fn multiplication_against_laplacian_alone_is_little() {
    let basis = Arc::new(LatticeBasis::enumerate(2, 20.0).unwrap());
    let m = build_multiplication(&basis, &TorusFunction::cosine(2, 0, 2.0)).unwrap();
    let c = commutator(
        &m,
        &build_laplacian_power(&basis, -1.0, Laplacian::Homogeneous),
    )
    .unwrap();
    let s = singular_values(&c).unwrap();
    let diag = little_ideal_diagnostic(&s, 2.0).unwrap();
    assert!(diag.is_little(0.5), "rho = {}", diag.rho);
}
