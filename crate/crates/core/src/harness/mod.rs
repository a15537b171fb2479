//! Configuration-driven experiments and their reports.

mod config;
mod experiments;
mod report;

use rayon::prelude::*;

pub use config::{
    acceptance_suite, Experiment, ExperimentConfig, OperatorSpec, PolarGrid, SuiteConfig,
    TensorTerm, SCHEMA_VERSION,
};
pub use experiments::{
    run_clifford, run_e1_constants, run_e2_rearrangement_law, run_e3_diagonal_weyl,
    run_e4_indicator_localization, run_e5_tensor_sums, run_e6_commutator_decay,
    run_e7_quantized_derivative, run_e8_sequence_lemmas, run_experiment, E3Params, E4Params,
    E5Params, E7Params, FLAG_EXTRAPOLATED,
};
pub use report::{emit, load_reports, rel_error, write_atomic, Gate, Report, SpectrumOutput};

/// Thread count from `WEYLAB_THREADS`, else the available cores.
pub fn thread_count() -> usize {
    std::env::var("WEYLAB_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Sizes the global rayon pool and the dense-kernel parallelism. Later calls
/// keep the pool of the first one.
pub fn configure_threads() -> usize {
    let n = thread_count();
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    faer::set_global_parallelism(if n == 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    });
    n
}

/// Runs the experiments concurrently; a failing run yields a failed report.
pub fn run_suite(suite: &SuiteConfig) -> Vec<Report> {
    suite
        .experiments
        .par_iter()
        .map(|cfg| run_experiment(cfg).unwrap_or_else(|e| Report::failed(cfg.id(), cfg.name(), &e)))
        .collect()
}
