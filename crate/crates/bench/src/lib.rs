//! Criterion benchmarks for the weylab kernels; see `benches/kernels.rs`.
