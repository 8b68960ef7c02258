//! Criterion benchmarks for the calibration kernels; see `benches/kernels.rs`.
