//! Benchmarks for the `dcvoc` kernels live in `benches/`.
