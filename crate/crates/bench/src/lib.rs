//! Benchmarks for the nematic-core kernels live under `benches/`.
