//! Benchmarks for the psdoflow kernels live in `benches/`.
