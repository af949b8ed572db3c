//! Criterion benchmarks for the perfolab kernels; see `benches/kernels.rs`.
