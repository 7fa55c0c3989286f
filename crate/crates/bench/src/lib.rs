//! Criterion benchmarks for the mining pipeline live in `benches/`.
