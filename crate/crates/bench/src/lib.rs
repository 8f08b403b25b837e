//! Criterion benchmarks for uqdc live under `benches/`.
