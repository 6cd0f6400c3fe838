//! Criterion benchmarks for the homodyne crate; see `benches/`.
