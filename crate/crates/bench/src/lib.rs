//! Benchmarks for the logcolor pipeline live in `benches/`.
