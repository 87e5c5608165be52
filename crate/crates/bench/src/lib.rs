//! Criterion benchmarks for tmcert-core; see `benches/`.
