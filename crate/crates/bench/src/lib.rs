//! Criterion benchmarks for `fiemkit`; see `benches/`.
