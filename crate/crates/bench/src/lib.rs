//! Criterion benchmarks for halphen-core live under `benches/`.
