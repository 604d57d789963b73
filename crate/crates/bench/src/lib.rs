//! Criterion benchmarks for the solver stack; see `benches/`.
