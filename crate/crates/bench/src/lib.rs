//! Criterion benchmarks for the closed-form, Monte-Carlo and gradient-ascent paths; see `benches/`.
