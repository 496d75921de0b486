//! Criterion benchmarks for aperture-mi live in `benches/`.
