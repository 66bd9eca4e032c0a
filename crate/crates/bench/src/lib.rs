//! Criterion benchmarks for the geometry and regression hot paths. See
//! `benches/pipeline.rs`.
