//! Benchmark host crate. All content lives in `benches/`.
