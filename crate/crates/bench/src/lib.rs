//! Benchmark-only package; see `benches/hexagon.rs`.
