//! Benchmark-only crate; see `benches/controller.rs`.
