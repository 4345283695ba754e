//! Benchmark-only crate; see `benches/hot_paths.rs`. There is no library
//! code here, the target exists so `cargo bench` has a home in the
//! workspace without dragging criterion into the core crate's dev-deps.
