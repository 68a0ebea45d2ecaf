//! Benchmarks for the probmusic pipeline live in `benches/`; run them with
//! `cargo bench -p probmusic-bench`.
