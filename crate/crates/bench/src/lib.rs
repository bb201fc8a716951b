//! Benchmark harness for the simulator; see `benches/`.
