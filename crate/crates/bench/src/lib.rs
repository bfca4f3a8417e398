//! Criterion benchmarks for the registration search and the simulator live under `benches/`.
