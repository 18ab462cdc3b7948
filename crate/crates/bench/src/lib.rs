//! Benchmarks for `ifsim-core`; see `benches/`.
