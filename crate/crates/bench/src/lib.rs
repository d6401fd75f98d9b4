//! Criterion benchmarks for `spinqaoa-core`; run with `cargo bench -p spinqaoa-bench`.
