//! Holds the `acceptance` test target. Run it with `cargo test -p s3flow-suite --test acceptance -- --nocapture`.
