//! Holds the `acceptance` test target, which prints one PASS/FAIL line per
//! acceptance criterion. It lives in its own package so that a failing
//! criterion cannot stop the other suites under `cargo test --workspace`.
