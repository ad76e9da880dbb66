//! Holds the workspace acceptance suite in `tests/acceptance.rs`; it runs as
//! a separate package so a failing criterion does not stop the other test
//! binaries. Run it alone with `cargo test -p wfs-validation`.
