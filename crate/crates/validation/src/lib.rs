//! Holds the `acceptance` integration test: one `[name] PASS|FAIL` line per
//! criterion, each backed by an oracle that shares no code with the library.
//!
//! Run with `cargo test -p spin-triangle-validation --test acceptance`.
