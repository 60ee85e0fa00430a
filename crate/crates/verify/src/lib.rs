//! Acceptance criteria for the workspace; run with `cargo test -p costlam-verify --test acceptance`.
