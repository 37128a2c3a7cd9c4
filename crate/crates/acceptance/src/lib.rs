//! Acceptance suite for the loop-index workspace; see `tests/acceptance.rs`.
