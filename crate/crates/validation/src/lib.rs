//! Holds the acceptance suite (`tests/acceptance.rs`) and its reference
//! oracles. The library itself is empty.
