//! Benchmarks and analysis tools for the `glass` ordered map: feed parsing
//! and synthesis, locality histograms, amplification, the multi-copy
//! benchmark runner, cache-table "don't know" probabilities and memory
//! estimates.

pub mod amplify;
pub mod capacity;
pub mod dunno;
pub mod error;
pub mod events;
pub mod locality;
pub mod maps;
pub mod runner;
pub mod treap;
pub mod workload;

pub use error::BenchError;
