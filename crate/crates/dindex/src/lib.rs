//! Files, parallel execution and the command line around `dindex-core`.
//!
//! - [`tsv`] reads `papers.tsv` and `edges.tsv`,
//! - [`snapshot`] saves and loads checksummed binary graphs,
//! - [`batch`] runs the per-paper computation on a worker pool,
//! - [`output`] writes and reads result files,
//! - [`synth`] generates corpora with known structure,
//! - [`cli`] is the `dindex` command.

pub mod batch;
pub mod cli;
pub mod ids;
pub mod log;
pub mod output;
pub mod snapshot;
pub mod synth;
pub mod tsv;

pub use dindex_core as core;
