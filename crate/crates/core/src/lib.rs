//! Disruption-index analytics over a frozen citation graph.
//!
//! This crate is `no_std` (it needs `alloc`) and carries only the algorithmic
//! pieces: the compressed citation graph, citer classification and the
//! disruption family of indices, Zipf fits of reference citation ranks, and
//! the corpus studies (field overlap, distribution summaries, reference-length
//! strata, fixed-effects OLS and the citation-window sweep). File formats,
//! parallel batch execution and the command line live in the `dindex` crate.
//!
//! The usual flow is:
//!
//! 1. [`graph::build_graph`] from records and `(citer, cited)` pairs,
//! 2. [`filter::apply_filter`] to mark which papers are scored,
//! 3. [`disruption::batch_compute`] (or the per-paper operations),
//! 4. the studies in [`analysis`] and [`zipf`] on the resulting rows.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod disruption;
pub mod filter;
pub mod graph;
pub mod zipf;

mod stats;

pub use disruption::{
    batch_compute, classify_citers, d_index, d_variants, decompose, CiterClassification,
    Classifier, DisruptionError, DisruptionResult, ResolvedVariants, ResultFlags, VariantConfig,
};
pub use filter::{apply_filter, CorpusFilter, Eligibility, FilterReport};
pub use graph::{
    build_graph, AuthorId, BuildReport, CitationGraph, DocType, GraphError, PaperId, PaperRecord,
    WindowSpec,
};
pub use zipf::{RankSeries, ZipfConfig, ZipfError, ZipfFit};
