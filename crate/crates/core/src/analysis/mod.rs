//! Corpus-level studies built on top of per-paper disruption results.

use thiserror::Error;

use crate::graph::GraphError;

pub mod ols;
pub mod overlap;
pub mod reflen;
pub mod summary;
pub mod sweep;

pub use ols::{
    marginal_effect_team_size, ols_fit, regression_rows, within_year_slopes, Coefficients,
    RegressionFit, RegressionRow, RegressionSpec, SampleReport, SeKind,
};
pub use overlap::{overlap_baseline, overlap_empirical, OverlapStudy, OverlapStudySpec};
pub use reflen::{reference_length_independence, RefLenConfig, StratumReport};
pub use summary::{distribution_summary, DistributionSummary};
pub use sweep::{sweep_row, window_sweep, Cohort, SweepRow};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid counts: {0}")]
    InvalidCounts(&'static str),
    #[error("no papers passed the selection")]
    EmptySelection,
    #[error("no results to summarize")]
    EmptyInput,
    #[error("stratum has too few distinct reference lengths")]
    EmptyStratum,
    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },
    #[error("{n} rows cannot identify {params} parameters")]
    InsufficientSample { n: usize, params: usize },
    #[error("team size must be positive, got {0}")]
    NonpositiveK(f64),
}
