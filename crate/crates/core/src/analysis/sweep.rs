//! Re-estimates the team-size regression for publication cohorts measured at
//! different citation windows.

use alloc::vec::Vec;

use crate::analysis::ols::{ols_fit, regression_rows, RegressionFit, RegressionSpec, SampleReport};
use crate::analysis::AnalysisError;
use crate::disruption::{batch_compute, DisruptionResult, ResolvedVariants};
use crate::filter::Eligibility;
use crate::graph::{CitationGraph, WindowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cohort {
    /// Inclusive publication-year range.
    pub first_year: i16,
    pub last_year: i16,
    pub window: WindowSpec,
}

impl Cohort {
    pub fn contains(&self, year: i16) -> bool {
        year >= self.first_year && year <= self.last_year
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cohort: Cohort,
    pub sample: SampleReport,
    pub fit: Result<RegressionFit, AnalysisError>,
}

/// Fits one cohort from already computed results. Results outside the cohort
/// years are ignored.
pub fn sweep_row(cohort: Cohort, results: &[DisruptionResult], spec: &RegressionSpec) -> SweepRow {
    let members: Vec<DisruptionResult> = results
        .iter()
        .filter(|r| cohort.contains(r.year))
        .cloned()
        .collect();
    let (rows, sample) = regression_rows(&members, spec);
    SweepRow {
        cohort,
        sample,
        fit: ols_fit(&rows, spec),
    }
}

pub fn window_sweep(
    g: &CitationGraph,
    cohorts: &[Cohort],
    spec: &RegressionSpec,
    eligibility: &Eligibility,
) -> Vec<SweepRow> {
    cohorts
        .iter()
        .map(|&cohort| {
            let members = Eligibility::from_mask(
                (0..g.len() as u32)
                    .map(|ix| eligibility.is_eligible(ix) && cohort.contains(g.year(ix)))
                    .collect(),
            );
            let results: Vec<DisruptionResult> =
                batch_compute(g, cohort.window, ResolvedVariants::default(), &members).collect();
            sweep_row(cohort, &results, spec)
        })
        .collect()
}
