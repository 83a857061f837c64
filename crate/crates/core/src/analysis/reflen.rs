//! Does the D-index depend on reference length once `d_p` and `b_p` are held
//! fixed? Papers in a narrow `d_p` band are grouped by burden level, and the
//! D-index is regressed on reference count within each group.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::analysis::AnalysisError;
use crate::disruption::DisruptionResult;
use crate::stats::{self, LineFit};

#[derive(Debug, Clone, PartialEq)]
pub struct RefLenConfig {
    /// Inclusive `d_p` band.
    pub d_band: (f64, f64),
    pub b_levels: Vec<f64>,
    /// A paper joins level `L` when `|b_p - L| <= level_tolerance * L`.
    pub level_tolerance: f64,
    pub bucket_width: u32,
    pub min_citations: u64,
}

impl Default for RefLenConfig {
    fn default() -> Self {
        RefLenConfig {
            d_band: (0.0, 0.05),
            b_levels: alloc::vec![1.0, 10.0, 100.0],
            level_tolerance: 0.05,
            bucket_width: 5,
            min_citations: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bucket {
    /// Smallest reference count in the bucket.
    pub lo: u32,
    pub n: usize,
    pub mean_n_refs: f64,
    pub mean_d0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope {
    pub slope: f64,
    pub se: Option<f64>,
    /// Normal-approximation 95% interval; `None` without a standard error.
    pub ci95: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StratumReport {
    pub level: f64,
    pub n: usize,
    pub mean_d_p: Option<f64>,
    /// `mean(d_p) / (1 + level)`.
    pub theoretical_d0: Option<f64>,
    pub buckets: Vec<Bucket>,
    pub slope: Result<Slope, AnalysisError>,
}

pub fn reference_length_independence(
    results: &[DisruptionResult],
    cfg: &RefLenConfig,
) -> Vec<StratumReport> {
    let width = cfg.bucket_width.max(1);
    cfg.b_levels
        .iter()
        .map(|&level| {
            let members: Vec<(&DisruptionResult, f64)> = results
                .iter()
                .filter(|r| r.c_p >= cfg.min_citations)
                .filter_map(|r| Some((r, r.d0?, r.d_p?, r.b_p?)))
                .filter(|&(_, _, d, b)| {
                    d >= cfg.d_band.0
                        && d <= cfg.d_band.1
                        && libm::fabs(b - level) <= cfg.level_tolerance * level
                })
                .map(|(r, d0, _, _)| (r, d0))
                .collect();
            let mean_d_p = stats::mean(members.iter().filter_map(|(r, _)| r.d_p));
            let mut groups: BTreeMap<u32, Vec<(f64, f64)>> = BTreeMap::new();
            for &(r, d0) in &members {
                groups
                    .entry(r.n_refs / width * width)
                    .or_default()
                    .push((r.n_refs as f64, d0));
            }
            let buckets: Vec<Bucket> = groups
                .iter()
                .map(|(&lo, pts)| Bucket {
                    lo,
                    n: pts.len(),
                    mean_n_refs: stats::mean(pts.iter().map(|p| p.0)).unwrap_or(0.0),
                    mean_d0: stats::mean(pts.iter().map(|p| p.1)).unwrap_or(0.0),
                })
                .collect();
            let slope = if buckets.len() < 2 {
                Err(AnalysisError::EmptyStratum)
            } else {
                let points: Vec<(f64, f64)> = members
                    .iter()
                    .map(|&(r, d0)| (r.n_refs as f64, d0))
                    .collect();
                stats::fit_line(&points)
                    .map(
                        |LineFit {
                             slope, slope_se, ..
                         }| Slope {
                            slope,
                            se: slope_se,
                            ci95: slope_se.map(|se| (slope - 1.96 * se, slope + 1.96 * se)),
                        },
                    )
                    .ok_or(AnalysisError::EmptyStratum)
            };
            StratumReport {
                level,
                n: members.len(),
                mean_d_p,
                theoretical_d0: mean_d_p.map(|d| d / (1.0 + level)),
                buckets,
                slope,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disruption::ResultFlags;
    use crate::graph::PaperId;
    use alloc::vec;

    fn result(n_refs: u32, d_p: f64, b_p: f64) -> DisruptionResult {
        DisruptionResult {
            focal: PaperId(n_refs as u64),
            year: 2000,
            n_refs,
            team_size: 1,
            n_i: 0,
            n_j: 0,
            n_k: 0,
            c_p: 50,
            c_max: 0,
            d0: Some(d_p / (1.0 + b_p)),
            d_p: Some(d_p),
            r_k: None,
            b_p: Some(b_p),
            d1: None,
            d2: None,
            d3: None,
            d4: None,
            flags: ResultFlags::NONE,
        }
    }

    #[test]
    fn flat_stratum_and_theory_line() {
        let rs: Vec<_> = (5..40).map(|n| result(n, 0.01, 100.0)).collect();
        let out = reference_length_independence(&rs, &RefLenConfig::default());
        let s = out.iter().find(|s| s.level == 100.0).unwrap();
        assert_eq!(s.n, 35);
        assert!((s.theoretical_d0.unwrap() - 0.01 / 101.0).abs() < 1e-15);
        assert!(s.slope.as_ref().unwrap().slope.abs() < 1e-12);
        // Other strata are empty.
        assert!(out
            .iter()
            .filter(|s| s.level != 100.0)
            .all(|s| s.slope.is_err()));
    }

    #[test]
    fn single_bucket_has_no_slope() {
        let rs = vec![result(10, 0.02, 10.0), result(11, 0.02, 10.0)];
        let out = reference_length_independence(&rs, &RefLenConfig::default());
        let s = out.iter().find(|s| s.level == 10.0).unwrap();
        assert_eq!(s.buckets.len(), 1);
        assert_eq!(s.slope, Err(AnalysisError::EmptyStratum));
    }
}
