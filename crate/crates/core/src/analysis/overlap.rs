//! How often a paper shares a field with its most cited reference, against
//! the rate expected if fields were assigned at random.

use crate::analysis::AnalysisError;
use crate::disruption::DisruptionResult;
use crate::graph::{CitationGraph, WindowSpec, TAXONOMY_SIZE};

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Probability that two papers, each given `fields_per_paper` distinct fields
/// uniformly from a taxonomy of `taxonomy_size`, share at least one field:
/// `1 - C(n - k, k) / C(n, k)`.
///
/// The ratio is kept as a reduced fraction of `u128`s while it fits, and only
/// falls back to a floating-point product for very large `k`.
pub fn overlap_baseline(taxonomy_size: u64, fields_per_paper: u64) -> Result<f64, AnalysisError> {
    let (n, k) = (taxonomy_size, fields_per_paper);
    if k == 0 {
        return Err(AnalysisError::InvalidCounts(
            "fields_per_paper must be positive",
        ));
    }
    if n < k {
        return Err(AnalysisError::InvalidCounts(
            "taxonomy smaller than fields per paper",
        ));
    }
    if n - k < k {
        return Ok(1.0);
    }
    // C(n-k, k) / C(n, k) = prod_{i<k} (n-k-i) / (n-i)
    let (mut num, mut den) = (1u128, 1u128);
    let mut exact = true;
    for i in 0..k {
        let (a, b) = ((n - k - i) as u128, (n - i) as u128);
        match (num.checked_mul(a), den.checked_mul(b)) {
            (Some(x), Some(y)) => {
                let d = gcd(x, y);
                (num, den) = (x / d, y / d);
            }
            _ => {
                exact = false;
                break;
            }
        }
    }
    if exact {
        // 1 - num/den = (den - num) / den, one rounding.
        return Ok((den - num) as f64 / den as f64);
    }
    let mut ratio = 1.0f64;
    for i in 0..k {
        ratio *= (n - k - i) as f64 / (n - i) as f64;
    }
    Ok(1.0 - ratio)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapStudySpec {
    /// Papers need strictly more citations than this.
    pub min_citations: u64,
    /// Papers need a D-index strictly above this.
    pub min_d: f64,
    pub taxonomy_size: u16,
    pub fields_per_paper: u16,
}

impl Default for OverlapStudySpec {
    fn default() -> Self {
        OverlapStudySpec {
            min_citations: 100,
            min_d: 0.2,
            taxonomy_size: TAXONOMY_SIZE,
            fields_per_paper: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapStudy {
    pub selected: u64,
    pub n_pairs: u64,
    pub n_overlap: u64,
    /// Selected papers whose own or reference field list is empty.
    pub missing_fields: u64,
    pub rate: f64,
    pub baseline: f64,
}

fn intersects(a: &[u16], b: &[u16]) -> bool {
    let (mut x, mut y) = (0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            core::cmp::Ordering::Less => x += 1,
            core::cmp::Ordering::Greater => y += 1,
            core::cmp::Ordering::Equal => return true,
        }
    }
    false
}

pub fn overlap_empirical(
    g: &CitationGraph,
    results: &[DisruptionResult],
    spec: &OverlapStudySpec,
    window: WindowSpec,
) -> Result<OverlapStudy, AnalysisError> {
    if !(spec.min_d > -1.0 && spec.min_d <= 1.0) {
        return Err(AnalysisError::InvalidCounts("min_d must lie in (-1, 1]"));
    }
    if spec.fields_per_paper == 0 || spec.taxonomy_size < spec.fields_per_paper {
        return Err(AnalysisError::InvalidCounts(
            "taxonomy_size >= fields_per_paper >= 1",
        ));
    }
    let baseline = overlap_baseline(spec.taxonomy_size as u64, spec.fields_per_paper as u64)?;
    let mut study = OverlapStudy {
        selected: 0,
        n_pairs: 0,
        n_overlap: 0,
        missing_fields: 0,
        rate: 0.0,
        baseline,
    };
    for r in results {
        let passes = r.c_p > spec.min_citations && r.d0.is_some_and(|d| d > spec.min_d);
        if !passes {
            continue;
        }
        let ix = g.require(r.focal)?;
        study.selected += 1;
        let Some((top, _)) = g.most_cited_reference_ix(ix, window) else {
            continue;
        };
        let (mine, theirs) = (g.fields(ix), g.fields(top));
        if mine.is_empty() || theirs.is_empty() {
            study.missing_fields += 1;
            continue;
        }
        study.n_pairs += 1;
        study.n_overlap += intersects(mine, theirs) as u64;
    }
    if study.n_pairs == 0 {
        return Err(AnalysisError::EmptySelection);
    }
    study.rate = study.n_overlap as f64 / study.n_pairs as f64;
    Ok(study)
}
