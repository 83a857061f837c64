use alloc::vec::Vec;

use crate::analysis::AnalysisError;
use crate::disruption::DisruptionResult;
use crate::stats;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SignFractions {
    pub negative: f64,
    pub zero: f64,
    pub positive: f64,
}

impl SignFractions {
    fn of(values: &[f64]) -> SignFractions {
        let n = values.len() as f64;
        if values.is_empty() {
            return SignFractions::default();
        }
        let count = |f: fn(&f64) -> bool| values.iter().filter(|v| f(v)).count() as f64 / n;
        SignFractions {
            negative: count(|v| *v < 0.0),
            zero: count(|v| *v == 0.0),
            positive: count(|v| *v > 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BurdenFractions {
    pub below_one: f64,
    pub one: f64,
    pub above_one: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSummary {
    pub n: usize,
    pub min_citations: u64,
    pub median_d_p: Option<f64>,
    pub median_b_p: Option<f64>,
    pub median_d0: Option<f64>,
    pub d_p: SignFractions,
    pub d0: SignFractions,
    pub b_p: BurdenFractions,
    /// `median(d_p) / (1 + median(b_p))`, the typical D-index implied by the
    /// two factors.
    pub characteristic_d0: Option<f64>,
}

/// Medians and sign shares of `d_p`, `b_p` and `D0` over papers with at least
/// `min_citations` citations in the window.
pub fn distribution_summary(
    results: &[DisruptionResult],
    min_citations: u64,
) -> Result<DistributionSummary, AnalysisError> {
    let selected: Vec<&DisruptionResult> = results
        .iter()
        .filter(|r| r.c_p >= min_citations && !r.flags.undefined())
        .collect();
    if selected.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut d_p: Vec<f64> = selected.iter().filter_map(|r| r.d_p).collect();
    let mut b_p: Vec<f64> = selected.iter().filter_map(|r| r.b_p).collect();
    let mut d0: Vec<f64> = selected.iter().filter_map(|r| r.d0).collect();
    let d_p_signs = SignFractions::of(&d_p);
    let d0_signs = SignFractions::of(&d0);
    let burden = SignFractions::of(&b_p.iter().map(|b| b - 1.0).collect::<Vec<_>>());
    let median_d_p = stats::median(&mut d_p);
    let median_b_p = stats::median(&mut b_p);
    Ok(DistributionSummary {
        n: selected.len(),
        min_citations,
        median_d_p,
        median_b_p,
        median_d0: stats::median(&mut d0),
        d_p: d_p_signs,
        d0: d0_signs,
        b_p: BurdenFractions {
            below_one: burden.negative,
            one: burden.zero,
            above_one: burden.positive,
        },
        characteristic_d0: median_d_p.zip(median_b_p).map(|(d, b)| d / (1.0 + b)),
    })
}
