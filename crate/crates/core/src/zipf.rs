//! Zipf fits of a paper's reference citations by decreasing rank.
//!
//! The model is `C_r = c / (b + r)^a` for ranks `r = 1..N`. It is fitted by
//! least squares in log space, `Σ (ln(C_r + s) - ln c + a ln(b + r))²`, where
//! `s` is a smoothing offset (1 by default) that keeps uncited references in
//! the fit. For fixed `b` the optimal `ln c` and `a` are closed form, so the
//! search runs a coarse `(a, b)` grid and then refines `b` by golden-section
//! search on the profiled objective.

use alloc::vec::Vec;

use thiserror::Error;

use crate::graph::{CitationGraph, GraphError, PaperId, WindowSpec};
use crate::stats;

/// References needed before a fit is attempted.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZipfError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("paper {0} has no references")]
    NoReferences(PaperId),
    #[error("need at least {MIN_FIT_POINTS} positive counts, got {positive}")]
    InsufficientData { positive: usize },
    #[error("series has zero total citations")]
    ZeroTotal,
    #[error("closed-form C_max/C_total needs a > 1, got a = {0}")]
    ExponentTooSmall(f64),
}

/// Citation counts of a paper's references, largest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankSeries {
    pub focal: PaperId,
    pub citations_by_rank: Vec<u64>,
}

impl RankSeries {
    pub fn n(&self) -> usize {
        self.citations_by_rank.len()
    }

    pub fn total(&self) -> u64 {
        self.citations_by_rank.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfConfig {
    /// Added to every count before taking logs. With `0.0` uncited
    /// references are left out of the fit.
    pub smoothing: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub a_step: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub b_step: f64,
    /// Golden-section search stops once the `b` bracket is this narrow.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for ZipfConfig {
    fn default() -> Self {
        ZipfConfig {
            smoothing: 1.0,
            a_min: 0.1,
            a_max: 5.0,
            a_step: 0.1,
            b_min: 0.0,
            b_max: 20.0,
            b_step: 0.25,
            tolerance: 1e-9,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitFlags {
    /// Refinement hit the iteration cap; the best point found so far is kept.
    pub non_converged: bool,
    /// Flat series or exponent pinned at its lower bound.
    pub non_zipf: bool,
    /// `a` or `b` ended on the edge of the search box.
    pub at_boundary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Sum of squared log residuals.
    pub sse: f64,
    pub n_points: usize,
    pub flags: FitFlags,
}

impl ZipfFit {
    pub fn theoretical_ratio(&self) -> Result<f64, ZipfError> {
        cmax_ratio_theoretical(self.a, self.b)
    }

    /// Model value at rank `r`, in count units (smoothing removed).
    pub fn predict(&self, rank: usize, smoothing: f64) -> f64 {
        self.c / libm::pow(self.b + rank as f64, self.a) - smoothing
    }
}

/// Citation counts of `p`'s references in `p`'s window, sorted descending.
/// Uncited references stay in the series as zeros.
pub fn rank_series(
    g: &CitationGraph,
    p: PaperId,
    window: WindowSpec,
) -> Result<RankSeries, ZipfError> {
    let ix = g.require(p)?;
    let refs = g.refs_ix(ix);
    if refs.is_empty() {
        return Err(ZipfError::NoReferences(p));
    }
    let anchor = g.year(ix);
    let mut counts: Vec<u64> = refs
        .iter()
        .map(|&r| g.count_citers_ix(r, anchor, window))
        .collect();
    counts.sort_unstable_by(|a, b| b.cmp(a));
    Ok(RankSeries {
        focal: p,
        citations_by_rank: counts,
    })
}

pub fn cmax_ratio_empirical(series: &RankSeries) -> Result<f64, ZipfError> {
    let total = series.total();
    if total == 0 {
        return Err(ZipfError::ZeroTotal);
    }
    let max = series.citations_by_rank.iter().copied().max().unwrap_or(0);
    Ok(max as f64 / total as f64)
}

/// `(a - 1) / (1 + b)`, valid only for `a > 1`.
pub fn cmax_ratio_theoretical(a: f64, b: f64) -> Result<f64, ZipfError> {
    if a <= 1.0 || a.is_nan() {
        return Err(ZipfError::ExponentTooSmall(a));
    }
    Ok((a - 1.0) / (1.0 + b))
}

pub fn fit_zipf(series: &RankSeries, cfg: &ZipfConfig) -> Result<ZipfFit, ZipfError> {
    let values: Vec<f64> = series.citations_by_rank.iter().map(|&c| c as f64).collect();
    fit_values(&values, cfg)
}

/// Ranks and `ln(C_r + s)` of the points that enter the fit.
struct Points {
    ranks: Vec<f64>,
    logs: Vec<f64>,
}

impl Points {
    fn new(values: &[f64], smoothing: f64) -> Points {
        let mut ranks = Vec::with_capacity(values.len());
        let mut logs = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            let shifted = v + smoothing;
            if shifted > 0.0 {
                ranks.push((i + 1) as f64);
                logs.push(libm::log(shifted));
            }
        }
        Points { ranks, logs }
    }

    /// Best `a` (clamped to the box) for this `b`, with its SSE and `ln c`.
    fn profile(&self, b: f64, cfg: &ZipfConfig) -> (f64, f64, f64) {
        let n = self.logs.len() as f64;
        let mut lb = Vec::with_capacity(self.ranks.len());
        lb.extend(self.ranks.iter().map(|&r| libm::log(b + r)));
        let my = self.logs.iter().sum::<f64>() / n;
        let ml = lb.iter().sum::<f64>() / n;
        let (mut syy, mut sly, mut sll) = (0.0, 0.0, 0.0);
        for (&y, &l) in self.logs.iter().zip(&lb) {
            let (dy, dl) = (y - my, l - ml);
            syy += dy * dy;
            sly += dy * dl;
            sll += dl * dl;
        }
        let sse_at = |a: f64| (syy + 2.0 * a * sly + a * a * sll).max(0.0);
        let a = if sll > 0.0 { -sly / sll } else { cfg.a_min };
        let a = a.clamp(cfg.a_min, cfg.a_max);
        (a, sse_at(a), my + a * ml)
    }

    /// SSE at a fixed `(a, b)`, used for the coarse grid.
    fn grid_sse(&self, a: f64, b: f64) -> f64 {
        let n = self.logs.len() as f64;
        let z: Vec<f64> = self
            .logs
            .iter()
            .zip(&self.ranks)
            .map(|(&y, &r)| y + a * libm::log(b + r))
            .collect();
        let mz = z.iter().sum::<f64>() / n;
        z.iter().map(|v| (v - mz) * (v - mz)).sum()
    }
}

fn steps(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let count = libm::floor((hi - lo) / step + 1e-9) as usize;
    (0..=count).map(move |i| lo + i as f64 * step)
}

/// Fits raw (possibly fractional) counts given in rank order.
pub fn fit_values(values: &[f64], cfg: &ZipfConfig) -> Result<ZipfFit, ZipfError> {
    let positive = values.iter().filter(|&&v| v > 0.0).count();
    if positive < MIN_FIT_POINTS {
        return Err(ZipfError::InsufficientData { positive });
    }
    let pts = Points::new(values, cfg.smoothing);
    let n_points = pts.logs.len();
    let my = pts.logs.iter().sum::<f64>() / n_points as f64;
    let flat = pts
        .logs
        .iter()
        .all(|&y| libm::fabs(y - my) <= 1e-12 * libm::fabs(my).max(1.0));
    if flat {
        return Ok(ZipfFit {
            a: 0.0,
            b: 0.0,
            c: libm::exp(my),
            sse: 0.0,
            n_points,
            flags: FitFlags {
                non_zipf: true,
                ..FitFlags::default()
            },
        });
    }

    let mut best = (f64::INFINITY, cfg.a_min, cfg.b_min);
    for b in steps(cfg.b_min, cfg.b_max, cfg.b_step) {
        for a in steps(cfg.a_min, cfg.a_max, cfg.a_step) {
            let sse = pts.grid_sse(a, b);
            if sse < best.0 {
                best = (sse, a, b);
            }
        }
    }

    // Golden-section search on the profiled objective around the grid optimum.
    let (mut lo, mut hi) = (
        (best.2 - cfg.b_step).max(cfg.b_min),
        (best.2 + cfg.b_step).min(cfg.b_max),
    );
    let phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let f = |b: f64| pts.profile(b, cfg).1;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut iterations = 0;
    while hi - lo > cfg.tolerance && iterations < cfg.max_iterations {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
        iterations += 1;
    }
    let non_converged = hi - lo > cfg.tolerance;

    let mut b = 0.5 * (lo + hi);
    let (mut a, mut sse, mut ln_c) = pts.profile(b, cfg);
    // Keep the grid point if refinement did not improve on it.
    if sse.is_nan() || sse > best.0 {
        b = best.2;
        a = best.1;
        sse = best.0;
        ln_c = pts.logs.iter().sum::<f64>() / n_points as f64
            + a * pts.ranks.iter().map(|&r| libm::log(b + r)).sum::<f64>() / n_points as f64;
    }
    let edge = |v: f64, lo: f64, hi: f64| v <= lo + 1e-9 || v >= hi - 1e-9;
    Ok(ZipfFit {
        a,
        b,
        c: libm::exp(ln_c),
        sse,
        n_points,
        flags: FitFlags {
            non_converged,
            non_zipf: a <= cfg.a_min + 1e-9,
            at_boundary: edge(a, cfg.a_min, cfg.a_max) || edge(b, cfg.b_min, cfg.b_max),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyRow {
    pub paper: PaperId,
    pub n_refs: usize,
    pub fit: Result<ZipfFit, ZipfError>,
    pub ratio_emp: Option<f64>,
    pub ratio_theory: Option<f64>,
    pub series: Option<RankSeries>,
}

pub fn survey_row(
    g: &CitationGraph,
    p: PaperId,
    window: WindowSpec,
    cfg: &ZipfConfig,
) -> SurveyRow {
    match rank_series(g, p, window) {
        Ok(series) => {
            let fit = fit_zipf(&series, cfg);
            let ratio_theory = fit.as_ref().ok().and_then(|f| f.theoretical_ratio().ok());
            SurveyRow {
                paper: p,
                n_refs: series.n(),
                ratio_emp: cmax_ratio_empirical(&series).ok(),
                ratio_theory,
                fit,
                series: Some(series),
            }
        }
        Err(e) => SurveyRow {
            paper: p,
            n_refs: g.index_of(p).map(|ix| g.n_references(ix)).unwrap_or(0),
            fit: Err(e),
            ratio_emp: None,
            ratio_theory: None,
            series: None,
        },
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SurveySummary {
    pub n_papers: usize,
    pub n_fitted: usize,
    pub mean_n_refs: Option<f64>,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub frac_a_gt_1: Option<f64>,
    pub mean_ratio_emp: Option<f64>,
    pub mean_ratio_theory: Option<f64>,
}

pub fn summarize(rows: &[SurveyRow]) -> SurveySummary {
    let fits: Vec<&ZipfFit> = rows.iter().filter_map(|r| r.fit.as_ref().ok()).collect();
    SurveySummary {
        n_papers: rows.len(),
        n_fitted: fits.len(),
        mean_n_refs: stats::mean(rows.iter().map(|r| r.n_refs as f64)),
        mean_a: stats::mean(fits.iter().map(|f| f.a)),
        mean_b: stats::mean(fits.iter().map(|f| f.b)),
        frac_a_gt_1: stats::mean(fits.iter().map(|f| (f.a > 1.0) as u8 as f64)),
        mean_ratio_emp: stats::mean(rows.iter().filter_map(|r| r.ratio_emp)),
        mean_ratio_theory: stats::mean(rows.iter().filter_map(|r| r.ratio_theory)),
    }
}

/// One fit over all papers: the mean count at each rank across the papers
/// that have a reference at that rank.
pub fn pooled_fit(series: &[&RankSeries], cfg: &ZipfConfig) -> Result<ZipfFit, ZipfError> {
    let max_n = series.iter().map(|s| s.n()).max().unwrap_or(0);
    let mut sums = alloc::vec![0.0f64; max_n];
    let mut counts = alloc::vec![0usize; max_n];
    for s in series {
        for (r, &c) in s.citations_by_rank.iter().enumerate() {
            sums[r] += c as f64;
            counts[r] += 1;
        }
    }
    let means: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| s / n as f64)
        .collect();
    fit_values(&means, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZipfSurvey {
    pub rows: Vec<SurveyRow>,
    pub summary: SurveySummary,
    pub pooled: Option<Result<ZipfFit, ZipfError>>,
}

pub fn finish_survey(rows: Vec<SurveyRow>, cfg: &ZipfConfig) -> ZipfSurvey {
    let summary = summarize(&rows);
    let fitted: Vec<&RankSeries> = rows
        .iter()
        .filter(|r| r.fit.is_ok())
        .filter_map(|r| r.series.as_ref())
        .collect();
    let pooled = (!fitted.is_empty()).then(|| pooled_fit(&fitted, cfg));
    ZipfSurvey {
        rows,
        summary,
        pooled,
    }
}

pub fn zipf_survey(
    g: &CitationGraph,
    sample: &[PaperId],
    window: WindowSpec,
    cfg: &ZipfConfig,
) -> ZipfSurvey {
    let rows = sample
        .iter()
        .map(|&p| survey_row(g, p, window, cfg))
        .collect();
    finish_survey(rows, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, PaperRecord};
    use alloc::vec;

    fn zipf_values(a: f64, b: f64, c: f64, n: usize) -> Vec<f64> {
        (1..=n).map(|r| c / libm::pow(b + r as f64, a)).collect()
    }

    fn exact() -> ZipfConfig {
        ZipfConfig {
            smoothing: 0.0,
            ..ZipfConfig::default()
        }
    }

    #[test]
    fn recovers_noiseless_parameters() {
        let fit = fit_values(&zipf_values(2.0, 1.4, 100.0, 29), &exact()).unwrap();
        assert!((fit.a - 2.0).abs() < 0.05, "a = {}", fit.a);
        assert!((fit.b - 1.4).abs() < 0.2, "b = {}", fit.b);
        assert!((fit.c - 100.0).abs() < 1.0);
        assert!(!fit.flags.non_converged);
    }

    #[test]
    fn flat_series_is_not_zipf() {
        let s = RankSeries {
            focal: PaperId(1),
            citations_by_rank: vec![5; 10],
        };
        let fit = fit_zipf(&s, &ZipfConfig::default()).unwrap();
        assert!(fit.a < 0.05);
        assert!(fit.flags.non_zipf);
    }

    #[test]
    fn needs_three_positive_counts() {
        let s = RankSeries {
            focal: PaperId(1),
            citations_by_rank: vec![4, 2, 0, 0],
        };
        assert_eq!(
            fit_zipf(&s, &ZipfConfig::default()),
            Err(ZipfError::InsufficientData { positive: 2 })
        );
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let cfg = ZipfConfig {
            max_iterations: 1,
            ..exact()
        };
        let fit = fit_values(&zipf_values(2.0, 1.4, 100.0, 29), &cfg).unwrap();
        assert!(fit.flags.non_converged);
    }

    #[test]
    fn empirical_ratio() {
        let s = |v: Vec<u64>| RankSeries {
            focal: PaperId(1),
            citations_by_rank: v,
        };
        assert_eq!(cmax_ratio_empirical(&s(vec![9, 5, 2])).unwrap(), 0.5625);
        assert_eq!(cmax_ratio_empirical(&s(vec![7])).unwrap(), 1.0);
        assert_eq!(
            cmax_ratio_empirical(&s(vec![0, 0])),
            Err(ZipfError::ZeroTotal)
        );
    }

    #[test]
    fn theoretical_ratio() {
        assert!((cmax_ratio_theoretical(2.0, 1.4).unwrap() - 0.41667).abs() < 1e-5);
        assert!(cmax_ratio_theoretical(1.0001, 1.4).unwrap() < 1e-4);
        assert_eq!(cmax_ratio_theoretical(2.0, 0.0).unwrap(), 1.0);
        assert_eq!(
            cmax_ratio_theoretical(1.0, 0.0),
            Err(ZipfError::ExponentTooSmall(1.0))
        );
    }

    fn rec(id: u64, year: i16) -> PaperRecord {
        PaperRecord {
            id: PaperId(id),
            year,
            ..PaperRecord::default()
        }
    }

    #[test]
    fn rank_series_sorts_and_keeps_zeros() {
        // Focal 1 cites 10, 11, 12, 13; in its window they get 2, 9, 5 and 0
        // citations (the focal's own citation included).
        let mut records = vec![rec(1, 2000)];
        let mut edges = vec![];
        let mut next = 100;
        for (r, extra) in [(10u64, 1usize), (11, 8), (12, 4), (13, 0)] {
            records.push(rec(r, 1990));
            edges.push((PaperId(1), PaperId(r)));
            for _ in 0..extra {
                records.push(rec(next, 2001));
                edges.push((PaperId(next), PaperId(r)));
                next += 1;
            }
        }
        records.push(rec(2, 2000));
        edges.push((PaperId(2), PaperId(13)));
        let (g, _) = build_graph(records, edges).unwrap();
        let s = rank_series(&g, PaperId(1), WindowSpec::Unlimited).unwrap();
        assert_eq!(s.citations_by_rank, vec![9, 5, 2, 2]);
        assert!(matches!(
            rank_series(&g, PaperId(2), WindowSpec::Unlimited).map(|s| s.n()),
            Ok(1)
        ));
        assert_eq!(
            rank_series(&g, PaperId(10), WindowSpec::Unlimited),
            Err(ZipfError::NoReferences(PaperId(10)))
        );
    }

    #[test]
    fn survey_summary_and_pooled_fit() {
        let s1 = RankSeries {
            focal: PaperId(1),
            citations_by_rank: zipf_values(2.0, 1.4, 1e5, 20)
                .into_iter()
                .map(|v| libm::round(v) as u64)
                .collect(),
        };
        let rows = vec![SurveyRow {
            paper: PaperId(1),
            n_refs: 20,
            fit: fit_zipf(&s1, &ZipfConfig::default()),
            ratio_emp: cmax_ratio_empirical(&s1).ok(),
            ratio_theory: None,
            series: Some(s1.clone()),
        }];
        let survey = finish_survey(rows, &ZipfConfig::default());
        assert_eq!(survey.summary.n_fitted, 1);
        assert_eq!(survey.summary.frac_a_gt_1, Some(1.0));
        let pooled = survey.pooled.unwrap().unwrap();
        assert!((pooled.a - 2.0).abs() < 0.05);
        assert!(finish_survey(vec![], &ZipfConfig::default())
            .pooled
            .is_none());
    }

    #[test]
    fn scale_changes_only_c() {
        let base: Vec<f64> = zipf_values(1.8, 2.0, 5e4, 25)
            .iter()
            .map(|v| libm::round(*v))
            .collect();
        let scaled: Vec<f64> = base.iter().map(|v| v * 7.0).collect();
        let cfg = ZipfConfig::default();
        let (f1, f2) = (
            fit_values(&base, &cfg).unwrap(),
            fit_values(&scaled, &cfg).unwrap(),
        );
        assert!((f1.a - f2.a).abs() < 0.05, "{} vs {}", f1.a, f2.a);
        assert!((f1.b - f2.b).abs() < 0.05, "{} vs {}", f1.b, f2.b);
        assert!((f2.c / f1.c - 7.0).abs() < 0.5);
    }
}
