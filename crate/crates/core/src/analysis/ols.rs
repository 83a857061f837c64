//! Team-size regression with yearly fixed effects:
//!
//! `D0 = b0 + b_k ln k + b_r ln r + b_c ln c + D_year + e`
//!
//! solved by ordinary least squares on the normal equations. Each row has at
//! most five non-zero design entries (intercept, three log predictors and one
//! year dummy), so the cross-product matrix is accumulated sparsely. The
//! earliest year is the omitted reference level.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::AnalysisError;
use crate::disruption::DisruptionResult;

/// Scaled Cholesky pivots below this mark a rank-deficient design.
const PIVOT_TOLERANCE: f64 = 1e-10;
const SLOPES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeKind {
    /// Homoskedastic standard errors.
    #[default]
    Classical,
    /// White heteroskedasticity-robust errors with the `n / (n - p)` correction.
    Hc1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionSpec {
    pub k_range: (f64, f64),
    pub r_range: (f64, f64),
    pub c_range: (f64, f64),
    pub se_kind: SeKind,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        RegressionSpec {
            k_range: (1.0, 10.0),
            r_range: (5.0, 50.0),
            c_range: (10.0, 1000.0),
            se_kind: SeKind::Classical,
        }
    }
}

impl RegressionSpec {
    /// No bounds beyond strict positivity.
    pub fn unbounded() -> Self {
        RegressionSpec {
            k_range: (f64::MIN_POSITIVE, f64::INFINITY),
            r_range: (f64::MIN_POSITIVE, f64::INFINITY),
            c_range: (f64::MIN_POSITIVE, f64::INFINITY),
            se_kind: SeKind::Classical,
        }
    }

    pub fn admits(&self, row: &RegressionRow) -> bool {
        let within = |v: f64, (lo, hi): (f64, f64)| v > 0.0 && v >= lo && v <= hi;
        row.d0.is_finite()
            && within(row.k, self.k_range)
            && within(row.r, self.r_range)
            && within(row.c, self.c_range)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionRow {
    pub d0: f64,
    /// Team size.
    pub k: f64,
    /// Reference count.
    pub r: f64,
    /// Citation count.
    pub c: f64,
    pub year: i16,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleReport {
    pub total: usize,
    pub undefined_d0: usize,
    pub out_of_bounds: usize,
    pub kept: usize,
}

/// Regression rows from disruption results, dropping undefined D-indices and
/// rows outside the sample bounds.
pub fn regression_rows(
    results: &[DisruptionResult],
    spec: &RegressionSpec,
) -> (Vec<RegressionRow>, SampleReport) {
    let mut report = SampleReport {
        total: results.len(),
        ..SampleReport::default()
    };
    let mut rows = Vec::new();
    for r in results {
        let Some(d0) = r.d0 else {
            report.undefined_d0 += 1;
            continue;
        };
        let row = RegressionRow {
            d0,
            k: r.team_size as f64,
            r: r.n_refs as f64,
            c: r.c_p as f64,
            year: r.year,
        };
        if spec.admits(&row) {
            rows.push(row);
        } else {
            report.out_of_bounds += 1;
        }
    }
    report.kept = rows.len();
    (rows, report)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Coefficients {
    pub b0: f64,
    pub b_k: f64,
    pub b_r: f64,
    pub b_c: f64,
}

impl Coefficients {
    fn from_slice(v: &[f64]) -> Coefficients {
        Coefficients {
            b0: v[0],
            b_k: v[1],
            b_r: v[2],
            b_c: v[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub coef: Coefficients,
    pub se: Coefficients,
    /// Effect per year; the dropped reference year maps to 0.
    pub year_effects: BTreeMap<i16, f64>,
    pub year_se: BTreeMap<i16, f64>,
    pub dropped_year: i16,
    pub n: usize,
    pub n_params: usize,
    /// Rows rejected by the sample bounds.
    pub excluded: usize,
    pub r2: f64,
    pub rss: f64,
    pub mean_k: f64,
    pub mean_ln_k: f64,
    pub mean_ln_r: f64,
    pub mean_ln_c: f64,
    pub se_kind: SeKind,
}

impl RegressionFit {
    /// Fitted value, or `None` for a year outside the sample.
    pub fn predict(&self, row: &RegressionRow) -> Option<f64> {
        let fe = self.year_effects.get(&row.year)?;
        let c = &self.coef;
        Some(
            c.b0 + c.b_k * libm::log(row.k)
                + c.b_r * libm::log(row.r)
                + c.b_c * libm::log(row.c)
                + fe,
        )
    }
}

/// Sparse design row: column index and value.
fn design(row: &RegressionRow, years: &[i16]) -> ([(usize, f64); 5], usize) {
    let mut x = [
        (0, 1.0),
        (1, libm::log(row.k)),
        (2, libm::log(row.r)),
        (3, libm::log(row.c)),
        (0, 0.0),
    ];
    let pos = years.binary_search(&row.year).unwrap_or(0);
    if pos > 0 {
        x[4] = (SLOPES + pos - 1, 1.0);
        (x, 5)
    } else {
        (x, 4)
    }
}

/// In-place Cholesky of a symmetric positive-definite matrix after scaling it
/// to unit diagonal. Returns the scale factors.
fn scaled_cholesky(a: &mut [f64], p: usize) -> Result<Vec<f64>, AnalysisError> {
    let mut scale = vec![0.0; p];
    for i in 0..p {
        let d = a[i * p + i];
        if d <= 0.0 || !d.is_finite() {
            return Err(AnalysisError::RankDeficient { column: i });
        }
        scale[i] = libm::sqrt(d);
    }
    for i in 0..p {
        for j in 0..p {
            a[i * p + j] /= scale[i] * scale[j];
        }
    }
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if d < PIVOT_TOLERANCE {
            return Err(AnalysisError::RankDeficient { column: j });
        }
        let d = libm::sqrt(d);
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    Ok(scale)
}

/// Solves `L L' x = b` for the lower-triangular factor stored in `l`.
fn cholesky_solve(l: &[f64], p: usize, b: &mut [f64]) {
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in i + 1..p {
            s -= l[k * p + i] * b[k];
        }
        b[i] = s / l[i * p + i];
    }
}

/// Solves `A x = b` and returns `x` together with `A^{-1}`.
fn solve_spd(mut a: Vec<f64>, p: usize, b: &[f64]) -> Result<(Vec<f64>, Vec<f64>), AnalysisError> {
    let scale = scaled_cholesky(&mut a, p)?;
    let mut x: Vec<f64> = b.iter().zip(&scale).map(|(v, s)| v / s).collect();
    cholesky_solve(&a, p, &mut x);
    for (v, s) in x.iter_mut().zip(&scale) {
        *v /= s;
    }
    let mut inv = vec![0.0; p * p];
    let mut col = vec![0.0; p];
    for j in 0..p {
        col.iter_mut().for_each(|v| *v = 0.0);
        col[j] = 1.0;
        cholesky_solve(&a, p, &mut col);
        for i in 0..p {
            inv[i * p + j] = col[i] / (scale[i] * scale[j]);
        }
    }
    Ok((x, inv))
}

pub fn ols_fit(
    rows: &[RegressionRow],
    spec: &RegressionSpec,
) -> Result<RegressionFit, AnalysisError> {
    let kept: Vec<&RegressionRow> = rows.iter().filter(|r| spec.admits(r)).collect();
    let excluded = rows.len() - kept.len();
    let mut years: Vec<i16> = kept.iter().map(|r| r.year).collect();
    years.sort_unstable();
    years.dedup();
    let p = SLOPES + years.len().saturating_sub(1);
    let n = kept.len();
    if n <= p {
        return Err(AnalysisError::InsufficientSample { n, params: p });
    }

    let mut xtx = vec![0.0; p * p];
    let mut xty = vec![0.0; p];
    for row in &kept {
        let (x, len) = design(row, &years);
        for &(i, vi) in &x[..len] {
            xty[i] += vi * row.d0;
            for &(j, vj) in &x[..len] {
                xtx[i * p + j] += vi * vj;
            }
        }
    }
    let (beta, inv) = solve_spd(xtx, p, &xty)?;

    let mean_y = kept.iter().map(|r| r.d0).sum::<f64>() / n as f64;
    let (mut rss, mut tss) = (0.0, 0.0);
    let mut meat = vec![
        0.0;
        if spec.se_kind == SeKind::Hc1 {
            p * p
        } else {
            0
        }
    ];
    for row in &kept {
        let (x, len) = design(row, &years);
        let fitted: f64 = x[..len].iter().map(|&(i, v)| beta[i] * v).sum();
        let e = row.d0 - fitted;
        rss += e * e;
        tss += (row.d0 - mean_y) * (row.d0 - mean_y);
        if spec.se_kind == SeKind::Hc1 {
            for &(i, vi) in &x[..len] {
                for &(j, vj) in &x[..len] {
                    meat[i * p + j] += e * e * vi * vj;
                }
            }
        }
    }
    let variance: Vec<f64> = match spec.se_kind {
        SeKind::Classical => {
            let sigma2 = rss / (n - p) as f64;
            (0..p).map(|i| sigma2 * inv[i * p + i]).collect()
        }
        SeKind::Hc1 => {
            // diag(A^{-1} M A^{-1}) * n / (n - p)
            let correction = n as f64 / (n - p) as f64;
            (0..p)
                .map(|i| {
                    let mut v = 0.0;
                    for a in 0..p {
                        let ia = inv[i * p + a];
                        if ia == 0.0 {
                            continue;
                        }
                        for b in 0..p {
                            v += ia * meat[a * p + b] * inv[b * p + i];
                        }
                    }
                    v * correction
                })
                .collect()
        }
    };
    let se: Vec<f64> = variance.iter().map(|v| libm::sqrt(v.max(0.0))).collect();

    let mut year_effects = BTreeMap::new();
    let mut year_se = BTreeMap::new();
    for (pos, &y) in years.iter().enumerate() {
        let (fe, s) = if pos == 0 {
            (0.0, 0.0)
        } else {
            (beta[SLOPES + pos - 1], se[SLOPES + pos - 1])
        };
        year_effects.insert(y, fe);
        year_se.insert(y, s);
    }
    let mean_of = |f: fn(&RegressionRow) -> f64| kept.iter().map(|r| f(r)).sum::<f64>() / n as f64;
    Ok(RegressionFit {
        coef: Coefficients::from_slice(&beta),
        se: Coefficients::from_slice(&se),
        year_effects,
        year_se,
        dropped_year: years[0],
        n,
        n_params: p,
        excluded,
        r2: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        rss,
        mean_k: mean_of(|r| r.k),
        mean_ln_k: mean_of(|r| libm::log(r.k)),
        mean_ln_r: mean_of(|r| libm::log(r.r)),
        mean_ln_c: mean_of(|r| libm::log(r.c)),
        se_kind: spec.se_kind,
    })
}

/// Slopes `(b_k, b_r, b_c)` from the within-year estimator: every variable is
/// demeaned inside its year and the intercept-free regression is solved.
pub fn within_year_slopes(
    rows: &[RegressionRow],
    spec: &RegressionSpec,
) -> Result<[f64; 3], AnalysisError> {
    let kept: Vec<&RegressionRow> = rows.iter().filter(|r| spec.admits(r)).collect();
    let mut groups: BTreeMap<i16, ([f64; 4], usize)> = BTreeMap::new();
    let values = |r: &RegressionRow| [r.d0, libm::log(r.k), libm::log(r.r), libm::log(r.c)];
    for r in &kept {
        let entry = groups.entry(r.year).or_insert(([0.0; 4], 0));
        for (acc, v) in entry.0.iter_mut().zip(values(r)) {
            *acc += v;
        }
        entry.1 += 1;
    }
    let params = 3 + groups.len();
    if kept.len() <= params {
        return Err(AnalysisError::InsufficientSample {
            n: kept.len(),
            params,
        });
    }
    let mut xtx = vec![0.0; 9];
    let mut xty = vec![0.0; 3];
    for r in &kept {
        let (sums, count) = groups[&r.year];
        let v = values(r);
        let d: [f64; 4] = core::array::from_fn(|i| v[i] - sums[i] / count as f64);
        for i in 0..3 {
            xty[i] += d[i + 1] * d[0];
            for j in 0..3 {
                xtx[i * 3 + j] += d[i + 1] * d[j + 1];
            }
        }
    }
    let (beta, _) = solve_spd(xtx, 3, &xty)?;
    Ok([beta[0], beta[1], beta[2]])
}

/// `dD/dk = b_k / k` at `at_k` (the sample mean of `k` when `None`).
pub fn marginal_effect_team_size(
    fit: &RegressionFit,
    at_k: Option<f64>,
) -> Result<f64, AnalysisError> {
    let k = at_k.unwrap_or(fit.mean_k);
    if k.is_nan() || k <= 0.0 {
        return Err(AnalysisError::NonpositiveK(k));
    }
    Ok(fit.coef.b_k / k)
}
