//! Citer classification and the disruption family of indices.
//!
//! For a focal paper `p` with window `w`, let `C` be the citers of `p` and `U`
//! the union of the citers of `p`'s references (both counted from `p`'s year,
//! `p` itself removed from `U`). Then
//!
//! * type i = `C \ U`, type j = `C ∩ U`, type k = `U \ C`;
//! * `D0 = (Ni - Nj) / (Ni + Nj + Nk)`;
//! * `d_p = (Ni - Nj) / (Ni + Nj)`, `R_k = Nk / (Ni + Nj)`, so that
//!   `D0 = d_p / (1 + R_k)` exactly;
//! * `b_p = C_max / C_p` with `C_p = Ni + Nj` and `C_max` the citations of the
//!   most cited reference.
//!
//! The variants D1 to D4 are computed in the same pass: D1 drops self-citing
//! papers, D2 keeps only popular references, D3 is `Ni / (Ni + Nj)` and D4
//! weights each type-j citer by how many of the focal references it cites.

use alloc::vec::Vec;

use thiserror::Error;

use crate::filter::Eligibility;
use crate::graph::{AuthorId, CitationGraph, GraphError, PaperId, WindowSpec};
use crate::stats;

/// Why a result is (partly) undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ResultFlags(u8);

impl ResultFlags {
    pub const NONE: ResultFlags = ResultFlags(0);
    pub const NO_REFS: ResultFlags = ResultFlags(1);
    pub const NO_CITERS: ResultFlags = ResultFlags(1 << 1);
    pub const NO_AUTHOR_DATA: ResultFlags = ResultFlags(1 << 2);

    const NAMES: [(ResultFlags, &'static str); 3] = [
        (ResultFlags::NO_REFS, "no_refs"),
        (ResultFlags::NO_CITERS, "no_citers"),
        (ResultFlags::NO_AUTHOR_DATA, "no_author_data"),
    ];

    pub fn contains(self, other: ResultFlags) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: ResultFlags) {
        self.0 |= other.0;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn names(self) -> impl Iterator<Item = &'static str> {
        ResultFlags::NAMES
            .into_iter()
            .filter(move |(f, _)| self.contains(*f))
            .map(|(_, n)| n)
    }

    pub fn from_name(name: &str) -> Option<ResultFlags> {
        ResultFlags::NAMES
            .iter()
            .find(|(_, n)| *n == name)
            .map(|(f, _)| *f)
    }

    /// The D-index is undefined without references or without citers.
    pub fn undefined(self) -> bool {
        self.contains(ResultFlags::NO_REFS) || self.contains(ResultFlags::NO_CITERS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DisruptionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("disruption undefined for paper {paper} (flags {flags:?})")]
    Undefined { paper: PaperId, flags: ResultFlags },
}

/// Minimum citation count of a popular reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PopularThreshold {
    Count(u64),
    /// Quantile of the corpus distribution of citation counts over all cited
    /// papers; `0.75` selects the top quartile.
    Quantile(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelfCitationRule {
    /// A citer sharing at least one author with the focal paper.
    #[default]
    AuthorOverlap,
    Off,
}

/// Which citers enter the D4 denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum D4Mode {
    /// `Σ_i w / Σ_{i ∪ j} w`.
    #[default]
    CitersOnly,
    /// Also adds the weights of type-k papers to the denominator.
    IncludeK,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantConfig {
    pub popular_threshold: PopularThreshold,
    pub self_citation_rule: SelfCitationRule,
    pub d4_mode: D4Mode,
}

impl Default for VariantConfig {
    fn default() -> Self {
        VariantConfig {
            popular_threshold: PopularThreshold::Quantile(0.75),
            self_citation_rule: SelfCitationRule::AuthorOverlap,
            d4_mode: D4Mode::CitersOnly,
        }
    }
}

impl VariantConfig {
    /// Fixes the popularity threshold for this corpus.
    pub fn resolve(&self, g: &CitationGraph) -> ResolvedVariants {
        let popular_min_citations = match self.popular_threshold {
            PopularThreshold::Count(c) => c,
            PopularThreshold::Quantile(q) => {
                let mut counts: Vec<u64> = (0..g.len() as u32)
                    .map(|ix| g.n_citations(ix) as u64)
                    .filter(|&c| c > 0)
                    .collect();
                counts.sort_unstable();
                stats::nearest_rank(&counts, q).unwrap_or(1)
            }
        };
        ResolvedVariants {
            popular_min_citations,
            self_citation_rule: self.self_citation_rule,
            d4_mode: self.d4_mode,
        }
    }
}

/// Variant settings with the popularity threshold pinned to a count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResolvedVariants {
    pub popular_min_citations: u64,
    pub self_citation_rule: SelfCitationRule,
    pub d4_mode: D4Mode,
}

impl Default for ResolvedVariants {
    fn default() -> Self {
        ResolvedVariants {
            popular_min_citations: 1,
            self_citation_rule: SelfCitationRule::AuthorOverlap,
            d4_mode: D4Mode::CitersOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiterClassification {
    pub focal: PaperId,
    pub window: WindowSpec,
    pub set_i: Vec<PaperId>,
    pub set_j: Vec<PaperId>,
    pub set_k: Vec<PaperId>,
    pub flags: ResultFlags,
}

impl CiterClassification {
    pub fn n_i(&self) -> u64 {
        self.set_i.len() as u64
    }
    pub fn n_j(&self) -> u64 {
        self.set_j.len() as u64
    }
    pub fn n_k(&self) -> u64 {
        self.set_k.len() as u64
    }
}

/// Everything computed for one focal paper. Ratios are `None` when undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct DisruptionResult {
    pub focal: PaperId,
    pub year: i16,
    /// Reference count (no window applies to references).
    pub n_refs: u32,
    pub team_size: u32,
    pub n_i: u64,
    pub n_j: u64,
    pub n_k: u64,
    /// Citations of the focal paper in the window, `Ni + Nj`.
    pub c_p: u64,
    /// Citations of the most cited reference in the focal's window.
    pub c_max: u64,
    pub d0: Option<f64>,
    pub d_p: Option<f64>,
    pub r_k: Option<f64>,
    pub b_p: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub d4: Option<f64>,
    pub flags: ResultFlags,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub d_p: f64,
    pub r_k: f64,
    pub b_p: Option<f64>,
    /// `d_p / (1 + R_k)`, equal to D0 up to rounding.
    pub reconstruction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variants {
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub d4: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    I,
    J,
    K,
}

#[derive(Default)]
struct Tally {
    n: [u64; 3],
    own: [u64; 3],
    popular: [u64; 3],
    weight_j: u64,
    weight_k: u64,
}

#[inline]
fn ratio(num: i64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn shares_author(a: &[AuthorId], b: &[AuthorId]) -> bool {
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

/// Reusable per-worker scratch space for classifying focal papers.
pub struct Classifier<'g> {
    g: &'g CitationGraph,
    cfg: ResolvedVariants,
    citers: Vec<u32>,
    /// `citer << 1 | popular` for every (reference, citer) pair.
    pool: Vec<u64>,
}

impl<'g> Classifier<'g> {
    pub fn new(g: &'g CitationGraph, cfg: ResolvedVariants) -> Self {
        Classifier {
            g,
            cfg,
            citers: Vec::new(),
            pool: Vec::new(),
        }
    }

    /// Fills the scratch buffers and returns `C_max`.
    fn gather(&mut self, ix: u32, window: WindowSpec) -> u64 {
        let g = self.g;
        let anchor = g.year(ix);
        self.citers.clear();
        self.citers.extend(g.windowed_citers_ix(ix, anchor, window));
        self.pool.clear();
        let mut c_max = 0u64;
        for &r in g.refs_ix(ix) {
            let popular = (g.n_citations(r) as u64 >= self.cfg.popular_min_citations) as u64;
            let mut count = 0u64;
            for (&c, &y) in g.citers_ix(r).iter().zip(g.citer_years_ix(r)) {
                if !window.admits(anchor, y) {
                    continue;
                }
                count += 1;
                if c != ix {
                    self.pool.push((c as u64) << 1 | popular);
                }
            }
            c_max = c_max.max(count);
        }
        self.pool.sort_unstable();
        c_max
    }

    /// Merges the sorted citer list with the grouped reference-citer pool.
    /// `visit(citer, kind, refs_cited, popular_refs_cited)`.
    fn walk(&self, mut visit: impl FnMut(u32, Kind, u64, u64)) {
        let (citers, pool) = (&self.citers, &self.pool);
        let (mut a, mut b) = (0usize, 0usize);
        while a < citers.len() || b < pool.len() {
            let next_pool = pool.get(b).map(|&k| (k >> 1) as u32);
            let next_citer = citers.get(a).copied();
            match (next_citer, next_pool) {
                (Some(c), Some(u)) if c < u => {
                    visit(c, Kind::I, 0, 0);
                    a += 1;
                }
                (Some(c), None) => {
                    visit(c, Kind::I, 0, 0);
                    a += 1;
                }
                (_, Some(u)) => {
                    let (mut m, mut m_pop) = (0u64, 0u64);
                    while b < pool.len() && (pool[b] >> 1) as u32 == u {
                        m += 1;
                        m_pop += pool[b] & 1;
                        b += 1;
                    }
                    if next_citer == Some(u) {
                        visit(u, Kind::J, m, m_pop);
                        a += 1;
                    } else {
                        visit(u, Kind::K, m, m_pop);
                    }
                }
                (None, None) => unreachable!(),
            }
        }
    }

    fn base_flags(&self, ix: u32) -> ResultFlags {
        let mut flags = ResultFlags::NONE;
        if self.g.refs_ix(ix).is_empty() {
            flags.insert(ResultFlags::NO_REFS);
        }
        if self.citers.is_empty() {
            flags.insert(ResultFlags::NO_CITERS);
        }
        if self.cfg.self_citation_rule == SelfCitationRule::AuthorOverlap
            && self.g.authors(ix).is_empty()
        {
            flags.insert(ResultFlags::NO_AUTHOR_DATA);
        }
        flags
    }

    pub fn classify(&mut self, ix: u32, window: WindowSpec) -> CiterClassification {
        self.gather(ix, window);
        let g = self.g;
        let mut out = CiterClassification {
            focal: g.id(ix),
            window,
            set_i: Vec::new(),
            set_j: Vec::new(),
            set_k: Vec::new(),
            flags: self.base_flags(ix),
        };
        self.walk(|c, kind, _, _| {
            let id = g.id(c);
            match kind {
                Kind::I => out.set_i.push(id),
                Kind::J => out.set_j.push(id),
                Kind::K => out.set_k.push(id),
            }
        });
        out
    }

    pub fn compute(&mut self, ix: u32, window: WindowSpec) -> DisruptionResult {
        let c_max = self.gather(ix, window);
        let g = self.g;
        let flags = self.base_flags(ix);
        let focal_authors = g.authors(ix);
        let check_self = self.cfg.self_citation_rule == SelfCitationRule::AuthorOverlap
            && !focal_authors.is_empty();

        let mut t = Tally::default();
        self.walk(|c, kind, m, m_pop| {
            let slot = kind as usize;
            t.n[slot] += 1;
            if !(check_self && shares_author(g.authors(c), focal_authors)) {
                t.own[slot] += 1;
            }
            match kind {
                Kind::I => t.popular[Kind::I as usize] += 1,
                Kind::J if m_pop > 0 => t.popular[Kind::J as usize] += 1,
                Kind::J => t.popular[Kind::I as usize] += 1,
                Kind::K if m_pop > 0 => t.popular[Kind::K as usize] += 1,
                Kind::K => {}
            }
            match kind {
                Kind::J => t.weight_j += m,
                Kind::K => t.weight_k += m,
                Kind::I => {}
            }
        });

        let [n_i, n_j, n_k] = t.n;
        let c_p = n_i + n_j;
        let defined = !flags.undefined();
        let d_index = |[i, j, k]: [u64; 3]| ratio(i as i64 - j as i64, i + j + k);
        let d0 = if defined { d_index(t.n) } else { None };
        let d1 = match (defined, check_self) {
            (false, _) => None,
            (true, false) => d0,
            (true, true) => d_index(t.own),
        };
        let d4_den = match self.cfg.d4_mode {
            D4Mode::CitersOnly => n_i + t.weight_j,
            D4Mode::IncludeK => n_i + t.weight_j + t.weight_k,
        };
        DisruptionResult {
            focal: g.id(ix),
            year: g.year(ix),
            n_refs: g.n_references(ix) as u32,
            team_size: focal_authors.len() as u32,
            n_i,
            n_j,
            n_k,
            c_p,
            c_max,
            d0,
            d_p: ratio(n_i as i64 - n_j as i64, c_p),
            r_k: ratio(n_k as i64, c_p),
            b_p: if flags.contains(ResultFlags::NO_REFS) {
                None
            } else {
                ratio(c_max as i64, c_p)
            },
            d1,
            d2: if defined { d_index(t.popular) } else { None },
            d3: if defined {
                ratio(n_i as i64, c_p)
            } else {
                None
            },
            d4: if defined {
                ratio(n_i as i64, d4_den)
            } else {
                None
            },
            flags,
        }
    }
}

pub fn classify_citers(
    g: &CitationGraph,
    p: PaperId,
    window: WindowSpec,
) -> Result<CiterClassification, GraphError> {
    let ix = g.require(p)?;
    Ok(Classifier::new(g, ResolvedVariants::default()).classify(ix, window))
}

fn compute_one(
    g: &CitationGraph,
    p: PaperId,
    window: WindowSpec,
    cfg: ResolvedVariants,
) -> Result<DisruptionResult, GraphError> {
    let ix = g.require(p)?;
    Ok(Classifier::new(g, cfg).compute(ix, window))
}

pub fn d_index(g: &CitationGraph, p: PaperId, window: WindowSpec) -> Result<f64, DisruptionError> {
    let r = compute_one(g, p, window, ResolvedVariants::default())?;
    r.d0.ok_or(DisruptionError::Undefined {
        paper: p,
        flags: r.flags,
    })
}

pub fn decompose(
    g: &CitationGraph,
    p: PaperId,
    window: WindowSpec,
) -> Result<Decomposition, DisruptionError> {
    let r = compute_one(g, p, window, ResolvedVariants::default())?;
    match (r.d_p, r.r_k) {
        (Some(d_p), Some(r_k)) => Ok(Decomposition {
            d_p,
            r_k,
            b_p: r.b_p,
            reconstruction: d_p / (1.0 + r_k),
        }),
        _ => Err(DisruptionError::Undefined {
            paper: p,
            flags: r.flags,
        }),
    }
}

pub fn d_variants(
    g: &CitationGraph,
    p: PaperId,
    window: WindowSpec,
    cfg: ResolvedVariants,
) -> Result<Variants, DisruptionError> {
    let r = compute_one(g, p, window, cfg)?;
    if r.flags.undefined() {
        return Err(DisruptionError::Undefined {
            paper: p,
            flags: r.flags,
        });
    }
    Ok(Variants {
        d1: r.d1,
        d2: r.d2,
        d3: r.d3,
        d4: r.d4,
    })
}

/// Results for every eligible paper, in external-id order.
pub fn batch_compute<'g>(
    g: &'g CitationGraph,
    window: WindowSpec,
    cfg: ResolvedVariants,
    eligibility: &'g Eligibility,
) -> impl Iterator<Item = DisruptionResult> + 'g {
    let mut classifier = Classifier::new(g, cfg);
    eligibility
        .indices()
        .map(move |ix| classifier.compute(ix, window))
}
