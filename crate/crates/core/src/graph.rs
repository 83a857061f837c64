//! Frozen, index-addressed citation graph.
//!
//! Papers are stored columnar and addressed by a dense `u32` index. The index
//! is the rank of the paper's external [`PaperId`] among all ids, so sorting by
//! index and sorting by external id agree. Both adjacency directions are kept
//! in compressed sparse row form:
//!
//! * references: `refs[ref_offsets[p]..ref_offsets[p + 1]]`, sorted, unique;
//! * citers: `citers[citer_offsets[p]..citer_offsets[p + 1]]`, sorted, unique,
//!   with the citer's publication year alongside in `citer_years`.
//!
//! Sorted lists let the disruption code classify citers with linear merges.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// External paper identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PaperId(pub u64);

impl fmt::Display for PaperId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Opaque author identifier. Only equality matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct AuthorId(pub u64);

pub const MIN_YEAR: i16 = 1500;
pub const MAX_YEAR: i16 = 2100;
/// Number of categories in the field taxonomy; field ids are `0..TAXONOMY_SIZE`.
pub const TAXONOMY_SIZE: u16 = 292;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum DocType {
    #[default]
    JournalArticle,
    BookChapter,
    Book,
    ProceedingsArticle,
    Preprint,
    Other,
}

impl DocType {
    pub const ALL: [DocType; 6] = [
        DocType::JournalArticle,
        DocType::BookChapter,
        DocType::Book,
        DocType::ProceedingsArticle,
        DocType::Preprint,
        DocType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DocType::JournalArticle => "journal-article",
            DocType::BookChapter => "book-chapter",
            DocType::Book => "book",
            DocType::ProceedingsArticle => "proceedings-article",
            DocType::Preprint => "preprint",
            DocType::Other => "other",
        }
    }

    /// Maps a type label to a variant. Unknown labels become [`DocType::Other`].
    pub fn from_label(label: &str) -> DocType {
        match label.trim() {
            "journal-article" | "article" => DocType::JournalArticle,
            "book-chapter" => DocType::BookChapter,
            "book" => DocType::Book,
            "proceedings-article" => DocType::ProceedingsArticle,
            "preprint" | "posted-content" => DocType::Preprint,
            _ => DocType::Other,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<DocType> {
        DocType::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for DocType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-paper metadata as it arrives from ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PaperRecord {
    pub id: PaperId,
    pub year: i16,
    pub doc_type: DocType,
    pub author_ids: Vec<AuthorId>,
    pub field_ids: Vec<u16>,
}

impl PaperRecord {
    pub fn validate(&self) -> Result<(), GraphError> {
        if !(MIN_YEAR..=MAX_YEAR).contains(&self.year) {
            return Err(GraphError::InvalidYear {
                paper: self.id,
                year: self.year,
            });
        }
        if let Some(&field) = self.field_ids.iter().find(|&&f| f >= TAXONOMY_SIZE) {
            return Err(GraphError::InvalidField {
                paper: self.id,
                field,
            });
        }
        Ok(())
    }
}

/// How far after the anchor year a citing paper may appear and still count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowSpec {
    #[default]
    Unlimited,
    Years(u16),
}

impl WindowSpec {
    pub fn years(w: u16) -> Result<WindowSpec, GraphError> {
        if w == 0 {
            return Err(GraphError::InvalidWindow);
        }
        Ok(WindowSpec::Years(w))
    }

    /// A citer published in `year` counts against a paper anchored at `anchor`
    /// when it is not earlier than the anchor and falls inside the window.
    /// Same-year citers count.
    #[inline]
    pub fn admits(self, anchor: i16, year: i16) -> bool {
        if year < anchor {
            return false;
        }
        match self {
            WindowSpec::Unlimited => true,
            WindowSpec::Years(w) => (year as i32 - anchor as i32) <= w as i32,
        }
    }
}

impl fmt::Display for WindowSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowSpec::Unlimited => f.write_str("unlimited"),
            WindowSpec::Years(w) => write!(f, "{w}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown paper {0}")]
    UnknownPaper(PaperId),
    #[error("paper {0} appears more than once")]
    DuplicatePaper(PaperId),
    #[error("paper {paper}: year {year} outside [{MIN_YEAR}, {MAX_YEAR}]")]
    InvalidYear { paper: PaperId, year: i16 },
    #[error("paper {paper}: field id {field} outside the taxonomy")]
    InvalidField { paper: PaperId, field: u16 },
    #[error("citation window must be a positive number of years")]
    InvalidWindow,
    #[error("too many papers for a 32-bit index: {0}")]
    TooManyPapers(usize),
    #[error("out of memory while building the graph")]
    OutOfMemory,
    #[error("inconsistent graph columns: {0}")]
    Inconsistent(&'static str),
}

/// Number of dangling edges kept verbatim in a [`BuildReport`].
pub const DANGLING_SAMPLE_LIMIT: usize = 64;

/// What [`build_graph`] did with the edge stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub papers: usize,
    pub edges_in: u64,
    pub edges_kept: u64,
    pub duplicate_edges: u64,
    pub self_loops: u64,
    pub dangling: u64,
    /// The first [`DANGLING_SAMPLE_LIMIT`] dangling `(citer, cited)` pairs.
    pub dangling_samples: Vec<(PaperId, PaperId)>,
}

/// Raw columns of a graph. Citer adjacency is derived, so it is not part of
/// this set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GraphColumns {
    pub ids: Vec<PaperId>,
    pub years: Vec<i16>,
    pub doc_types: Vec<DocType>,
    pub author_offsets: Vec<u64>,
    pub authors: Vec<AuthorId>,
    pub field_offsets: Vec<u64>,
    pub fields: Vec<u16>,
    pub ref_offsets: Vec<u64>,
    pub refs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationGraph {
    cols: GraphColumns,
    citer_offsets: Vec<u64>,
    citers: Vec<u32>,
    citer_years: Vec<i16>,
}

fn reserve<T>(v: &mut Vec<T>, n: usize) -> Result<(), GraphError> {
    v.try_reserve_exact(n).map_err(|_| GraphError::OutOfMemory)
}

/// Builds a frozen graph. Edges may be unsorted and repeated; duplicates and
/// self-loops are dropped, and edges naming unknown papers are counted as
/// dangling rather than failing the build.
pub fn build_graph<R, E>(records: R, edges: E) -> Result<(CitationGraph, BuildReport), GraphError>
where
    R: IntoIterator<Item = PaperRecord>,
    E: IntoIterator<Item = (PaperId, PaperId)>,
{
    let mut records: Vec<PaperRecord> = records.into_iter().collect();
    if records.len() > u32::MAX as usize {
        return Err(GraphError::TooManyPapers(records.len()));
    }
    for r in &records {
        r.validate()?;
    }
    records.sort_unstable_by_key(|r| r.id);
    if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(GraphError::DuplicatePaper(w[0].id));
    }

    let n = records.len();
    let mut cols = GraphColumns::default();
    reserve(&mut cols.ids, n)?;
    reserve(&mut cols.years, n)?;
    reserve(&mut cols.doc_types, n)?;
    reserve(&mut cols.author_offsets, n + 1)?;
    reserve(&mut cols.field_offsets, n + 1)?;
    cols.author_offsets.push(0);
    cols.field_offsets.push(0);
    for mut r in records {
        r.author_ids.sort_unstable();
        r.author_ids.dedup();
        r.field_ids.sort_unstable();
        r.field_ids.dedup();
        cols.ids.push(r.id);
        cols.years.push(r.year);
        cols.doc_types.push(r.doc_type);
        cols.authors.extend_from_slice(&r.author_ids);
        cols.fields.extend_from_slice(&r.field_ids);
        cols.author_offsets.push(cols.authors.len() as u64);
        cols.field_offsets.push(cols.fields.len() as u64);
    }

    let mut report = BuildReport {
        papers: n,
        ..BuildReport::default()
    };
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for (citer, cited) in edges {
        report.edges_in += 1;
        let lookup = |id: PaperId| cols.ids.binary_search(&id).ok().map(|i| i as u32);
        match (lookup(citer), lookup(cited)) {
            (Some(a), Some(b)) if a == b => report.self_loops += 1,
            (Some(a), Some(b)) => {
                if pairs.len() == pairs.capacity() {
                    pairs
                        .try_reserve(pairs.len().max(1024))
                        .map_err(|_| GraphError::OutOfMemory)?;
                }
                pairs.push((a, b));
            }
            _ => {
                report.dangling += 1;
                if report.dangling_samples.len() < DANGLING_SAMPLE_LIMIT {
                    report.dangling_samples.push((citer, cited));
                }
            }
        }
    }
    pairs.sort_unstable();
    let before = pairs.len();
    pairs.dedup();
    report.duplicate_edges = (before - pairs.len()) as u64;
    report.edges_kept = pairs.len() as u64;

    reserve(&mut cols.ref_offsets, n + 1)?;
    reserve(&mut cols.refs, pairs.len())?;
    cols.ref_offsets.push(0);
    let mut cursor = 0usize;
    for citer in 0..n as u32 {
        while cursor < pairs.len() && pairs[cursor].0 == citer {
            cols.refs.push(pairs[cursor].1);
            cursor += 1;
        }
        cols.ref_offsets.push(cols.refs.len() as u64);
    }
    drop(pairs);

    let graph = CitationGraph::from_columns_unchecked(cols)?;
    Ok((graph, report))
}

impl CitationGraph {
    /// Rebuilds a graph from stored columns, checking every structural
    /// invariant first.
    pub fn from_columns(cols: GraphColumns) -> Result<CitationGraph, GraphError> {
        let n = cols.ids.len();
        if n > u32::MAX as usize {
            return Err(GraphError::TooManyPapers(n));
        }
        if cols.years.len() != n || cols.doc_types.len() != n {
            return Err(GraphError::Inconsistent("column lengths differ"));
        }
        if cols.ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GraphError::Inconsistent("ids not strictly ascending"));
        }
        check_offsets(&cols.author_offsets, n, cols.authors.len())?;
        check_offsets(&cols.field_offsets, n, cols.fields.len())?;
        check_offsets(&cols.ref_offsets, n, cols.refs.len())?;
        for p in 0..n {
            let year = cols.years[p];
            if !(MIN_YEAR..=MAX_YEAR).contains(&year) {
                return Err(GraphError::InvalidYear {
                    paper: cols.ids[p],
                    year,
                });
            }
            let span = |o: &[u64]| o[p] as usize..o[p + 1] as usize;
            let refs = &cols.refs[span(&cols.ref_offsets)];
            if refs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::Inconsistent("references not sorted and unique"));
            }
            if refs.iter().any(|&r| r as usize >= n || r as usize == p) {
                return Err(GraphError::Inconsistent(
                    "reference out of range or self-loop",
                ));
            }
            let authors = &cols.authors[span(&cols.author_offsets)];
            if authors.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::Inconsistent("author ids not sorted and unique"));
            }
            let fields = &cols.fields[span(&cols.field_offsets)];
            if fields.windows(2).any(|w| w[0] >= w[1]) {
                return Err(GraphError::Inconsistent("field ids not sorted and unique"));
            }
            if let Some(&field) = fields.iter().find(|&&f| f >= TAXONOMY_SIZE) {
                return Err(GraphError::InvalidField {
                    paper: cols.ids[p],
                    field,
                });
            }
        }
        CitationGraph::from_columns_unchecked(cols)
    }

    fn from_columns_unchecked(cols: GraphColumns) -> Result<CitationGraph, GraphError> {
        let n = cols.ids.len();
        let mut indegree = Vec::new();
        reserve(&mut indegree, n)?;
        indegree.resize(n, 0u64);
        for &r in &cols.refs {
            indegree[r as usize] += 1;
        }
        let mut citer_offsets = Vec::new();
        reserve(&mut citer_offsets, n + 1)?;
        citer_offsets.push(0u64);
        let mut acc = 0u64;
        for d in &indegree {
            acc += d;
            citer_offsets.push(acc);
        }
        let m = cols.refs.len();
        let mut citers = Vec::new();
        let mut citer_years = Vec::new();
        reserve(&mut citers, m)?;
        reserve(&mut citer_years, m)?;
        citers.resize(m, 0u32);
        citer_years.resize(m, 0i16);
        // Reuse the in-degree buffer as per-node fill cursors. Walking citers
        // in ascending order leaves every bucket sorted.
        indegree.copy_from_slice(&citer_offsets[..n]);
        let mut cursor = indegree;
        for citer in 0..n {
            let year = cols.years[citer];
            let (lo, hi) = (
                cols.ref_offsets[citer] as usize,
                cols.ref_offsets[citer + 1] as usize,
            );
            for &cited in &cols.refs[lo..hi] {
                let slot = cursor[cited as usize] as usize;
                citers[slot] = citer as u32;
                citer_years[slot] = year;
                cursor[cited as usize] += 1;
            }
        }
        Ok(CitationGraph {
            cols,
            citer_offsets,
            citers,
            citer_years,
        })
    }

    pub fn columns(&self) -> &GraphColumns {
        &self.cols
    }

    pub fn len(&self) -> usize {
        self.cols.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.cols.refs.len()
    }

    pub fn index_of(&self, id: PaperId) -> Option<u32> {
        self.cols.ids.binary_search(&id).ok().map(|i| i as u32)
    }

    pub fn require(&self, id: PaperId) -> Result<u32, GraphError> {
        self.index_of(id).ok_or(GraphError::UnknownPaper(id))
    }

    #[inline]
    pub fn id(&self, ix: u32) -> PaperId {
        self.cols.ids[ix as usize]
    }

    #[inline]
    pub fn year(&self, ix: u32) -> i16 {
        self.cols.years[ix as usize]
    }

    #[inline]
    pub fn doc_type(&self, ix: u32) -> DocType {
        self.cols.doc_types[ix as usize]
    }

    #[inline]
    pub fn authors(&self, ix: u32) -> &[AuthorId] {
        let o = &self.cols.author_offsets;
        &self.cols.authors[o[ix as usize] as usize..o[ix as usize + 1] as usize]
    }

    #[inline]
    pub fn fields(&self, ix: u32) -> &[u16] {
        let o = &self.cols.field_offsets;
        &self.cols.fields[o[ix as usize] as usize..o[ix as usize + 1] as usize]
    }

    /// Sorted internal indices of the papers `ix` cites.
    #[inline]
    pub fn refs_ix(&self, ix: u32) -> &[u32] {
        let o = &self.cols.ref_offsets;
        &self.cols.refs[o[ix as usize] as usize..o[ix as usize + 1] as usize]
    }

    /// Sorted internal indices of every paper citing `ix`, ignoring years.
    #[inline]
    pub fn citers_ix(&self, ix: u32) -> &[u32] {
        let (lo, hi) = self.citer_span(ix);
        &self.citers[lo..hi]
    }

    /// Publication years parallel to [`citers_ix`](Self::citers_ix).
    #[inline]
    pub fn citer_years_ix(&self, ix: u32) -> &[i16] {
        let (lo, hi) = self.citer_span(ix);
        &self.citer_years[lo..hi]
    }

    #[inline]
    fn citer_span(&self, ix: u32) -> (usize, usize) {
        (
            self.citer_offsets[ix as usize] as usize,
            self.citer_offsets[ix as usize + 1] as usize,
        )
    }

    #[inline]
    pub fn n_references(&self, ix: u32) -> usize {
        self.refs_ix(ix).len()
    }

    /// Citations received over the whole corpus, without any window.
    #[inline]
    pub fn n_citations(&self, ix: u32) -> usize {
        let (lo, hi) = self.citer_span(ix);
        hi - lo
    }

    /// Citers of `ix` admitted by `window` measured from `anchor`.
    #[inline]
    pub fn windowed_citers_ix(
        &self,
        ix: u32,
        anchor: i16,
        window: WindowSpec,
    ) -> impl Iterator<Item = u32> + '_ {
        self.citers_ix(ix)
            .iter()
            .zip(self.citer_years_ix(ix))
            .filter(move |(_, &y)| window.admits(anchor, y))
            .map(|(&c, _)| c)
    }

    #[inline]
    pub fn count_citers_ix(&self, ix: u32, anchor: i16, window: WindowSpec) -> u64 {
        let years = self.citer_years_ix(ix);
        match window {
            WindowSpec::Unlimited => years.iter().filter(|&&y| y >= anchor).count() as u64,
            w => years.iter().filter(|&&y| w.admits(anchor, y)).count() as u64,
        }
    }

    /// Most cited reference of `ix`, with citations counted in the window
    /// anchored at `ix`'s own year. Ties go to the smallest id.
    pub fn most_cited_reference_ix(&self, ix: u32, window: WindowSpec) -> Option<(u32, u64)> {
        let anchor = self.year(ix);
        let mut best: Option<(u32, u64)> = None;
        for &r in self.refs_ix(ix) {
            let c = self.count_citers_ix(r, anchor, window);
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((r, c));
            }
        }
        best
    }

    pub fn record(&self, ix: u32) -> PaperRecord {
        PaperRecord {
            id: self.id(ix),
            year: self.year(ix),
            doc_type: self.doc_type(ix),
            author_ids: self.authors(ix).to_vec(),
            field_ids: self.fields(ix).to_vec(),
        }
    }

    /// Citers of `p` published no earlier than `p` and inside the window.
    pub fn citers(&self, p: PaperId, window: WindowSpec) -> Result<Vec<PaperId>, GraphError> {
        let ix = self.require(p)?;
        Ok(self
            .windowed_citers_ix(ix, self.year(ix), window)
            .map(|c| self.id(c))
            .collect())
    }

    pub fn references(&self, p: PaperId) -> Result<Vec<PaperId>, GraphError> {
        let ix = self.require(p)?;
        Ok(self.refs_ix(ix).iter().map(|&r| self.id(r)).collect())
    }

    pub fn most_cited_reference(
        &self,
        p: PaperId,
        window: WindowSpec,
    ) -> Result<Option<(PaperId, u64)>, GraphError> {
        let ix = self.require(p)?;
        Ok(self
            .most_cited_reference_ix(ix, window)
            .map(|(r, c)| (self.id(r), c)))
    }
}

fn check_offsets(offsets: &[u64], n: usize, total: usize) -> Result<(), GraphError> {
    if offsets.len() != n + 1 || offsets[0] != 0 || offsets[n] as usize != total {
        return Err(GraphError::Inconsistent(
            "offset table does not frame its column",
        ));
    }
    if offsets.windows(2).any(|w| w[0] > w[1]) {
        return Err(GraphError::Inconsistent("offsets decrease"));
    }
    Ok(())
}
