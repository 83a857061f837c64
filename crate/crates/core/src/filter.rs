//! Corpus hygiene: which papers are scored as focal papers.
//!
//! Filtering never removes nodes or edges. Excluded papers still serve as
//! references and citers, so metrics of eligible papers do not change.

use alloc::vec::Vec;

use crate::graph::{CitationGraph, DocType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFilter {
    pub min_references: u64,
    pub min_citations: u64,
    /// Accepted document types. An empty list accepts nothing.
    pub doc_types: Vec<DocType>,
    pub min_year: Option<i16>,
    pub max_year: Option<i16>,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        CorpusFilter {
            min_references: 1,
            min_citations: 1,
            doc_types: alloc::vec![DocType::JournalArticle],
            min_year: None,
            max_year: None,
        }
    }
}

impl CorpusFilter {
    /// Accepts every paper.
    pub fn permissive() -> Self {
        CorpusFilter {
            min_references: 0,
            min_citations: 0,
            doc_types: DocType::ALL.to_vec(),
            min_year: None,
            max_year: None,
        }
    }
}

/// Exclusion counts. A paper failing several rules is counted under each.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub total: u64,
    pub eligible: u64,
    pub too_few_references: u64,
    pub too_few_citations: u64,
    pub doc_type: u64,
    pub year_out_of_range: u64,
}

/// Per-paper focal eligibility, indexed by internal index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Eligibility {
    mask: Vec<bool>,
}

impl Eligibility {
    pub fn all(g: &CitationGraph) -> Self {
        Eligibility {
            mask: alloc::vec![true; g.len()],
        }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Eligibility { mask }
    }

    #[inline]
    pub fn is_eligible(&self, ix: u32) -> bool {
        self.mask.get(ix as usize).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&e| e).count()
    }

    /// Eligible internal indices in ascending (external id) order.
    pub fn indices(&self) -> impl Iterator<Item = u32> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(|(i, _)| i as u32)
    }

    /// Restricts to papers for which `keep` holds as well.
    pub fn and(mut self, mut keep: impl FnMut(u32) -> bool) -> Self {
        for (i, e) in self.mask.iter_mut().enumerate() {
            *e = *e && keep(i as u32);
        }
        self
    }
}

pub fn apply_filter(g: &CitationGraph, f: &CorpusFilter) -> (Eligibility, FilterReport) {
    let mut report = FilterReport {
        total: g.len() as u64,
        ..FilterReport::default()
    };
    let mask = (0..g.len() as u32)
        .map(|ix| {
            let mut ok = true;
            if (g.n_references(ix) as u64) < f.min_references {
                report.too_few_references += 1;
                ok = false;
            }
            if (g.n_citations(ix) as u64) < f.min_citations {
                report.too_few_citations += 1;
                ok = false;
            }
            if !f.doc_types.contains(&g.doc_type(ix)) {
                report.doc_type += 1;
                ok = false;
            }
            let y = g.year(ix);
            if f.min_year.is_some_and(|m| y < m) || f.max_year.is_some_and(|m| y > m) {
                report.year_out_of_range += 1;
                ok = false;
            }
            if ok {
                report.eligible += 1;
            }
            ok
        })
        .collect();
    (Eligibility { mask }, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, PaperId, PaperRecord};
    use alloc::vec;

    fn rec(id: u64, year: i16, doc_type: DocType) -> PaperRecord {
        PaperRecord {
            id: PaperId(id),
            year,
            doc_type,
            ..PaperRecord::default()
        }
    }

    /// 1: 0 refs / 2 cites, 2: 2 refs / 0 cites, 3: book chapter with both,
    /// 4: journal article with both.
    fn fixture() -> CitationGraph {
        let e = |a: u64, b: u64| (PaperId(a), PaperId(b));
        build_graph(
            vec![
                rec(1, 1990, DocType::JournalArticle),
                rec(2, 2010, DocType::JournalArticle),
                rec(3, 2000, DocType::BookChapter),
                rec(4, 2000, DocType::JournalArticle),
            ],
            vec![e(2, 3), e(2, 4), e(3, 1), e(4, 1)],
        )
        .unwrap()
        .0
    }

    #[test]
    fn default_filter_rules() {
        let g = fixture();
        let (elig, report) = apply_filter(&g, &CorpusFilter::default());
        let ix = |id| g.index_of(PaperId(id)).unwrap();
        assert!(!elig.is_eligible(ix(1)), "no references");
        assert!(!elig.is_eligible(ix(2)), "no citations");
        assert!(!elig.is_eligible(ix(3)), "book chapter");
        assert!(elig.is_eligible(ix(4)));
        assert_eq!(report.eligible, 1);
        assert_eq!(report.too_few_references, 1);
        assert_eq!(report.too_few_citations, 1);
        assert_eq!(report.doc_type, 1);
        // The excluded paper 1 is still in the graph as a reference.
        assert_eq!(g.n_citations(ix(1)), 2);
    }

    #[test]
    fn tightening_never_grows_the_eligible_set() {
        let g = fixture();
        let loose = CorpusFilter::permissive();
        let mut tight = loose.clone();
        tight.min_year = Some(1995);
        let (a, _) = apply_filter(&g, &loose);
        let (b, _) = apply_filter(&g, &tight);
        assert!(b.count() <= a.count());
        assert!(b.indices().all(|i| a.is_eligible(i)));
    }
}
