//! Synthetic corpora with known structure, used by the tests and by the
//! `synth` command.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use dindex_core::graph::TAXONOMY_SIZE;
use dindex_core::{
    build_graph, BuildReport, CitationGraph, DocType, GraphError, PaperId, PaperRecord,
};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ids::author_id;
use crate::tsv::{EDGES_HEADER, PAPERS_HEADER};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthPaper {
    pub id: u64,
    pub year: i16,
    pub doc_type: DocType,
    /// Author numbers, written as `A<n>`.
    pub authors: Vec<u64>,
    pub fields: Vec<u16>,
}

impl SynthPaper {
    pub fn new(id: u64, year: i16) -> Self {
        SynthPaper {
            id,
            year,
            doc_type: DocType::JournalArticle,
            authors: Vec::new(),
            fields: Vec::new(),
        }
    }

    pub fn record(&self) -> PaperRecord {
        PaperRecord {
            id: PaperId(self.id),
            year: self.year,
            doc_type: self.doc_type,
            author_ids: self
                .authors
                .iter()
                .map(|a| author_id(&format!("A{a}")))
                .collect(),
            field_ids: self.fields.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub papers: Vec<SynthPaper>,
    /// `(citer, cited)`.
    pub edges: Vec<(u64, u64)>,
}

impl Corpus {
    pub fn add(&mut self, p: SynthPaper) -> u64 {
        let id = p.id;
        self.papers.push(p);
        id
    }

    pub fn cite(&mut self, citer: u64, cited: u64) {
        self.edges.push((citer, cited));
    }

    pub fn next_id(&self) -> u64 {
        self.papers.len() as u64 + 1
    }

    pub fn records(&self) -> Vec<PaperRecord> {
        self.papers.iter().map(SynthPaper::record).collect()
    }

    pub fn edge_ids(&self) -> Vec<(PaperId, PaperId)> {
        self.edges
            .iter()
            .map(|&(a, b)| (PaperId(a), PaperId(b)))
            .collect()
    }

    pub fn build(&self) -> Result<(CitationGraph, BuildReport), GraphError> {
        build_graph(self.records(), self.edge_ids())
    }

    /// Writes `papers.tsv` and `edges.tsv` into `dir` with ids `<prefix><n>`.
    pub fn write_tsv(&self, dir: &Path, prefix: &str) -> io::Result<(PathBuf, PathBuf)> {
        let papers = dir.join("papers.tsv");
        let edges = dir.join("edges.tsv");
        let mut w = BufWriter::with_capacity(1 << 20, File::create(&papers)?);
        writeln!(w, "{}", PAPERS_HEADER.join("\t"))?;
        for p in &self.papers {
            write!(w, "{prefix}{}\t{}\t{}\t", p.id, p.year, p.doc_type)?;
            for (i, a) in p.authors.iter().enumerate() {
                write!(w, "{}A{a}", if i > 0 { ";" } else { "" })?;
            }
            w.write_all(b"\t")?;
            for (i, f) in p.fields.iter().enumerate() {
                write!(w, "{}{f}", if i > 0 { ";" } else { "" })?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let mut w = BufWriter::with_capacity(1 << 20, File::create(&edges)?);
        writeln!(w, "{}", EDGES_HEADER.join("\t"))?;
        for (a, b) in &self.edges {
            writeln!(w, "{prefix}{a}\t{prefix}{b}")?;
        }
        w.flush()?;
        Ok((papers, edges))
    }
}

fn random_fields(rng: &mut impl Rng, k: usize) -> Vec<u16> {
    let mut f: Vec<u16> = sample(rng, TAXONOMY_SIZE as usize, k)
        .into_iter()
        .map(|i| i as u16)
        .collect();
    f.sort_unstable();
    f
}

/// Erdős–Rényi style DAG: papers in a random order, each earlier paper cited
/// with probability `p`. Years are drawn independently of the order, so some
/// edges point forward in time. Authors come from a small pool so that
/// self-citations occur.
pub fn random_dag(rng: &mut impl Rng, n: usize, p: f64) -> Corpus {
    let mut c = Corpus::default();
    let mut ids: Vec<u64> = (1..=n as u64).map(|i| i * 3 + 7).collect();
    ids.shuffle(rng);
    let pool = (n as u64 / 3).max(2);
    for &id in &ids {
        let n_authors = rng.random_range(0..4);
        let mut authors: Vec<u64> = (0..n_authors).map(|_| rng.random_range(0..pool)).collect();
        authors.sort_unstable();
        authors.dedup();
        c.add(SynthPaper {
            id,
            year: rng.random_range(1990..=2010),
            doc_type: if rng.random_bool(0.9) {
                DocType::JournalArticle
            } else {
                DocType::Other
            },
            authors,
            fields: {
                let n = rng.random_range(0..3);
                random_fields(rng, n)
            },
        });
    }
    for (pos, &citer) in ids.iter().enumerate() {
        for &cited in &ids[..pos] {
            if rng.random_bool(p) {
                c.cite(citer, cited);
            }
        }
    }
    c
}

/// Large corpus for throughput tests: `n` papers with years rising in id
/// order and `m` reference edges to earlier papers. Most references are
/// uniform; a share is copied from the reference list of a random earlier
/// paper, which gives a moderately heavy in-degree tail.
pub fn scale_corpus(rng: &mut impl Rng, n: usize, m: usize) -> Corpus {
    let mut c = Corpus {
        papers: Vec::with_capacity(n),
        edges: Vec::with_capacity(m),
    };
    let mut first_ref = Vec::with_capacity(n + 1);
    let authors_pool = (n as u64 / 2).max(1);
    for i in 0..n {
        let id = i as u64 + 1;
        let k = rng.random_range(1..=6);
        c.add(SynthPaper {
            id,
            year: 1950 + (i * 70 / n.max(1)) as i16,
            doc_type: if rng.random_bool(0.9) {
                DocType::JournalArticle
            } else {
                DocType::ProceedingsArticle
            },
            authors: (0..k).map(|_| rng.random_range(0..authors_pool)).collect(),
            fields: random_fields(rng, 2),
        });
        first_ref.push(c.edges.len());
        if i == 0 {
            continue;
        }
        let quota = m / n + usize::from(i < m % n);
        for _ in 0..quota {
            let cited = if rng.random_bool(0.2) {
                let q = rng.random_range(0..i);
                let (lo, hi) = (
                    first_ref[q],
                    first_ref.get(q + 1).copied().unwrap_or(c.edges.len()),
                );
                if lo < hi {
                    c.edges[rng.random_range(lo..hi)].1
                } else {
                    rng.random_range(1..=i as u64)
                }
            } else {
                rng.random_range(1..=i as u64)
            };
            c.cite(id, cited);
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagSpec {
    /// Inclusive focal-year ranges.
    pub year_ranges: Vec<(i16, i16)>,
    pub focals_per_year: usize,
    /// Teams of at most this size receive their type-i citers late.
    pub small_team_max: u32,
    pub lag: (i16, i16),
}

impl Default for LagSpec {
    fn default() -> Self {
        LagSpec {
            year_ranges: vec![
                (2018, 2019),
                (2016, 2017),
                (2014, 2015),
                (2009, 2010),
                (1999, 2000),
                (1994, 1995),
            ],
            focals_per_year: 150,
            small_team_max: 3,
            lag: (6, 7),
        }
    }
}

/// Corpus in which small teams attract citers that cite them but not their
/// references (type i) only after a lag, while every other citer arrives
/// within a year. Type-i volume falls with team size.
///
/// Each focal has team size 1..=10, 5..=50 private references, 10..=30 prompt
/// citers that also cite one reference (type j), `40 - 3k` type-i citers
/// (plus noise) and a few papers citing only a reference (type k). No author
/// is shared between papers.
pub fn lag_corpus(rng: &mut impl Rng, spec: &LagSpec) -> Corpus {
    let mut c = Corpus::default();
    let mut author = 0u64;
    let mut team = |size: u32| {
        let t: Vec<u64> = (author..author + size as u64).collect();
        author += size as u64;
        t
    };
    for &(lo, hi) in &spec.year_ranges {
        for year in lo..=hi {
            for _ in 0..spec.focals_per_year {
                let k = rng.random_range(1..=10u32);
                let r = rng.random_range(5..=50usize);
                let mut focal = SynthPaper::new(c.next_id(), year);
                focal.authors = team(k);
                let focal = c.add(focal);
                let refs: Vec<u64> = (0..r)
                    .map(|_| {
                        let mut p = SynthPaper::new(c.next_id(), year - rng.random_range(1..=15));
                        p.authors = team(1);
                        c.add(p)
                    })
                    .collect();
                for &q in &refs {
                    c.cite(focal, q);
                }
                let late = k <= spec.small_team_max;
                let n_i = (40 - 3 * k as i64 + rng.random_range(-3..=3)).max(1);
                for _ in 0..n_i {
                    let lag = if late {
                        rng.random_range(spec.lag.0..=spec.lag.1)
                    } else {
                        rng.random_range(0..=1)
                    };
                    let mut p = SynthPaper::new(c.next_id(), year + lag);
                    p.authors = team(2);
                    let p = c.add(p);
                    c.cite(p, focal);
                }
                for _ in 0..rng.random_range(10..=30) {
                    let mut p = SynthPaper::new(c.next_id(), year + rng.random_range(0..=1));
                    p.authors = team(2);
                    let p = c.add(p);
                    c.cite(p, focal);
                    c.cite(p, refs[rng.random_range(0..r)]);
                }
                for _ in 0..rng.random_range(0..=5) {
                    let mut p = SynthPaper::new(c.next_id(), year + rng.random_range(0..=1));
                    p.authors = team(2);
                    let p = c.add(p);
                    c.cite(p, refs[rng.random_range(0..r)]);
                }
            }
        }
    }
    c
}

/// Corpus in which every focal paper satisfies `D0 = d_p / (1 + b_p)`
/// exactly, i.e. `R_k = b_p`.
///
/// Every focal has 21 type-i and 20 type-j citers, so `C_p = 41` and
/// `d_p = 1/41`. Its first reference is cited by the focal, by all type-j
/// citers and by `41 L - 21` further papers, which makes it the most cited
/// reference with `C_max = 41 L`. The remaining references share 21 more
/// citing papers, so `N_k = C_max`. One focal is made per reference length
/// in `ref_lengths` and per burden level `L`.
pub fn reflen_corpus(
    ref_lengths: impl IntoIterator<Item = usize> + Clone,
    levels: &[u64],
) -> Corpus {
    let mut c = Corpus::default();
    for &level in levels {
        for r in ref_lengths.clone() {
            assert!(r >= 2, "need a second reference");
            let focal = c.add(SynthPaper::new(c.next_id(), 2000));
            let refs: Vec<u64> = (0..r)
                .map(|_| c.add(SynthPaper::new(c.next_id(), 1990)))
                .collect();
            for &q in &refs {
                c.cite(focal, q);
            }
            for _ in 0..21 {
                let p = c.add(SynthPaper::new(c.next_id(), 2001));
                c.cite(p, focal);
            }
            for _ in 0..20 {
                let p = c.add(SynthPaper::new(c.next_id(), 2001));
                c.cite(p, focal);
                c.cite(p, refs[0]);
            }
            for _ in 0..(41 * level - 21) {
                let p = c.add(SynthPaper::new(c.next_id(), 2001));
                c.cite(p, refs[0]);
            }
            for j in 0..21 {
                let p = c.add(SynthPaper::new(c.next_id(), 2001));
                c.cite(p, refs[1 + j % (r - 1)]);
            }
        }
    }
    c
}

/// Fields assigned uniformly at random, `fields_per_paper` per paper. Each of
/// `focals` papers has one to three private references and is cited by a
/// random subset (about 150) of a pool of 400 citing papers that cite no
/// references, so every focal has `D0 = 1` and more than 100 citations.
pub fn null_field_corpus(rng: &mut impl Rng, focals: usize, fields_per_paper: usize) -> Corpus {
    let mut c = Corpus::default();
    let pool: Vec<u64> = (0..400)
        .map(|_| {
            let mut p = SynthPaper::new(c.next_id(), 2010);
            p.fields = random_fields(rng, fields_per_paper);
            c.add(p)
        })
        .collect();
    for _ in 0..focals {
        let mut f = SynthPaper::new(c.next_id(), 2000);
        f.fields = random_fields(rng, fields_per_paper);
        let f = c.add(f);
        for _ in 0..rng.random_range(1..=3) {
            let mut q = SynthPaper::new(c.next_id(), 1990);
            q.fields = random_fields(rng, fields_per_paper);
            let q = c.add(q);
            c.cite(f, q);
        }
        let n = rng.random_range(120..=180);
        for ix in sample(rng, pool.len(), n) {
            c.cite(pool[ix], f);
        }
    }
    c
}

/// Focal papers whose reference citation counts follow
/// `round(c / (b + r)^a)` for ranks `r = 1..=n_refs`. Citing papers are
/// shared: the reference at rank `r` is cited by the first `C_r` papers of a
/// common pool.
pub fn zipf_corpus(focals: usize, n_refs: usize, a: f64, b: f64, c_scale: f64) -> Corpus {
    let counts: Vec<u64> = (1..=n_refs)
        .map(|r| (c_scale / (b + r as f64).powf(a)).round() as u64)
        .collect();
    let mut c = Corpus::default();
    let pool: Vec<u64> = (0..counts.iter().copied().max().unwrap_or(0))
        .map(|_| c.add(SynthPaper::new(c.next_id(), 2001)))
        .collect();
    for _ in 0..focals {
        let f = c.add(SynthPaper::new(c.next_id(), 2000));
        for &n in &counts {
            let q = c.add(SynthPaper::new(c.next_id(), 1990));
            c.cite(f, q);
            // The focal itself counts as one citation.
            for &p in &pool[..n.saturating_sub(1) as usize] {
                c.cite(p, q);
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use dindex_core::{d_index, decompose, WindowSpec};

    #[test]
    fn reflen_identity_holds() {
        let corpus = reflen_corpus([2, 7, 30], &[1, 10]);
        let (g, report) = corpus.build().unwrap();
        assert_eq!(report.duplicate_edges, 0);
        for ix in 0..g.len() as u32 {
            if g.n_references(ix) == 0 || g.n_citations(ix) != 41 {
                continue;
            }
            let d = decompose(&g, g.id(ix), WindowSpec::Unlimited).unwrap();
            assert_eq!(d.r_k, d.b_p.unwrap());
            assert!((d.d_p - 1.0 / 41.0).abs() < 1e-15);
        }
    }

    #[test]
    fn null_fields_focals_are_disruptive() {
        let corpus = null_field_corpus(&mut rng(1), 5, 2);
        let (g, _) = corpus.build().unwrap();
        let focals: Vec<_> = corpus.papers.iter().filter(|p| p.year == 2000).collect();
        assert_eq!(focals.len(), 5);
        for f in focals {
            let d = d_index(&g, PaperId(f.id), WindowSpec::Unlimited).unwrap();
            assert_eq!(d, 1.0);
            assert!(g.n_citations(g.index_of(PaperId(f.id)).unwrap()) > 100);
        }
    }

    #[test]
    fn scale_corpus_shape() {
        let c = scale_corpus(&mut rng(3), 1000, 10_000);
        assert_eq!(c.papers.len(), 1000);
        assert_eq!(c.edges.len(), 10_000 - 10);
        assert!(c.edges.iter().all(|&(a, b)| b < a));
    }

    #[test]
    fn tsv_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Corpus::default();
        let mut p = SynthPaper::new(1, 2000);
        p.authors = vec![3, 4];
        p.fields = vec![1, 2];
        c.add(p);
        c.add(SynthPaper::new(2, 2001));
        c.cite(2, 1);
        let (papers, edges) = c.write_tsv(dir.path(), "W").unwrap();
        let text = std::fs::read_to_string(papers).unwrap();
        assert_eq!(
            text,
            "id\tyear\tdoc_type\tauthor_ids\tfield_ids\nW1\t2000\tjournal-article\tA3;A4\t1;2\nW2\t2001\tjournal-article\t\t\n"
        );
        assert_eq!(
            std::fs::read_to_string(edges).unwrap(),
            "citer_id\tcited_id\nW2\tW1\n"
        );
    }
}
