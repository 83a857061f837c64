use std::collections::BTreeSet;

use dindex_core::analysis::overlap_baseline;
use dindex_core::disruption::{D4Mode, SelfCitationRule};
use dindex_core::{
    build_graph, AuthorId, CitationGraph, Classifier, DocType, PaperId, PaperRecord,
    ResolvedVariants, WindowSpec,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone)]
struct Dag {
    years: Vec<i16>,
    authors: Vec<Vec<u64>>,
    edges: Vec<(u64, u64)>,
}

impl Dag {
    fn records(&self) -> Vec<PaperRecord> {
        (0..self.years.len())
            .map(|i| PaperRecord {
                id: PaperId(i as u64 + 1),
                year: self.years[i],
                doc_type: DocType::JournalArticle,
                author_ids: self.authors[i].iter().map(|&a| AuthorId(a)).collect(),
                field_ids: Vec::new(),
            })
            .collect()
    }

    fn edge_ids(&self) -> Vec<(PaperId, PaperId)> {
        self.edges
            .iter()
            .map(|&(a, b)| (PaperId(a + 1), PaperId(b + 1)))
            .collect()
    }

    fn graph(&self) -> CitationGraph {
        build_graph(self.records(), self.edge_ids()).unwrap().0
    }

    fn refs(&self, p: u64) -> BTreeSet<u64> {
        self.edges
            .iter()
            .filter(|e| e.0 == p)
            .map(|e| e.1)
            .collect()
    }
}

/// Random citation DAGs: a paper may only cite papers earlier in a random
/// order; years are drawn independently of that order.
fn dag(max_n: usize) -> impl Strategy<Value = Dag> {
    (2..=max_n, 0.02f64..0.3, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut rng = StdRng::seed_from_u64(seed);
        let years = (0..n).map(|_| rng.random_range(1990..2010)).collect();
        let authors = (0..n)
            .map(|_| {
                let mut a: Vec<u64> = (0..rng.random_range(0..3))
                    .map(|_| rng.random_range(0..8))
                    .collect();
                a.sort_unstable();
                a.dedup();
                a
            })
            .collect();
        let order = sample(&mut rng, n, n).into_vec();
        let mut edges = Vec::new();
        for a in 0..n {
            for b in 0..a {
                if rng.random_bool(p) {
                    edges.push((order[a] as u64, order[b] as u64));
                }
            }
        }
        Dag {
            years,
            authors,
            edges,
        }
    })
}

fn window() -> impl Strategy<Value = WindowSpec> {
    prop_oneof![
        Just(WindowSpec::Unlimited),
        (1u16..12).prop_map(WindowSpec::Years)
    ]
}

fn admitted(anchor: i16, year: i16, w: WindowSpec) -> bool {
    year >= anchor
        && match w {
            WindowSpec::Unlimited => true,
            WindowSpec::Years(w) => i32::from(year - anchor) <= i32::from(w),
        }
}

/// Direct enumeration over every other paper in the corpus.
fn brute_force(d: &Dag, focal: u64, w: WindowSpec) -> [Vec<u64>; 3] {
    let focal_refs = d.refs(focal);
    let anchor = d.years[focal as usize];
    let mut out: [Vec<u64>; 3] = Default::default();
    for q in 0..d.years.len() as u64 {
        if q == focal || !admitted(anchor, d.years[q as usize], w) {
            continue;
        }
        let q_refs = d.refs(q);
        let cites_focal = q_refs.contains(&focal);
        let cites_ref = !q_refs.is_disjoint(&focal_refs);
        match (cites_focal, cites_ref) {
            (true, false) => out[0].push(q + 1),
            (true, true) => out[1].push(q + 1),
            (false, true) => out[2].push(q + 1),
            (false, false) => {}
        }
    }
    out
}

fn ids(v: &[PaperId]) -> Vec<u64> {
    v.iter().map(|p| p.0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classification_matches_enumeration(d in dag(60), w in window()) {
        let g = d.graph();
        let mut c = Classifier::new(&g, ResolvedVariants::default());
        for ix in 0..g.len() as u32 {
            let got = c.classify(ix, w);
            let [i, j, k] = brute_force(&d, ix as u64, w);
            prop_assert_eq!(ids(&got.set_i), i);
            prop_assert_eq!(ids(&got.set_j), j);
            prop_assert_eq!(ids(&got.set_k), k);
        }
    }

    #[test]
    fn references_and_citers_mirror_each_other(d in dag(60)) {
        let g = d.graph();
        prop_assert_eq!(g.edge_count(), d.edges.len());
        for ix in 0..g.len() as u32 {
            let refs = g.refs_ix(ix);
            prop_assert!(refs.windows(2).all(|w| w[0] < w[1]));
            for &r in refs {
                prop_assert!(g.citers_ix(r).contains(&ix));
            }
            for &c in g.citers_ix(ix) {
                prop_assert!(g.refs_ix(c).contains(&ix));
            }
        }
    }

    #[test]
    fn counts_grow_with_the_window(d in dag(50), w in 1u16..10) {
        let g = d.graph();
        let mut c = Classifier::new(&g, ResolvedVariants::default());
        for ix in 0..g.len() as u32 {
            let narrow = c.compute(ix, WindowSpec::Years(w));
            let wide = c.compute(ix, WindowSpec::Years(w + 1));
            let all = c.compute(ix, WindowSpec::Unlimited);
            for (a, b) in [(&narrow, &wide), (&wide, &all)] {
                prop_assert!(a.n_i <= b.n_i && a.n_j <= b.n_j && a.n_k <= b.n_k);
                prop_assert!(a.c_max <= b.c_max);
            }
        }
    }

    #[test]
    fn input_order_does_not_matter(d in dag(50), seed in any::<u64>()) {
        let g = d.graph();
        let mut rng = StdRng::seed_from_u64(seed);
        let mut records = d.records();
        let mut edges = d.edge_ids();
        let perm = sample(&mut rng, records.len(), records.len()).into_vec();
        records = perm.into_iter().map(|i| records[i].clone()).collect();
        let perm = sample(&mut rng, edges.len(), edges.len()).into_vec();
        edges = perm.into_iter().map(|i| edges[i]).collect();
        let h = build_graph(records, edges).unwrap().0;
        prop_assert_eq!(g.columns(), h.columns());
    }

    #[test]
    fn result_invariants(d in dag(60), w in window()) {
        let g = d.graph();
        let cfg = ResolvedVariants { popular_min_citations: 2, ..Default::default() };
        let mut c = Classifier::new(&g, cfg);
        for ix in 0..g.len() as u32 {
            let cls = c.classify(ix, w);
            let i: BTreeSet<_> = cls.set_i.iter().collect();
            let j: BTreeSet<_> = cls.set_j.iter().collect();
            let k: BTreeSet<_> = cls.set_k.iter().collect();
            prop_assert!(i.is_disjoint(&j) && j.is_disjoint(&k) && i.is_disjoint(&k));

            let r = c.compute(ix, w);
            prop_assert_eq!((r.n_i, r.n_j, r.n_k), (cls.n_i(), cls.n_j(), cls.n_k()));
            prop_assert_eq!(r.c_p, r.n_i + r.n_j);
            if r.flags.undefined() {
                prop_assert!(r.d0.is_none() && r.d1.is_none() && r.d2.is_none());
                prop_assert!(r.d3.is_none() && r.d4.is_none());
                continue;
            }
            let d0 = r.d0.unwrap();
            prop_assert!((-1.0..=1.0).contains(&d0));
            prop_assert_eq!(d0 > 0.0, r.n_i > r.n_j);
            prop_assert_eq!(d0 < 0.0, r.n_i < r.n_j);
            if let (Some(d_p), Some(r_k)) = (r.d_p, r.r_k) {
                prop_assert!((d0 * (1.0 + r_k) - d_p).abs() <= 1e-12);
            }
            if let (Some(d3), Some(d4)) = (r.d3, r.d4) {
                prop_assert!(d4 <= d3 + 1e-15);
                prop_assert!((0.0..=1.0).contains(&d3));
            }
            if g.n_references(ix) == 1 {
                prop_assert_eq!(r.d3, r.d4);
            }
        }
    }

    #[test]
    fn self_citation_filter_is_inert_without_shared_authors(d in dag(50), w in window()) {
        let mut d = d;
        for (i, a) in d.authors.iter_mut().enumerate() {
            *a = vec![1000 + i as u64];
        }
        let g = d.graph();
        let on = ResolvedVariants { self_citation_rule: SelfCitationRule::AuthorOverlap, ..Default::default() };
        let off = ResolvedVariants { self_citation_rule: SelfCitationRule::Off, ..Default::default() };
        let (mut a, mut b) = (Classifier::new(&g, on), Classifier::new(&g, off));
        for ix in 0..g.len() as u32 {
            let (x, y) = (a.compute(ix, w), b.compute(ix, w));
            prop_assert_eq!(x.d1, x.d0);
            prop_assert_eq!(y.d1, y.d0);
        }
    }

    #[test]
    fn d4_with_type_k_never_exceeds_citers_only(d in dag(50), w in window()) {
        let g = d.graph();
        let with_k = ResolvedVariants { d4_mode: D4Mode::IncludeK, ..Default::default() };
        let (mut a, mut b) = (
            Classifier::new(&g, ResolvedVariants::default()),
            Classifier::new(&g, with_k),
        );
        for ix in 0..g.len() as u32 {
            let (x, y) = (a.compute(ix, w), b.compute(ix, w));
            if let (Some(p), Some(q)) = (x.d4, y.d4) {
                prop_assert!(q <= p);
                if x.n_k == 0 {
                    prop_assert_eq!(p, q);
                }
            }
        }
    }
}

fn k_subsets(n: u32, k: u32) -> Vec<u32> {
    (0u32..1 << n).filter(|m| m.count_ones() == k).collect()
}

#[test]
fn overlap_baseline_matches_exhaustive_enumeration() {
    for n in 1..=12u32 {
        for k in 1..=n {
            let sets = k_subsets(n, k);
            let total = sets.len() * sets.len();
            let hits: usize = sets
                .iter()
                .map(|a| sets.iter().filter(|&&b| a & b != 0).count())
                .sum();
            let exact = hits as f64 / total as f64;
            let got = overlap_baseline(n as u64, k as u64).unwrap();
            assert!((got - exact).abs() < 1e-15, "n={n} k={k}: {got} vs {exact}");
        }
    }
}

#[test]
fn overlap_baseline_matches_random_assignment() {
    let mut rng = StdRng::seed_from_u64(11);
    let trials = 400_000u32;
    let mut hits = 0u32;
    for _ in 0..trials {
        let a = sample(&mut rng, 292, 2);
        let b = sample(&mut rng, 292, 2);
        if a.iter().any(|x| b.iter().any(|y| x == y)) {
            hits += 1;
        }
    }
    let p = overlap_baseline(292, 2).unwrap();
    let rate = f64::from(hits) / f64::from(trials);
    let se = (p * (1.0 - p) / f64::from(trials)).sqrt();
    assert!((rate - p).abs() < 4.0 * se, "rate {rate} vs {p} (se {se})");
}
