use std::fs::File;
use std::io::BufReader;

use dindex::ids::IdCodec;
use dindex::output::{read_results, ResultsFormat, ResultsHeader, ResultsWriter};
use dindex::snapshot::{decode_snapshot, write_snapshot};
use dindex::synth;
use dindex::tsv::{read_edges, read_papers};
use dindex_core::{build_graph, Classifier, ResolvedVariants, WindowSpec};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ids_decode_to_their_text(prefix in "[A-Za-z]{0,3}", n in 1u64..u64::MAX) {
        let text = format!("{prefix}{n}");
        let mut codec = IdCodec::new();
        let id = codec.encode(&text).unwrap();
        prop_assert_eq!(codec.decode(id), text.clone());
        prop_assert_eq!(codec.lookup(&text).unwrap(), id);
    }

    #[test]
    fn tsv_and_snapshot_preserve_the_graph(seed in any::<u64>(), n in 1usize..120, p in 0.0f64..0.2) {
        let corpus = synth::random_dag(&mut synth::rng(seed), n, p);
        let (g, _) = corpus.build().unwrap();

        let dir = tempfile::tempdir().unwrap();
        let (papers, edges) = corpus.write_tsv(dir.path(), "W").unwrap();
        let mut codec = IdCodec::new();
        let (records, pr) = read_papers(BufReader::new(File::open(papers).unwrap()), &mut codec).unwrap();
        let (edge_list, er) = read_edges(BufReader::new(File::open(edges).unwrap()), &codec).unwrap();
        prop_assert_eq!(pr.malformed + er.malformed, 0);
        let (h, _) = build_graph(records, edge_list).unwrap();
        prop_assert_eq!(g.columns(), h.columns());

        let mut bytes = Vec::new();
        let sum = write_snapshot(&h, &codec, &mut bytes).unwrap();
        let snap = decode_snapshot(&bytes).unwrap();
        prop_assert_eq!(snap.checksum, sum);
        prop_assert_eq!(snap.graph.columns(), g.columns());
        prop_assert_eq!(&snap.codec, &codec);
    }

    #[test]
    fn results_survive_both_formats(seed in any::<u64>(), w in 1u16..8) {
        let corpus = synth::random_dag(&mut synth::rng(seed), 80, 0.08);
        let (g, _) = corpus.build().unwrap();
        let codec = IdCodec::with_prefix("W");
        let mut c = Classifier::new(&g, ResolvedVariants::default());
        let rows: Vec<_> = (0..g.len() as u32).map(|ix| c.compute(ix, WindowSpec::Years(w))).collect();
        let header = ResultsHeader {
            schema: dindex::output::RESULTS_SCHEMA.into(),
            version: dindex::output::RESULTS_VERSION,
            snapshot_checksum: dindex::output::checksum_hex(seed),
            window: w.to_string(),
            variants: "all".into(),
            popular_min_citations: 1,
            self_citation: "author-overlap".into(),
            d4_mode: "citers-only".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        for (format, name) in [(ResultsFormat::Jsonl, "r.jsonl"), (ResultsFormat::Tsv, "r.tsv")] {
            let path = dir.path().join(name);
            let mut out = ResultsWriter::new(File::create(&path).unwrap(), format, &header, codec.clone()).unwrap();
            for r in &rows {
                out.write(r).unwrap();
            }
            out.finish().unwrap();
            let (h, back) = read_results(&path, &codec).unwrap();
            prop_assert_eq!(&h, &header);
            prop_assert_eq!(&back, &rows);
        }
    }
}
