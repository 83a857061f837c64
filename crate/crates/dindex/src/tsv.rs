//! Tab-separated input files.
//!
//! `papers.tsv` has the header `id year doc_type author_ids field_ids`, with
//! author and field lists joined by `;`. `edges.tsv` has the header
//! `citer_id cited_id`. Blank lines are skipped; malformed lines are reported
//! with their line number and the rest of the file is still read.

use std::io::{self, BufRead};

use dindex_core::{DocType, PaperId, PaperRecord};
use thiserror::Error;

use crate::ids::{author_id, IdCodec};

pub const PAPERS_HEADER: [&str; 5] = ["id", "year", "doc_type", "author_ids", "field_ids"];
pub const EDGES_HEADER: [&str; 2] = ["citer_id", "cited_id"];

/// Malformed lines kept verbatim in a [`ParseReport`].
pub const SAMPLE_LIMIT: usize = 20;

#[derive(Debug, Error)]
pub enum TsvError {
    #[error("missing header: expected {expected:?}, found {found:?}")]
    MissingHeader { expected: String, found: String },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{malformed} of {lines} lines malformed, above the {tolerance} tolerance")]
    TooManyErrors {
        malformed: u64,
        lines: u64,
        tolerance: f64,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    /// Non-blank data lines.
    pub lines: u64,
    pub parsed: u64,
    pub malformed: u64,
    pub self_loops: u64,
    pub samples: Vec<(u64, String)>,
}

impl ParseReport {
    pub fn malformed_fraction(&self) -> f64 {
        if self.lines == 0 {
            0.0
        } else {
            self.malformed as f64 / self.lines as f64
        }
    }

    /// Fails when the malformed share is above `tolerance`.
    pub fn check(&self, tolerance: f64) -> Result<(), TsvError> {
        if self.malformed_fraction() > tolerance {
            return Err(TsvError::TooManyErrors {
                malformed: self.malformed,
                lines: self.lines,
                tolerance,
            });
        }
        Ok(())
    }

    fn record(&mut self, e: TsvError) -> Result<(), TsvError> {
        match e {
            TsvError::Parse { line, message } => {
                self.malformed += 1;
                if self.samples.len() < SAMPLE_LIMIT {
                    self.samples.push((line, message));
                }
                Ok(())
            }
            other => Err(other),
        }
    }
}

struct Lines<R> {
    reader: R,
    buf: String,
    line: u64,
}

impl<R: BufRead> Lines<R> {
    fn new(reader: R) -> Self {
        Lines {
            reader,
            buf: String::new(),
            line: 0,
        }
    }

    /// Next non-blank line without its terminator.
    fn next_line(&mut self) -> io::Result<Option<(u64, &str)>> {
        loop {
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let trimmed = self.buf.trim_end_matches(['\n', '\r']);
            if !trimmed.is_empty() {
                let len = trimmed.len();
                return Ok(Some((self.line, &self.buf[..len])));
            }
        }
    }

    fn header(&mut self, expected: &[&str]) -> Result<(), TsvError> {
        let want = expected.join("\t");
        match self.next_line()? {
            Some((_, h)) if h == want => Ok(()),
            found => Err(TsvError::MissingHeader {
                expected: want,
                found: found.map_or("", |f| f.1).to_string(),
            }),
        }
    }
}

fn bad(line: u64, message: impl Into<String>) -> TsvError {
    TsvError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_paper_line(line: u64, text: &str, codec: &mut IdCodec) -> Result<PaperRecord, TsvError> {
    let cols: Vec<&str> = text.split('\t').collect();
    if cols.len() != PAPERS_HEADER.len() {
        return Err(bad(
            line,
            format!("expected 5 columns, found {}", cols.len()),
        ));
    }
    let id = codec
        .encode(cols[0])
        .map_err(|e| bad(line, e.to_string()))?;
    let year: i16 = cols[1]
        .parse()
        .map_err(|_| bad(line, format!("invalid year {:?}", cols[1])))?;
    let author_ids = cols[3]
        .split(';')
        .filter(|a| !a.is_empty())
        .map(author_id)
        .collect();
    let field_ids = cols[4]
        .split(';')
        .filter(|f| !f.is_empty())
        .map(|f| {
            f.parse::<u16>()
                .map_err(|_| bad(line, format!("invalid field id {f:?}")))
        })
        .collect::<Result<_, _>>()?;
    let record = PaperRecord {
        id,
        year,
        doc_type: DocType::from_label(cols[2]),
        author_ids,
        field_ids,
    };
    record.validate().map_err(|e| bad(line, e.to_string()))?;
    Ok(record)
}

fn parse_edge_line(line: u64, text: &str, codec: &IdCodec) -> Result<(PaperId, PaperId), TsvError> {
    let mut cols = text.split('\t');
    let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
        return Err(bad(line, "expected 2 columns"));
    };
    let citer = codec.lookup(a).map_err(|e| bad(line, e.to_string()))?;
    let cited = codec.lookup(b).map_err(|e| bad(line, e.to_string()))?;
    Ok((citer, cited))
}

/// Streaming reader over `papers.tsv`. Items are records or per-line
/// [`TsvError::Parse`] errors; an IO error ends the stream.
pub struct PaperReader<'c, R> {
    lines: Lines<R>,
    codec: &'c mut IdCodec,
}

pub fn parse_papers<R: BufRead>(
    reader: R,
    codec: &mut IdCodec,
) -> Result<PaperReader<'_, R>, TsvError> {
    let mut lines = Lines::new(reader);
    lines.header(&PAPERS_HEADER)?;
    Ok(PaperReader { lines, codec })
}

impl<R: BufRead> Iterator for PaperReader<'_, R> {
    type Item = Result<PaperRecord, TsvError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, text) = match self.lines.next_line() {
            Ok(t) => t?,
            Err(e) => return Some(Err(e.into())),
        };
        Some(parse_paper_line(line, text, self.codec))
    }
}

/// Streaming reader over `edges.tsv`, in input order and without
/// deduplication. Self-loops are passed through.
pub struct EdgeReader<'c, R> {
    lines: Lines<R>,
    codec: &'c IdCodec,
}

pub fn parse_edges<R: BufRead>(reader: R, codec: &IdCodec) -> Result<EdgeReader<'_, R>, TsvError> {
    let mut lines = Lines::new(reader);
    lines.header(&EDGES_HEADER)?;
    Ok(EdgeReader { lines, codec })
}

impl<R: BufRead> Iterator for EdgeReader<'_, R> {
    type Item = Result<(PaperId, PaperId), TsvError>;

    fn next(&mut self) -> Option<Self::Item> {
        let (line, text) = match self.lines.next_line() {
            Ok(t) => t?,
            Err(e) => return Some(Err(e.into())),
        };
        Some(parse_edge_line(line, text, self.codec))
    }
}

/// Reads every valid paper, counting malformed lines in the report.
pub fn read_papers<R: BufRead>(
    reader: R,
    codec: &mut IdCodec,
) -> Result<(Vec<PaperRecord>, ParseReport), TsvError> {
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for item in parse_papers(reader, codec)? {
        report.lines += 1;
        match item {
            Ok(r) => {
                report.parsed += 1;
                out.push(r);
            }
            Err(e) => report.record(e)?,
        }
    }
    Ok((out, report))
}

pub fn read_edges<R: BufRead>(
    reader: R,
    codec: &IdCodec,
) -> Result<(Vec<(PaperId, PaperId)>, ParseReport), TsvError> {
    let mut report = ParseReport::default();
    let mut out = Vec::new();
    for item in parse_edges(reader, codec)? {
        report.lines += 1;
        match item {
            Ok(e) => {
                report.parsed += 1;
                report.self_loops += (e.0 == e.1) as u64;
                out.push(e);
            }
            Err(e) => report.record(e)?,
        }
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dindex_core::AuthorId;

    const HEAD: &str = "id\tyear\tdoc_type\tauthor_ids\tfield_ids\n";

    #[test]
    fn paper_line() {
        let text = format!("{HEAD}W1\t1953\tjournal-article\tA1;A2\t12;40\n");
        let mut codec = IdCodec::new();
        let (recs, report) = read_papers(text.as_bytes(), &mut codec).unwrap();
        assert_eq!(report.parsed, 1);
        let r = &recs[0];
        assert_eq!(r.id, PaperId(1));
        assert_eq!(r.year, 1953);
        assert_eq!(r.doc_type, DocType::JournalArticle);
        assert_eq!(r.author_ids, vec![author_id("A1"), author_id("A2")]);
        assert_ne!(r.author_ids[0], AuthorId(1));
        assert_eq!(r.field_ids, vec![12, 40]);
    }

    #[test]
    fn empty_fields_and_bad_year() {
        let text = format!(
            "{HEAD}W1\t2000\tjournal-article\t\t\nW2\t17AD\tjournal-article\tA1\t3\n\nW3\t2001\tbook-chapter\tA1\t291\n"
        );
        let mut codec = IdCodec::new();
        let (recs, report) = read_papers(text.as_bytes(), &mut codec).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs[0].field_ids.is_empty() && recs[0].author_ids.is_empty());
        assert_eq!(recs[1].doc_type, DocType::BookChapter);
        assert_eq!(report.lines, 3);
        assert_eq!(report.malformed, 1);
        assert_eq!(report.samples[0].0, 3);
        assert!(report.check(0.05).is_err());
        assert!(report.check(0.5).is_ok());
    }

    #[test]
    fn out_of_range_values() {
        let text =
            format!("{HEAD}W1\t1400\tjournal-article\t\t\nW2\t2000\tjournal-article\t\t292\n");
        let (recs, report) = read_papers(text.as_bytes(), &mut IdCodec::new()).unwrap();
        assert!(recs.is_empty());
        assert_eq!(report.malformed, 2);
    }

    #[test]
    fn missing_header() {
        let err = read_papers(
            "W1\t2000\tjournal-article\t\t\n".as_bytes(),
            &mut IdCodec::new(),
        );
        assert!(matches!(err, Err(TsvError::MissingHeader { .. })));
        let err = read_edges("".as_bytes(), &IdCodec::new());
        assert!(matches!(err, Err(TsvError::MissingHeader { .. })));
    }

    #[test]
    fn edges() {
        let codec = IdCodec::with_prefix("W");
        let text = "citer_id\tcited_id\r\nW2\tW1\r\n\nW1\tW1\nW3\nX4\tW1\n";
        let (edges, report) = read_edges(text.as_bytes(), &codec).unwrap();
        assert_eq!(
            edges,
            vec![(PaperId(2), PaperId(1)), (PaperId(1), PaperId(1))]
        );
        assert_eq!(report.self_loops, 1);
        assert_eq!(report.malformed, 2);
        assert_eq!(report.lines, 4);
    }
}
