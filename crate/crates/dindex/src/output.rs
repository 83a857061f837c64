//! Result files.
//!
//! Results are JSON Lines: a header object naming the schema, the snapshot
//! checksum and the run settings, then one object per focal paper. The TSV
//! form carries the same header as a `#` comment line. Undefined values are
//! `null` in JSON and `NA` in TSV.

use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use dindex_core::zipf::{SurveyRow, ZipfError, ZipfFit, ZipfSurvey};
use dindex_core::{DisruptionResult, ResultFlags};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::IdCodec;

pub const RESULTS_SCHEMA: &str = "dindex-results";
pub const RESULTS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("results file is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("results schema {schema:?} version {version} is not supported")]
    Schema { schema: String, version: u32 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writes through a temporary file in the target directory and renames it
/// into place on success.
pub fn atomic_write<T>(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&File>) -> io::Result<T>,
) -> io::Result<T> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    let value = {
        let mut w = BufWriter::with_capacity(1 << 20, tmp.as_file());
        let v = body(&mut w)?;
        w.flush()?;
        v
    };
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultsHeader {
    pub schema: String,
    pub version: u32,
    /// Hex xxh3 checksum of the snapshot the results were computed from.
    pub snapshot_checksum: String,
    pub window: String,
    pub variants: String,
    pub popular_min_citations: u64,
    pub self_citation: String,
    pub d4_mode: String,
}

pub fn checksum_hex(sum: u64) -> String {
    format!("{sum:016x}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub paper_id: String,
    pub year: i16,
    pub n_refs: u32,
    pub team_size: u32,
    pub n_i: u64,
    pub n_j: u64,
    pub n_k: u64,
    pub c_p: u64,
    pub c_max: u64,
    pub d0: Option<f64>,
    pub d_p: Option<f64>,
    pub r_k: Option<f64>,
    pub b_p: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub d4: Option<f64>,
    pub flags: Vec<String>,
}

impl ResultRow {
    pub fn new(r: &DisruptionResult, codec: &IdCodec) -> ResultRow {
        ResultRow {
            paper_id: codec.decode(r.focal),
            year: r.year,
            n_refs: r.n_refs,
            team_size: r.team_size,
            n_i: r.n_i,
            n_j: r.n_j,
            n_k: r.n_k,
            c_p: r.c_p,
            c_max: r.c_max,
            d0: r.d0,
            d_p: r.d_p,
            r_k: r.r_k,
            b_p: r.b_p,
            d1: r.d1,
            d2: r.d2,
            d3: r.d3,
            d4: r.d4,
            flags: r.flags.names().map(str::to_string).collect(),
        }
    }

    pub fn into_result(self, codec: &IdCodec) -> Result<DisruptionResult, String> {
        let focal = codec.lookup(&self.paper_id).map_err(|e| e.to_string())?;
        let mut flags = ResultFlags::NONE;
        for name in &self.flags {
            flags.insert(
                ResultFlags::from_name(name).ok_or_else(|| format!("unknown flag {name:?}"))?,
            );
        }
        Ok(DisruptionResult {
            focal,
            year: self.year,
            n_refs: self.n_refs,
            team_size: self.team_size,
            n_i: self.n_i,
            n_j: self.n_j,
            n_k: self.n_k,
            c_p: self.c_p,
            c_max: self.c_max,
            d0: self.d0,
            d_p: self.d_p,
            r_k: self.r_k,
            b_p: self.b_p,
            d1: self.d1,
            d2: self.d2,
            d3: self.d3,
            d4: self.d4,
            flags,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultsFormat {
    Jsonl,
    Tsv,
}

pub const TSV_COLUMNS: [&str; 18] = [
    "paper_id",
    "year",
    "n_refs",
    "team_size",
    "n_i",
    "n_j",
    "n_k",
    "c_p",
    "c_max",
    "d0",
    "d_p",
    "r_k",
    "b_p",
    "d1",
    "d2",
    "d3",
    "d4",
    "flags",
];

pub struct NA<T>(pub Option<T>);

impl<T: Display> Display for NA<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.0 {
            Some(v) => v.fmt(f),
            None => f.write_str("NA"),
        }
    }
}

pub struct ResultsWriter<W> {
    out: W,
    format: ResultsFormat,
    codec: IdCodec,
    pub rows: u64,
}

impl<W: Write> ResultsWriter<W> {
    pub fn new(
        mut out: W,
        format: ResultsFormat,
        header: &ResultsHeader,
        codec: IdCodec,
    ) -> io::Result<Self> {
        let json = serde_json::to_string(header)?;
        match format {
            ResultsFormat::Jsonl => writeln!(out, "{json}")?,
            ResultsFormat::Tsv => {
                writeln!(out, "# {json}")?;
                writeln!(out, "{}", TSV_COLUMNS.join("\t"))?;
            }
        }
        Ok(ResultsWriter {
            out,
            format,
            codec,
            rows: 0,
        })
    }

    pub fn write(&mut self, r: &DisruptionResult) -> io::Result<()> {
        let row = ResultRow::new(r, &self.codec);
        self.rows += 1;
        match self.format {
            ResultsFormat::Jsonl => {
                serde_json::to_writer(&mut self.out, &row)?;
                self.out.write_all(b"\n")
            }
            ResultsFormat::Tsv => writeln!(
                self.out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                row.paper_id,
                row.year,
                row.n_refs,
                row.team_size,
                row.n_i,
                row.n_j,
                row.n_k,
                row.c_p,
                row.c_max,
                NA(row.d0),
                NA(row.d_p),
                NA(row.r_k),
                NA(row.b_p),
                NA(row.d1),
                NA(row.d2),
                NA(row.d3),
                NA(row.d4),
                row.flags.join(",")
            ),
        }
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Reads the header line of a results file in either format.
pub fn read_results_header(path: &Path) -> Result<ResultsHeader, OutputError> {
    let mut line = String::new();
    BufReader::new(File::open(path)?).read_line(&mut line)?;
    parse_header(&line)
}

fn parse_header(line: &str) -> Result<ResultsHeader, OutputError> {
    let line = line.strip_prefix("# ").unwrap_or(line);
    if line.trim().is_empty() {
        return Err(OutputError::Empty);
    }
    let header: ResultsHeader = serde_json::from_str(line).map_err(|e| OutputError::Malformed {
        line: 1,
        message: e.to_string(),
    })?;
    if header.schema != RESULTS_SCHEMA || header.version != RESULTS_VERSION {
        return Err(OutputError::Schema {
            schema: header.schema,
            version: header.version,
        });
    }
    Ok(header)
}

fn parse_tsv_row(line: &str) -> Result<ResultRow, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != TSV_COLUMNS.len() {
        return Err(format!(
            "expected {} columns, found {}",
            TSV_COLUMNS.len(),
            cols.len()
        ));
    }
    fn num<T: std::str::FromStr>(s: &str, name: &str) -> Result<T, String> {
        s.parse().map_err(|_| format!("bad {name} {s:?}"))
    }
    fn opt(s: &str, name: &str) -> Result<Option<f64>, String> {
        if s == "NA" {
            Ok(None)
        } else {
            num(s, name).map(Some)
        }
    }
    Ok(ResultRow {
        paper_id: cols[0].to_string(),
        year: num(cols[1], "year")?,
        n_refs: num(cols[2], "n_refs")?,
        team_size: num(cols[3], "team_size")?,
        n_i: num(cols[4], "n_i")?,
        n_j: num(cols[5], "n_j")?,
        n_k: num(cols[6], "n_k")?,
        c_p: num(cols[7], "c_p")?,
        c_max: num(cols[8], "c_max")?,
        d0: opt(cols[9], "d0")?,
        d_p: opt(cols[10], "d_p")?,
        r_k: opt(cols[11], "r_k")?,
        b_p: opt(cols[12], "b_p")?,
        d1: opt(cols[13], "d1")?,
        d2: opt(cols[14], "d2")?,
        d3: opt(cols[15], "d3")?,
        d4: opt(cols[16], "d4")?,
        flags: cols[17]
            .split(',')
            .filter(|f| !f.is_empty())
            .map(str::to_string)
            .collect(),
    })
}

/// Reads a JSONL or TSV results file; the format is told apart by the
/// header line.
pub fn read_results(
    path: &Path,
    codec: &IdCodec,
) -> Result<(ResultsHeader, Vec<DisruptionResult>), OutputError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines.next().transpose()?.unwrap_or_default();
    let tsv = first.starts_with("# ");
    let header = parse_header(&first)?;
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let n = i as u64 + 2;
        if line.is_empty() {
            continue;
        }
        let row = if tsv {
            if n == 2 {
                if line != TSV_COLUMNS.join("\t") {
                    return Err(OutputError::Malformed {
                        line: n,
                        message: "unexpected column header".into(),
                    });
                }
                continue;
            }
            parse_tsv_row(&line)
        } else {
            serde_json::from_str(&line).map_err(|e| e.to_string())
        };
        let row = row.map_err(|message| OutputError::Malformed { line: n, message })?;
        out.push(
            row.into_result(codec)
                .map_err(|message| OutputError::Malformed { line: n, message })?,
        );
    }
    Ok((header, out))
}

pub const SURVEY_COLUMNS: [&str; 9] = [
    "paper_id",
    "n_refs",
    "a",
    "b",
    "c",
    "sse",
    "ratio_emp",
    "ratio_theory",
    "flags",
];

fn fit_flags(fit: &Result<ZipfFit, ZipfError>) -> String {
    match fit {
        Ok(f) => {
            let names = [
                (f.flags.non_converged, "non_converged"),
                (f.flags.non_zipf, "non_zipf"),
                (f.flags.at_boundary, "at_boundary"),
            ];
            names
                .iter()
                .filter(|(on, _)| *on)
                .map(|(_, n)| *n)
                .collect::<Vec<_>>()
                .join(",")
        }
        Err(ZipfError::InsufficientData { .. }) => "insufficient_data".into(),
        Err(ZipfError::NoReferences(_)) => "no_refs".into(),
        Err(ZipfError::ZeroTotal) => "zero_total".into(),
        Err(_) => "error".into(),
    }
}

fn survey_line(
    w: &mut impl Write,
    id: &str,
    n_refs: usize,
    fit: &Result<ZipfFit, ZipfError>,
    ratio_emp: Option<f64>,
    ratio_theory: Option<f64>,
) -> io::Result<()> {
    let f = fit.as_ref().ok();
    writeln!(
        w,
        "{id}\t{n_refs}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        NA(f.map(|f| f.a)),
        NA(f.map(|f| f.b)),
        NA(f.map(|f| f.c)),
        NA(f.map(|f| f.sse)),
        NA(ratio_emp),
        NA(ratio_theory),
        fit_flags(fit)
    )
}

/// Per-paper survey rows followed by a `pooled` row for the rank-wise mean
/// series.
pub fn write_survey(w: &mut impl Write, survey: &ZipfSurvey, codec: &IdCodec) -> io::Result<()> {
    writeln!(w, "{}", SURVEY_COLUMNS.join("\t"))?;
    for row in &survey.rows {
        let SurveyRow {
            paper,
            n_refs,
            fit,
            ratio_emp,
            ratio_theory,
            ..
        } = row;
        survey_line(
            w,
            &codec.decode(*paper),
            *n_refs,
            fit,
            *ratio_emp,
            *ratio_theory,
        )?;
    }
    if let Some(pooled) = &survey.pooled {
        let n = survey.rows.iter().map(|r| r.n_refs).max().unwrap_or(0);
        let theory = pooled
            .as_ref()
            .ok()
            .and_then(|f| f.theoretical_ratio().ok());
        survey_line(w, "pooled", n, pooled, None, theory)?;
    }
    Ok(())
}

/// Two-column `key value` table.
pub fn write_kv(w: &mut impl Write, rows: &[(&str, String)]) -> io::Result<()> {
    writeln!(w, "key\tvalue")?;
    for (k, v) in rows {
        writeln!(w, "{k}\t{v}")?;
    }
    Ok(())
}
