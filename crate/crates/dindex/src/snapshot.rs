//! Binary graph snapshots.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      b"DXG1"
//! version    u16
//! reserved   u16
//! papers     u64
//! edges      u64
//! authors    u64   total author entries
//! fields     u64   total field entries
//! prefix     u16 length, then UTF-8 bytes
//! ids        u64 * papers
//! years      i16 * papers
//! doc_types  u8  * papers
//! author_offsets u64 * (papers + 1), authors u64 * authors
//! field_offsets  u64 * (papers + 1), fields  u16 * fields
//! ref_offsets    u64 * (papers + 1), refs    u32 * edges
//! checksum   u64   xxh3-64 of every preceding byte
//! ```
//!
//! Only the reference adjacency is stored; citers are rebuilt on load.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use dindex_core::graph::GraphColumns;
use dindex_core::{AuthorId, CitationGraph, DocType, GraphError, PaperId};
use thiserror::Error;
use xxhash_rust::xxh3::{xxh3_64, Xxh3};

use crate::ids::IdCodec;

pub const MAGIC: &[u8; 4] = b"DXG1";
pub const VERSION: u16 = 1;
const FIXED_HEADER: usize = 4 + 2 + 2 + 8 * 4 + 2;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot (bad magic)")]
    BadMagic,
    #[error("snapshot version {found}, this build reads version {expected}")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("snapshot checksum mismatch (truncated or corrupted file)")]
    ChecksumMismatch,
    #[error("snapshot is structurally invalid: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A loaded graph with its id codec and payload checksum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub graph: CitationGraph,
    pub codec: IdCodec,
    pub checksum: u64,
}

struct HashingWriter<W> {
    inner: W,
    hasher: Xxh3,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

macro_rules! write_slice {
    ($w:expr, $items:expr, $map:expr) => {{
        let mut chunk = Vec::with_capacity(1 << 16);
        for item in $items {
            chunk.extend_from_slice(&($map)(item).to_le_bytes());
            if chunk.len() >= 1 << 16 {
                $w.write_all(&chunk)?;
                chunk.clear();
            }
        }
        $w.write_all(&chunk)?;
    }};
}

/// Serializes the graph and returns the checksum.
pub fn write_snapshot<W: Write>(g: &CitationGraph, codec: &IdCodec, out: W) -> io::Result<u64> {
    let c = g.columns();
    let mut w = HashingWriter {
        inner: out,
        hasher: Xxh3::new(),
    };
    let prefix = codec.prefix().as_bytes();
    if prefix.len() > u16::MAX as usize {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "id prefix too long",
        ));
    }
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&0u16.to_le_bytes())?;
    for count in [c.ids.len(), c.refs.len(), c.authors.len(), c.fields.len()] {
        w.write_all(&(count as u64).to_le_bytes())?;
    }
    w.write_all(&(prefix.len() as u16).to_le_bytes())?;
    w.write_all(prefix)?;
    write_slice!(w, &c.ids, |p: &PaperId| p.0);
    write_slice!(w, &c.years, |y: &i16| *y);
    write_slice!(w, &c.doc_types, |d: &DocType| d.code());
    write_slice!(w, &c.author_offsets, |o: &u64| *o);
    write_slice!(w, &c.authors, |a: &AuthorId| a.0);
    write_slice!(w, &c.field_offsets, |o: &u64| *o);
    write_slice!(w, &c.fields, |f: &u16| *f);
    write_slice!(w, &c.ref_offsets, |o: &u64| *o);
    write_slice!(w, &c.refs, |r: &u32| *r);
    let checksum = w.hasher.digest();
    w.inner.write_all(&checksum.to_le_bytes())?;
    w.inner.flush()?;
    Ok(checksum)
}

/// Writes to a temporary file next to `path` and renames it into place, so a
/// failed write never leaves a partial snapshot.
pub fn save_snapshot(g: &CitationGraph, codec: &IdCodec, path: &Path) -> io::Result<u64> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    let checksum = {
        let mut w = BufWriter::with_capacity(1 << 20, tmp.as_file());
        let c = write_snapshot(g, codec, &mut w)?;
        w.flush()?;
        c
    };
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(checksum)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| SnapshotError::Corrupt("section runs past end of payload".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, SnapshotError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self) -> Result<usize, SnapshotError> {
        usize::try_from(self.u64()?).map_err(|_| SnapshotError::Corrupt("count overflows".into()))
    }

    fn column<T, const N: usize>(
        &mut self,
        len: usize,
        f: impl Fn([u8; N]) -> T,
    ) -> Result<Vec<T>, SnapshotError> {
        let bytes = len
            .checked_mul(N)
            .ok_or_else(|| SnapshotError::Corrupt("section size overflows".into()))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(N)
            .map(|c| f(c.try_into().unwrap()))
            .collect())
    }
}

/// Decodes a snapshot held in memory.
pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    if bytes.len() >= 4 && &bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    if bytes.len() < FIXED_HEADER + 8 {
        return Err(SnapshotError::ChecksumMismatch);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(SnapshotError::VersionMismatch {
            found: version,
            expected: VERSION,
        });
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let checksum = u64::from_le_bytes(tail.try_into().unwrap());
    if xxh3_64(payload) != checksum {
        return Err(SnapshotError::ChecksumMismatch);
    }

    let mut cur = Cursor {
        buf: payload,
        pos: 8,
    };
    let n = cur.count()?;
    let edges = cur.count()?;
    let authors = cur.count()?;
    let fields = cur.count()?;
    let prefix_len = cur.u16()? as usize;
    let prefix = std::str::from_utf8(cur.take(prefix_len)?)
        .map_err(|_| SnapshotError::Corrupt("id prefix is not UTF-8".into()))?
        .to_string();
    let offsets = n
        .checked_add(1)
        .ok_or_else(|| SnapshotError::Corrupt("paper count overflows".into()))?;
    let ids = cur.column(n, |b| PaperId(u64::from_le_bytes(b)))?;
    let years = cur.column(n, i16::from_le_bytes)?;
    let doc_types = cur
        .column(n, |b: [u8; 1]| DocType::from_code(b[0]))?
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| SnapshotError::Corrupt("unknown document type code".into()))?;
    let author_offsets = cur.column(offsets, u64::from_le_bytes)?;
    let author_ids = cur.column(authors, |b| AuthorId(u64::from_le_bytes(b)))?;
    let field_offsets = cur.column(offsets, u64::from_le_bytes)?;
    let field_ids = cur.column(fields, u16::from_le_bytes)?;
    let ref_offsets = cur.column(offsets, u64::from_le_bytes)?;
    let refs = cur.column(edges, u32::from_le_bytes)?;
    if cur.pos != payload.len() {
        return Err(SnapshotError::Corrupt(
            "trailing bytes after last section".into(),
        ));
    }
    let graph = CitationGraph::from_columns(GraphColumns {
        ids,
        years,
        doc_types,
        author_offsets,
        authors: author_ids,
        field_offsets,
        fields: field_ids,
        ref_offsets,
        refs,
    })?;
    Ok(Snapshot {
        graph,
        codec: IdCodec::with_prefix(prefix),
        checksum,
    })
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    decode_snapshot(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dindex_core::{build_graph, PaperRecord};

    fn graph() -> CitationGraph {
        let recs = (1..=4u64).map(|i| PaperRecord {
            id: PaperId(i * 10),
            year: 2000 + i as i16,
            doc_type: if i == 2 {
                DocType::Book
            } else {
                DocType::JournalArticle
            },
            author_ids: vec![AuthorId(i), AuthorId(99)],
            field_ids: vec![i as u16, 291],
        });
        let edges = [(20, 10), (30, 10), (40, 30), (40, 20)].map(|(a, b)| (PaperId(a), PaperId(b)));
        build_graph(recs, edges).unwrap().0
    }

    fn encode(g: &CitationGraph) -> Vec<u8> {
        let mut buf = Vec::new();
        write_snapshot(g, &IdCodec::with_prefix("W"), &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip() {
        let g = graph();
        let bytes = encode(&g);
        let snap = decode_snapshot(&bytes).unwrap();
        assert_eq!(snap.graph, g);
        assert_eq!(snap.codec.prefix(), "W");
        let mut again = Vec::new();
        write_snapshot(&snap.graph, &snap.codec, &mut again).unwrap();
        assert_eq!(again, bytes);
    }

    #[test]
    fn empty_graph() {
        let (g, _) = build_graph(Vec::new(), Vec::new()).unwrap();
        let snap = decode_snapshot(&encode(&g)).unwrap();
        assert!(snap.graph.is_empty());
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode(&graph());
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(
                    decode_snapshot(&bytes[..cut]),
                    Err(SnapshotError::ChecksumMismatch)
                ),
                "cut at {cut}"
            );
        }
        let mut flipped = bytes.clone();
        flipped[60] ^= 1;
        assert!(matches!(
            decode_snapshot(&flipped),
            Err(SnapshotError::ChecksumMismatch)
        ));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(
            decode_snapshot(&magic),
            Err(SnapshotError::BadMagic)
        ));
        let mut version = bytes;
        version[4] = 9;
        assert!(matches!(
            decode_snapshot(&version),
            Err(SnapshotError::VersionMismatch { found: 9, .. })
        ));
    }

    #[test]
    fn atomic_save() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.snap");
        let g = graph();
        let sum = save_snapshot(&g, &IdCodec::with_prefix("W"), &path).unwrap();
        let snap = load_snapshot(&path).unwrap();
        assert_eq!(snap.checksum, sum);
        assert_eq!(snap.graph, g);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
