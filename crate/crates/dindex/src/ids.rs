//! String ids such as OpenAlex `W2741809807` are stored as their numeric
//! part. Every paper in a corpus must share the same alphabetic prefix so the
//! string form can be rebuilt on output.

use dindex_core::{AuthorId, PaperId};
use thiserror::Error;
use xxhash_rust::xxh3::xxh3_64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("empty id")]
    Empty,
    #[error("id {0:?} has no numeric part")]
    NoDigits(String),
    #[error("id {0:?} has a leading zero")]
    LeadingZero(String),
    #[error("id {0:?} does not fit in 64 bits")]
    Overflow(String),
    #[error("id prefix {found:?} differs from corpus prefix {expected:?}")]
    PrefixMismatch { expected: String, found: String },
}

fn split(s: &str) -> Result<(&str, u64), IdError> {
    if s.is_empty() {
        return Err(IdError::Empty);
    }
    let cut = s
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| IdError::NoDigits(s.to_string()))?;
    let (prefix, digits) = s.split_at(cut);
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(IdError::NoDigits(s.to_string()));
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return Err(IdError::LeadingZero(s.to_string()));
    }
    let n = digits
        .parse::<u64>()
        .map_err(|_| IdError::Overflow(s.to_string()))?;
    Ok((prefix, n))
}

/// Paper id codec. The prefix is fixed by the first id seen.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdCodec {
    prefix: Option<String>,
}

impl IdCodec {
    pub fn new() -> Self {
        IdCodec::default()
    }

    pub fn with_prefix(prefix: impl Into<String>) -> Self {
        IdCodec {
            prefix: Some(prefix.into()),
        }
    }

    pub fn prefix(&self) -> &str {
        self.prefix.as_deref().unwrap_or("")
    }

    pub fn encode(&mut self, s: &str) -> Result<PaperId, IdError> {
        let (prefix, n) = split(s)?;
        match &self.prefix {
            None => self.prefix = Some(prefix.to_string()),
            Some(p) if p != prefix => {
                return Err(IdError::PrefixMismatch {
                    expected: p.clone(),
                    found: prefix.to_string(),
                })
            }
            Some(_) => {}
        }
        Ok(PaperId(n))
    }

    /// Like [`encode`](Self::encode) but never learns a prefix.
    pub fn lookup(&self, s: &str) -> Result<PaperId, IdError> {
        let (prefix, n) = split(s)?;
        if prefix != self.prefix() {
            return Err(IdError::PrefixMismatch {
                expected: self.prefix().to_string(),
                found: prefix.to_string(),
            });
        }
        Ok(PaperId(n))
    }

    pub fn decode(&self, id: PaperId) -> String {
        format!("{}{}", self.prefix(), id.0)
    }
}

/// Author ids are only compared for equality, so any string is accepted and
/// stored as its 64-bit xxh3 digest.
pub fn author_id(s: &str) -> AuthorId {
    AuthorId(xxh3_64(s.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = IdCodec::new();
        let id = c.encode("W2741809807").unwrap();
        assert_eq!(id, PaperId(2741809807));
        assert_eq!(c.decode(id), "W2741809807");
        assert_eq!(c.prefix(), "W");
        assert!(matches!(
            c.encode("A12"),
            Err(IdError::PrefixMismatch { .. })
        ));
        assert_eq!(c.lookup("W5").unwrap(), PaperId(5));
    }

    #[test]
    fn bare_numbers() {
        let mut c = IdCodec::new();
        assert_eq!(c.encode("17").unwrap(), PaperId(17));
        assert_eq!(c.decode(PaperId(17)), "17");
    }

    #[test]
    fn rejects_malformed() {
        let mut c = IdCodec::new();
        assert_eq!(c.encode(""), Err(IdError::Empty));
        assert!(matches!(c.encode("W"), Err(IdError::NoDigits(_))));
        assert!(matches!(c.encode("W12x"), Err(IdError::NoDigits(_))));
        assert!(matches!(c.encode("W012"), Err(IdError::LeadingZero(_))));
        assert!(matches!(
            c.encode("W99999999999999999999"),
            Err(IdError::Overflow(_))
        ));
    }

    #[test]
    fn author_ids_distinguish_prefixes() {
        assert_eq!(author_id("A1"), author_id("A1"));
        assert_ne!(author_id("A1"), author_id("A2"));
        assert_ne!(author_id("A1"), author_id("B1"));
        assert_ne!(author_id("smith, j."), author_id("smith, k."));
    }
}
