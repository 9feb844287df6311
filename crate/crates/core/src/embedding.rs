//! Embedding sample matrices and the `EMB1` binary format:
//! magic `EMB1`, `n: u32 LE`, `d: u32 LE`, then `n * d` `f32 LE`, row-major.

use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"EMB1";

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    n: usize,
    d: usize,
    vectors: Vec<f32>,
    pub source_tag: String,
}

impl EmbeddingSet {
    pub fn new(n: usize, d: usize, vectors: Vec<f32>, source_tag: impl Into<String>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("embedding dimension must be >= 1".into()));
        }
        if vectors.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{d} = {} values", n * d),
                found: format!("{} values", vectors.len()),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("embedding contains non-finite values".into()));
        }
        Ok(Self { n, d, vectors, source_tag: source_tag.into() })
    }

    pub fn from_rows(rows: &[Vec<f32>], source_tag: impl Into<String>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("embedding rows have differing dimensions".into()));
        }
        Self::new(rows.len(), d, rows.concat(), source_tag)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.vectors.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.vectors
    }

    /// Keeps only the rows whose index satisfies `keep`.
    pub fn select(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut vectors = Vec::new();
        let mut n = 0;
        for (i, r) in self.rows().enumerate() {
            if keep(i) {
                vectors.extend_from_slice(r);
                n += 1;
            }
        }
        Self { n, d: self.d, vectors, source_tag: self.source_tag.clone() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 4 * self.vectors.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        for v in &self.vectors {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], source_tag: impl Into<String>) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(Error::ProtocolViolation("missing EMB1 header".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = &bytes[12..];
        if body.len() != 4 * n * d {
            return Err(Error::ProtocolViolation(format!(
                "EMB1 body holds {} bytes, header declares {n}x{d} floats",
                body.len()
            )));
        }
        let vectors = body.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        Self::new(n, d, vectors, source_tag)
    }

    pub fn read(path: impl AsRef<Path>, source_tag: impl Into<String>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, source_tag)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::raster::write_atomic(path, &self.to_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let e = EmbeddingSet::new(2, 1, vec![1.0, -2.0], "t").unwrap();
        let b = e.to_bytes();
        assert_eq!(&b[..4], b"EMB1");
        assert_eq!(&b[4..12], &[2, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&b[12..16], &1.0f32.to_le_bytes());
        assert_eq!(b.len(), 20);
    }

    #[test]
    fn truncated_or_bad_magic_rejected() {
        let mut b = EmbeddingSet::new(2, 2, vec![0.0; 4], "t").unwrap().to_bytes();
        b.pop();
        assert!(matches!(EmbeddingSet::from_bytes(&b, "t"), Err(Error::ProtocolViolation(_))));
        assert!(EmbeddingSet::from_bytes(b"EMB2\0\0\0\0\0\0\0\0", "t").is_err());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(n in 0usize..20, d in 1usize..10, seed in any::<u32>()) {
            let vals: Vec<f32> = (0..n * d).map(|i| (i as f32 * 0.37 + seed as f32).sin() * 1e3).collect();
            let e = EmbeddingSet::new(n, d, vals, "x").unwrap();
            let back = EmbeddingSet::from_bytes(&e.to_bytes(), "x").unwrap();
            prop_assert_eq!(back.to_bytes(), e.to_bytes());
        }
    }
}
