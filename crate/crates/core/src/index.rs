//! Exact cosine-similarity index over cohort embeddings.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::embed::{norm, EmbeddingVector};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"NEUROEMB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    ids: Vec<String>,
    matrix: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub accession: String,
    pub similarity: f64,
    pub rank: usize,
}

/// Descending similarity, then ascending accession.
pub fn hit_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

impl VectorIndex {
    pub fn empty(dim: usize) -> Self {
        VectorIndex {
            dim,
            ids: Vec::new(),
            matrix: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major little-endian bytes of the stored matrix.
    pub fn matrix_bytes(&self) -> Vec<u8> {
        self.matrix.iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    /// Cosine of the query against every row, in insertion order.
    pub fn similarities(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                actual: query.len(),
            });
        }
        let n = norm(query);
        if !(n > 0.0) {
            return Err(Error::ZeroVector);
        }
        let q: Vec<f64> = query.iter().map(|x| x / n).collect();
        Ok((0..self.len())
            .map(|i| self.row(i).iter().zip(&q).map(|(&r, &x)| r as f64 * x).sum())
            .collect())
    }

    /// Exact top-k by cosine with the accession tie-break.
    pub fn search(&self, query: &[f64], k: usize) -> Result<Vec<RankedHit>> {
        let sims = self.similarities(query)?;
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| hit_order((sims[a], &self.ids[a]), (sims[b], &self.ids[b])));
        Ok(order
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(r, i)| RankedHit {
                accession: self.ids[i].clone(),
                similarity: sims[i],
                rank: r + 1,
            })
            .collect())
    }

    /// Every accession, best first.
    pub fn rank_all(&self, query: &[f64]) -> Result<Vec<RankedHit>> {
        self.search(query, self.len())
    }
}

pub fn build_index(dim: usize, embeddings: &[(String, EmbeddingVector)]) -> Result<VectorIndex> {
    let mut seen = HashSet::new();
    let mut index = VectorIndex::empty(dim);
    for (acc, v) in embeddings {
        if v.dim() != dim {
            return Err(Error::Shape {
                expected: dim,
                actual: v.dim(),
            });
        }
        if !seen.insert(acc.as_str()) {
            return Err(Error::DuplicateAccession(acc.clone()));
        }
        index.ids.push(acc.clone());
        index.matrix.extend(v.values().iter().map(|&x| x as f32));
    }
    Ok(index)
}

pub fn save_index<W: Write>(index: &VectorIndex, mut sink: W) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + index.matrix.len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(index.dim as u32).to_le_bytes());
    buf.extend_from_slice(&(index.len() as u64).to_le_bytes());
    for id in &index.ids {
        buf.extend_from_slice(&(id.len() as u32).to_le_bytes());
        buf.extend_from_slice(id.as_bytes());
    }
    buf.extend(index.matrix_bytes());
    sink.write_all(&buf)
        .map_err(|e| Error::Format(format!("writing index: {e}")))
}

pub fn index_to_bytes(index: &VectorIndex) -> Vec<u8> {
    let mut out = Vec::new();
    save_index(index, &mut out).expect("writing to memory");
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.at..end];
                self.at = end;
                Ok(s)
            }
            None => Err(Error::Corrupt(format!(
                "truncated while reading {what} at byte {}",
                self.at
            ))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn load_index<R: Read>(mut source: R) -> Result<VectorIndex> {
    let mut bytes = Vec::new();
    source
        .read_to_end(&mut bytes)
        .map_err(|e| Error::Corrupt(format!("reading index: {e}")))?;
    index_from_bytes(&bytes)
}

pub fn index_from_bytes(bytes: &[u8]) -> Result<VectorIndex> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("not an index file (bad magic)".into()));
    }
    let mut c = Cursor { bytes, at: MAGIC.len() };
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported index version {version}")));
    }
    let dim = c.u32("dimension")? as usize;
    let count = u64::from_le_bytes(c.take(8, "count")?.try_into().unwrap());
    let count = usize::try_from(count).map_err(|_| Error::Corrupt("entry count overflows".into()))?;
    // every entry needs at least its length prefix
    if count > bytes.len() / 4 {
        return Err(Error::Corrupt(format!("count {count} exceeds file size")));
    }
    let mut ids = Vec::with_capacity(count);
    let mut seen = HashSet::new();
    for i in 0..count {
        let len = c.u32("accession length")? as usize;
        let raw = c.take(len, "accession")?;
        let id = std::str::from_utf8(raw)
            .map_err(|_| Error::Corrupt(format!("accession {i} is not UTF-8")))?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::Corrupt(format!("duplicate accession {id}")));
        }
        ids.push(id);
    }
    let n = count
        .checked_mul(dim)
        .ok_or_else(|| Error::Corrupt("matrix size overflows".into()))?;
    let raw = c.take(n * 4, "matrix")?;
    if c.at != bytes.len() {
        return Err(Error::Corrupt(format!("{} trailing bytes", bytes.len() - c.at)));
    }
    let matrix = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok(VectorIndex { dim, ids, matrix })
}
