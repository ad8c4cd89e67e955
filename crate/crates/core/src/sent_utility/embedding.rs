use std::collections::HashMap;
use std::io::BufRead;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Precomputed sentence vectors keyed by exact segment text.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

#[derive(Deserialize)]
struct EmbeddingLine {
    text: String,
    vector: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table, L2-normalizing every vector. All vectors must share
    /// one dimension and have a finite, non-zero norm.
    pub fn from_entries<I>(entries: I) -> Result<EmbeddingTable>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut table = EmbeddingTable::default();
        for (text, vector) in entries {
            table.insert(text, vector)?;
        }
        Ok(table)
    }

    /// Reads `{"text": ..., "vector": [...]}` lines. Blank lines are skipped.
    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<EmbeddingTable> {
        let mut table = EmbeddingTable::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::InvalidEmbedding(format!("read error: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: EmbeddingLine = serde_json::from_str(&line).map_err(|e| {
                Error::InvalidEmbedding(format!("line {}: {e}", lineno + 1))
            })?;
            table
                .insert(entry.text, entry.vector)
                .map_err(|e| Error::InvalidEmbedding(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(table)
    }

    fn insert(&mut self, text: String, mut vector: Vec<f64>) -> Result<()> {
        if vector.is_empty() {
            return Err(Error::InvalidEmbedding(format!("empty vector for {text:?}")));
        }
        if self.vectors.is_empty() {
            self.dim = vector.len();
        } else if vector.len() != self.dim {
            return Err(Error::InvalidEmbedding(format!(
                "vector for {text:?} has dimension {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidEmbedding(format!(
                "vector for {text:?} has norm {norm}"
            )));
        }
        vector.iter_mut().for_each(|x| *x /= norm);
        self.vectors.insert(text, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, text: &str) -> Option<&[f64]> {
        self.vectors.get(text).map(Vec::as_slice)
    }

    /// `max(0, cos)` between the two stored vectors; identical keys score 1.
    pub fn cosine(&self, a: &str, b: &str) -> Result<f64> {
        let va = self
            .get(a)
            .ok_or_else(|| Error::MissingEmbedding(a.to_owned()))?;
        let vb = self
            .get(b)
            .ok_or_else(|| Error::MissingEmbedding(b.to_owned()))?;
        if a == b {
            return Ok(1.0);
        }
        let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
        Ok(dot.clamp(0.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_and_normalizes() {
        let data = "{\"text\": \"a\", \"vector\": [3.0, 4.0]}\n\n{\"text\": \"b\", \"vector\": [0.0, 2.0]}\n";
        let t = EmbeddingTable::from_jsonl(data.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.dim(), 2);
        let a = t.get("a").unwrap();
        assert!((a[0] - 0.6).abs() < 1e-15 && (a[1] - 0.8).abs() < 1e-15);
        assert!((t.cosine("a", "b").unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_mixed_dimensions_and_zero_vectors() {
        let mixed = "{\"text\": \"a\", \"vector\": [1.0]}\n{\"text\": \"b\", \"vector\": [1.0, 0.0]}\n";
        assert!(EmbeddingTable::from_jsonl(mixed.as_bytes()).is_err());
        let zero = vec![("z".to_owned(), vec![0.0, 0.0])];
        assert!(EmbeddingTable::from_entries(zero).is_err());
    }

    #[test]
    fn orthogonal_and_opposite_vectors_score_zero() {
        let t = EmbeddingTable::from_entries(vec![
            ("x".to_owned(), vec![1.0, 0.0]),
            ("y".to_owned(), vec![0.0, 1.0]),
            ("-x".to_owned(), vec![-1.0, 0.0]),
        ])
        .unwrap();
        assert_eq!(t.cosine("x", "y").unwrap(), 0.0);
        assert_eq!(t.cosine("x", "-x").unwrap(), 0.0);
        assert_eq!(t.cosine("x", "x").unwrap(), 1.0);
        assert!(matches!(t.cosine("x", "nope"), Err(Error::MissingEmbedding(_))));
    }
}
