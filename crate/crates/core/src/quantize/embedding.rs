use crate::error::{check_dims, Error, Result};

/// `n x d` matrix of sample embeddings, stored row-major, with one identifier
/// per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    data: Vec<f64>,
    n: usize,
    d: usize,
    ids: Vec<String>,
}

impl EmbeddingSet {
    /// Row identifiers default to the row index.
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::with_ids(data, n, d, ids)
    }

    pub fn with_ids(data: Vec<f64>, n: usize, d: usize, ids: Vec<String>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::param(format!(
                "embedding set must be non-empty, got {n}x{d}"
            )));
        }
        check_dims(n * d, data.len())?;
        check_dims(n, ids.len())?;
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { data, n, d, ids })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for row in rows {
            check_dims(d, row.len())?;
            data.extend(row);
        }
        Self::new(data, n, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Row-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    /// Stacks `self` above `other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        check_dims(self.d, other.d)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        let mut ids = self.ids.clone();
        ids.extend(other.ids.iter().cloned());
        Ok(Self {
            data,
            n: self.n + other.n,
            d: self.d,
            ids,
        })
    }

    /// Same data with rows reordered so that row `i` is `self.row(order[i])`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_dims(self.n, order.len())?;
        let mut data = Vec::with_capacity(self.data.len());
        let mut ids = Vec::with_capacity(self.n);
        for &i in order {
            if i >= self.n {
                return Err(Error::param(format!("row index {i} out of range")));
            }
            data.extend_from_slice(self.row(i));
            ids.push(self.ids[i].clone());
        }
        Ok(Self {
            data,
            n: self.n,
            d: self.d,
            ids,
        })
    }
}
