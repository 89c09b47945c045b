//! Triplet-stored sparse matrices with compressed row storage for products.

use crate::error::{Error, Result};

/// General sparse matrix assembled from `(row, col, value)` triplets.
/// Duplicate entries are summed when compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct Triplets {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, v) in &entries {
            if r >= rows || c >= cols {
                return Err(Error::Schema(format!(
                    "triplet ({r}, {c}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Schema(format!("non-finite entry at ({r}, {c})")));
            }
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_csr(&self) -> Csr {
        Csr::from_entries(self.rows, self.cols, self.entries.iter().copied())
    }
}

/// Symmetric matrix stored as its upper triangle (`row <= col`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTriplets {
    n: usize,
    upper: Vec<(usize, usize, f64)>,
}

impl SymTriplets {
    /// Entries below the diagonal are rejected; the lower half is implied.
    pub fn new(n: usize, upper: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, v) in &upper {
            if r >= n || c >= n {
                return Err(Error::Schema(format!("triplet ({r}, {c}) outside a {n}x{n} matrix")));
            }
            if r > c {
                return Err(Error::Schema(format!(
                    "triplet ({r}, {c}) below the diagonal; store the upper triangle"
                )));
            }
            if !v.is_finite() {
                return Err(Error::Schema(format!("non-finite entry at ({r}, {c})")));
            }
        }
        Ok(Self { n, upper })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, upper: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn upper(&self) -> &[(usize, usize, f64)] {
        &self.upper
    }

    pub fn nnz_full(&self) -> usize {
        self.upper.iter().map(|&(r, c, _)| if r == c { 1 } else { 2 }).sum()
    }

    /// Compressed storage of the full symmetric matrix.
    pub fn to_csr(&self) -> Csr {
        let mirrored = self.upper.iter().flat_map(|&(r, c, v)| {
            let lower = (r != c).then_some((c, r, v));
            std::iter::once((r, c, v)).chain(lower)
        });
        Csr::from_entries(self.n, self.n, mirrored)
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl Csr {
    fn from_entries(rows: usize, cols: usize, entries: impl Iterator<Item = (usize, usize, f64)>) -> Self {
        let mut sorted: Vec<(usize, usize, f64)> = entries.collect();
        sorted.sort_by_key(|e| (e.0, e.1));
        let mut indptr = vec![0usize; rows + 1];
        let mut indices = Vec::with_capacity(sorted.len());
        let mut data: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *data.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            indices.push(c);
            data.push(v);
            indptr[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..rows {
            indptr[i + 1] += indptr[i];
        }
        Self { rows, cols, indptr, indices, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[i]..self.indptr[i + 1];
        self.indices[span.clone()].iter().copied().zip(self.data[span].iter().copied())
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `y += Aᵀ w`
    pub fn add_tr_mul_vec(&self, w: &[f64], y: &mut [f64]) {
        debug_assert_eq!(w.len(), self.rows);
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                y[j] += v * wi;
            }
        }
    }

    /// `xᵀ A x` for square matrices.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        (0..self.rows).map(|i| x[i] * self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).sum()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.row(i).filter(|&(j, _)| j == i).map(|(_, v)| v).sum())
            .collect()
    }
}
