//! Compressed sparse row matrices for graph propagation.

/// Square CSR matrix. Column indices are sorted within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a CSR matrix from (row, col, value) triplets; entries within
    /// a row end up sorted by column.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        for &(r, c, v) in &triplets {
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Number of stored entries in row `r`.
    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    /// Iterates (col, value) pairs of row `r`.
    pub fn row_iter(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        self.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    /// y = A · x where x is a dense `n × cols` row-major matrix.
    pub fn mul_dense(&self, x: &[f64], cols: usize) -> Vec<f64> {
        assert_eq!(x.len(), self.n * cols, "spmm operand size mismatch");
        let mut y = vec![0.0; self.n * cols];
        for r in 0..self.n {
            let out = &mut y[r * cols..(r + 1) * cols];
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let v = self.values[k];
                let src = &x[c * cols..(c + 1) * cols];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        y
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        match self.indices[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    /// True when A[r][c] == A[c][r] for every stored entry.
    pub fn is_symmetric(&self) -> bool {
        for r in 0..self.n {
            for (c, v) in self.row_iter(r) {
                if (self.get(c, r) - v).abs() != 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// Dense copy, for small-graph test oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for r in 0..self.n {
            for (c, v) in self.row_iter(r) {
                out[r][c] = v;
            }
        }
        out
    }
}
