//! Compressed sparse row matrices assembled from triplets.

use faer::sparse::{SparseColMat, Triplet};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Matrix with a given sorted, duplicate-free pattern.
    pub(crate) fn from_pattern(n_cols: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(col_idx.len(), values.len());
        Self {
            n_rows: row_ptr.len() - 1,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sum duplicate entries. The result does not depend on triplet order.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let mut row_ptr = vec![0; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 4);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 4);
        let mut last = None;
        for (r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        let n = a.len();
        let m = a.first().map_or(0, |r| r.len());
        let t = a
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(move |(j, v)| (i, j, *v)))
            .collect();
        Self::from_triplets(n, m, t)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum()
            })
            .collect()
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        if self.row_ptr == other.row_ptr && self.col_idx == other.col_idx {
            let mut out = self.clone();
            for (a, b) in out.values.iter_mut().zip(&other.values) {
                *a += s * b;
            }
            return out;
        }
        let mut t = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, x)));
            let (c, v) = other.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, s * x)));
        }
        Self::from_triplets(self.n_rows, self.n_cols, t)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                worst = worst.max((x - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Rows and columns listed in `keep`, renumbered in that order.
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n_cols];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in keep {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if map[j] != usize::MAX {
                    col_idx.push(map[j]);
                    values.push(x);
                }
            }
            row_ptr.push(col_idx.len());
        }
        // Renumbering preserves column order only for increasing `keep`.
        let mut out = CsrMatrix {
            n_rows: keep.len(),
            n_cols: keep.len(),
            row_ptr,
            col_idx,
            values,
        };
        if keep.windows(2).any(|w| w[1] < w[0]) {
            out = Self::from_triplets(out.n_rows, out.n_cols, out.triplets());
        }
        out
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n_rows)
            .flat_map(|i| {
                let (c, v) = self.row(i);
                c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (i, j, v) in self.triplets() {
            a[i][j] = v;
        }
        a
    }

    /// Lower triangle as a faer column matrix (for a symmetric matrix this is its transpose upper part).
    pub(crate) fn to_faer_lower(&self) -> SparseColMat<usize, f64> {
        // Row i of a symmetric CSR matrix is column i; keep entries with row index >= i.
        let mut t = Vec::with_capacity(self.nnz() / 2 + self.n_rows);
        for i in 0..self.n_rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if j >= i {
                    t.push(Triplet::new(j, i, x));
                }
            }
        }
        SparseColMat::try_new_from_triplets(self.n_rows, self.n_cols, &t).expect("valid sparse pattern")
    }
}
