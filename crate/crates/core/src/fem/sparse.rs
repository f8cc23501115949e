use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, unique column indices per row.
///
/// Structural zeros produced during assembly are kept, so the sparsity
/// pattern of an operator depends only on connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` contributions; duplicates are summed in
/// insertion order, which keeps the result independent of thread count as
/// long as insertion order is.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            ..Default::default()
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(value);
    }

    /// Adds a dense local block `local[i * cols.len() + j]`.
    pub fn push_block(&mut self, rows: &[usize], cols: &[usize], local: &[f64]) {
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                self.push(r, c, local[i * cols.len() + j]);
            }
        }
    }

    pub fn build(self) -> CsrMatrix {
        let n = self.rows.len();
        // counting sort by row (stable)
        let mut counts = vec![0usize; self.nrows + 1];
        for &r in &self.rows {
            counts[r + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let mut order = vec![0usize; n];
        let mut next = counts.clone();
        for (t, &r) in self.rows.iter().enumerate() {
            order[next[r]] = t;
            next[r] += 1;
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        row_offsets.push(0);
        let mut scratch: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            scratch.clear();
            scratch.extend_from_slice(&order[counts[r]..counts[r + 1]]);
            scratch.sort_by_key(|&t| self.cols[t]);
            for &t in &scratch {
                let c = self.cols[t];
                if col_indices.len() > row_offsets[r] && *col_indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += self.vals[t];
                } else {
                    col_indices.push(c);
                    values.push(self.vals[t]);
                }
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from raw CSR arrays, checking structural validity.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let bad = |m: &str| Err(Error::ShapeMismatch(m.to_string()));
        if row_offsets.len() != nrows + 1 || row_offsets[0] != 0 {
            return bad("row offsets length");
        }
        if col_indices.len() != values.len() || *row_offsets.last().unwrap() != col_indices.len() {
            return bad("index/value length");
        }
        for r in 0..nrows {
            if row_offsets[r] > row_offsets[r + 1] {
                return bad("row offsets not monotone");
            }
            let cols = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= ncols) {
                return bad("columns not sorted, unique and in range");
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Row offsets and column indices together with mutable values.
    pub fn parts_mut(&mut self) -> (&[usize], &[usize], &mut [f64]) {
        (&self.row_offsets, &self.col_indices, &mut self.values)
    }

    /// `(columns, values)` of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Entry `(r, c)`, zero when not stored.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "vector length must match column count");
        (0..self.nrows)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, v)| v * x[c]).sum()
            })
            .collect()
    }

    /// `y^T A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.ncols {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut col_indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                col_indices[next[c]] = r;
                values[next[c]] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`, with the union of both patterns.
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "cannot add {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let (c1, v1) = self.row(r);
            for (&c, &v) in c1.iter().zip(v1) {
                b.push(r, c, v);
            }
            let (c2, v2) = other.row(r);
            for (&c, &v) in c2.iter().zip(v2) {
                b.push(r, c, s * v);
            }
        }
        Ok(b.build())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest |A_ij - A_ji|.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        self.add_scaled(-1.0, &t)
            .map(|d| d.max_abs())
            .unwrap_or(f64::INFINITY)
    }

    /// Removes stored entries for which `keep(row, col)` is false.
    pub fn retain(&mut self, mut keep: impl FnMut(usize, usize) -> bool) {
        let mut w = 0;
        let mut new_offsets = Vec::with_capacity(self.nrows + 1);
        new_offsets.push(0);
        for r in 0..self.nrows {
            for k in self.row_offsets[r]..self.row_offsets[r + 1] {
                let c = self.col_indices[k];
                if keep(r, c) {
                    self.col_indices[w] = c;
                    self.values[w] = self.values[k];
                    w += 1;
                }
            }
            new_offsets.push(w);
        }
        self.col_indices.truncate(w);
        self.values.truncate(w);
        self.row_offsets = new_offsets;
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }
}
