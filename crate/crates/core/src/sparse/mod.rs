//! Sparse and dense matrix containers.
//!
//! [`Crs`] and [`Ccs`] are the usual compressed row/column formats with
//! strictly ascending indices inside each row (column). The augmented
//! storage used for the incomplete factors lives in [`aug`].

pub mod aug;
pub mod mm;

use crate::error::{Error, Result};

pub use aug::{AugCcs, AugCrs, AugStorage};

/// Coordinate-format staging area. Duplicates are allowed and summed when
/// converted to [`Crs`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripletList {
    pub n_rows: usize,
    pub n_cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl TripletList {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        TripletList {
            n_rows,
            n_cols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(n_rows: usize, n_cols: usize, cap: usize) -> Self {
        TripletList {
            n_rows,
            n_cols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Compressed row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Crs {
    n_rows: usize,
    n_cols: usize,
    row_start: Vec<usize>,
    col_ind: Vec<usize>,
    val: Vec<f64>,
}

/// Compressed column storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Ccs {
    n_rows: usize,
    n_cols: usize,
    col_start: Vec<usize>,
    row_ind: Vec<usize>,
    val: Vec<f64>,
}

fn check_compressed(
    n_major: usize,
    n_minor: usize,
    start: &[usize],
    ind: &[usize],
    val: &[f64],
) -> Result<()> {
    if start.len() != n_major + 1 {
        return Err(Error::Structure(format!(
            "start array has length {}, expected {}",
            start.len(),
            n_major + 1
        )));
    }
    if start[0] != 0 || start[n_major] != ind.len() || ind.len() != val.len() {
        return Err(Error::Structure(
            "start/index/value arrays are inconsistent".into(),
        ));
    }
    if let Some(k) = start.windows(2).position(|w| w[0] > w[1]) {
        return Err(Error::Structure(format!("start array decreases at {k}")));
    }
    for k in 0..n_major {
        let seg = &ind[start[k]..start[k + 1]];
        for w in seg.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Structure(format!(
                    "indices of line {k} are not strictly ascending"
                )));
            }
        }
        if let Some(&last) = seg.last() {
            if last >= n_minor {
                return Err(Error::Structure(format!(
                    "index {last} out of range in line {k}"
                )));
            }
        }
    }
    Ok(())
}

impl Crs {
    /// Builds a matrix from raw arrays, validating every structural invariant.
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        row_start: Vec<usize>,
        col_ind: Vec<usize>,
        val: Vec<f64>,
    ) -> Result<Self> {
        check_compressed(n_rows, n_cols, &row_start, &col_ind, &val)?;
        Ok(Crs {
            n_rows,
            n_cols,
            row_start,
            col_ind,
            val,
        })
    }

    pub(crate) fn from_parts_unchecked(
        n_rows: usize,
        n_cols: usize,
        row_start: Vec<usize>,
        col_ind: Vec<usize>,
        val: Vec<f64>,
    ) -> Self {
        debug_assert!(check_compressed(n_rows, n_cols, &row_start, &col_ind, &val).is_ok());
        Crs {
            n_rows,
            n_cols,
            row_start,
            col_ind,
            val,
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Crs {
            n_rows,
            n_cols,
            row_start: vec![0; n_rows + 1],
            col_ind: Vec::new(),
            val: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Crs {
            n_rows: n,
            n_cols: n,
            row_start: (0..=n).collect(),
            col_ind: (0..n).collect(),
            val: vec![1.0; n],
        }
    }

    /// Converts triplets, summing duplicates. Entries that are exactly zero
    /// after summation are dropped unless `keep_zeros` is set.
    pub fn from_triplets_with(t: &TripletList, keep_zeros: bool) -> Result<Self> {
        for &(r, c, _) in &t.entries {
            if r >= t.n_rows || c >= t.n_cols {
                return Err(Error::IndexOutOfRange {
                    row: r,
                    col: c,
                    n_rows: t.n_rows,
                    n_cols: t.n_cols,
                });
            }
        }
        // counting sort by row, then sort each row by column
        let mut counts = vec![0usize; t.n_rows + 1];
        for &(r, _, _) in &t.entries {
            counts[r + 1] += 1;
        }
        for i in 0..t.n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut tmp = vec![(0usize, 0.0f64); t.entries.len()];
        for &(r, c, v) in &t.entries {
            tmp[next[r]] = (c, v);
            next[r] += 1;
        }
        let mut row_start = Vec::with_capacity(t.n_rows + 1);
        let mut col_ind = Vec::with_capacity(tmp.len());
        let mut val = Vec::with_capacity(tmp.len());
        row_start.push(0);
        for i in 0..t.n_rows {
            let seg = &mut tmp[counts[i]..counts[i + 1]];
            seg.sort_by_key(|&(c, _)| c);
            let mut j = 0;
            while j < seg.len() {
                let c = seg[j].0;
                let mut v = 0.0;
                while j < seg.len() && seg[j].0 == c {
                    v += seg[j].1;
                    j += 1;
                }
                if keep_zeros || v != 0.0 {
                    col_ind.push(c);
                    val.push(v);
                }
            }
            row_start.push(col_ind.len());
        }
        Ok(Crs {
            n_rows: t.n_rows,
            n_cols: t.n_cols,
            row_start,
            col_ind,
            val,
        })
    }

    /// Same as [`Crs::from_triplets_with`] with explicit zeros retained.
    pub fn from_triplets(t: &TripletList) -> Result<Self> {
        Self::from_triplets_with(t, true)
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut t = TripletList::new(d.n_rows(), d.n_cols());
        for i in 0..d.n_rows() {
            for j in 0..d.n_cols() {
                let v = d.get(i, j);
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        Crs::from_triplets(&t).expect("dense indices are in range")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_ind.len()
    }

    pub fn row_start(&self) -> &[usize] {
        &self.row_start
    }

    pub fn col_ind(&self) -> &[usize] {
        &self.col_ind
    }

    pub fn values(&self) -> &[f64] {
        &self.val
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.val
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_start[i + 1] - self.row_start[i]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.col_ind[r.clone()]
            .iter()
            .copied()
            .zip(self.val[r].iter().copied())
    }

    pub fn row_indices(&self, i: usize) -> &[usize] {
        &self.col_ind[self.row_start[i]..self.row_start[i + 1]]
    }

    pub fn row_values(&self, i: usize) -> &[f64] {
        &self.val[self.row_start[i]..self.row_start[i + 1]]
    }

    /// Looks up a single entry by binary search; absent entries read as zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let idx = self.row_indices(i);
        match idx.binary_search(&j) {
            Ok(pos) => self.val[self.row_start[i] + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn to_ccs(&self) -> Ccs {
        let mut col_start = vec![0usize; self.n_cols + 1];
        for &c in &self.col_ind {
            col_start[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            col_start[j + 1] += col_start[j];
        }
        let mut next = col_start.clone();
        let mut row_ind = vec![0usize; self.nnz()];
        let mut val = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for (c, v) in self.row(i) {
                let pos = next[c];
                row_ind[pos] = i;
                val[pos] = v;
                next[c] += 1;
            }
        }
        Ccs {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            col_start,
            row_ind,
            val,
        }
    }

    pub fn transpose(&self) -> Crs {
        let c = self.to_ccs();
        Crs {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_start: c.col_start,
            col_ind: c.row_ind,
            val: c.val,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// y -= A x
    pub fn matvec_sub(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n_cols);
        debug_assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let s: f64 = self.row(i).map(|(j, v)| v * x[j]).sum();
            *yi -= s;
        }
    }

    /// diag(row_scale) * A * diag(col_scale)
    pub fn scaled(&self, row_scale: &[f64], col_scale: &[f64]) -> Crs {
        let mut out = self.clone();
        for i in 0..self.n_rows {
            let r = self.row_start[i]..self.row_start[i + 1];
            for pos in r {
                out.val[pos] *= row_scale[i] * col_scale[self.col_ind[pos]];
            }
        }
        out
    }

    /// Extracts `A[rows, cols]` where `rows[i]`/`cols[j]` name the original
    /// row/column that lands at position `i`/`j`. `col_pos` must map an
    /// original column to its position in `cols` (or `usize::MAX` when absent).
    pub fn extract(&self, rows: &[usize], col_pos: &[usize], n_cols: usize) -> Crs {
        let mut row_start = Vec::with_capacity(rows.len() + 1);
        let mut col_ind = Vec::new();
        let mut val = Vec::new();
        row_start.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for &r in rows {
            scratch.clear();
            for (c, v) in self.row(r) {
                let pc = col_pos[c];
                if pc < n_cols {
                    scratch.push((pc, v));
                }
            }
            scratch.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &scratch {
                col_ind.push(c);
                val.push(v);
            }
            row_start.push(col_ind.len());
        }
        Crs {
            n_rows: rows.len(),
            n_cols,
            row_start,
            col_ind,
            val,
        }
    }

    /// Symmetric or general permutation `A[p, q]` (position i holds original row p[i]).
    pub fn permuted(&self, p: &[usize], q: &[usize]) -> Crs {
        let qinv = invert_permutation(q);
        self.extract(p, &qinv, q.len())
    }

    /// Copies the block `[r0, r1) x [c0, c1)`, shifting indices to start at zero.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Crs {
        let mut row_start = Vec::with_capacity(r1 - r0 + 1);
        row_start.push(0);
        let (mut col_ind, mut val) = (Vec::new(), Vec::new());
        for i in r0..r1 {
            let idx = self.row_indices(i);
            let lo = idx.partition_point(|&j| j < c0);
            let hi = idx.partition_point(|&j| j < c1);
            let base = self.row_start[i];
            for pos in base + lo..base + hi {
                col_ind.push(self.col_ind[pos] - c0);
                val.push(self.val[pos]);
            }
            row_start.push(col_ind.len());
        }
        Crs {
            n_rows: r1 - r0,
            n_cols: c1 - c0,
            row_start,
            col_ind,
            val,
        }
    }

    /// True when the leading `m x m` block equals its transpose exactly.
    pub fn leading_block_is_symmetric(&self, m: usize) -> bool {
        for i in 0..m {
            for (j, v) in self.row(i) {
                if j < m && self.get(j, i) != v {
                    return false;
                }
            }
        }
        true
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.val.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl Ccs {
    pub fn from_parts(
        n_rows: usize,
        n_cols: usize,
        col_start: Vec<usize>,
        row_ind: Vec<usize>,
        val: Vec<f64>,
    ) -> Result<Self> {
        check_compressed(n_cols, n_rows, &col_start, &row_ind, &val)?;
        Ok(Ccs {
            n_rows,
            n_cols,
            col_start,
            row_ind,
            val,
        })
    }

    pub(crate) fn from_parts_unchecked(
        n_rows: usize,
        n_cols: usize,
        col_start: Vec<usize>,
        row_ind: Vec<usize>,
        val: Vec<f64>,
    ) -> Self {
        debug_assert!(check_compressed(n_cols, n_rows, &col_start, &row_ind, &val).is_ok());
        Ccs {
            n_rows,
            n_cols,
            col_start,
            row_ind,
            val,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.row_ind.len()
    }

    pub fn col_start(&self) -> &[usize] {
        &self.col_start
    }

    pub fn row_ind(&self) -> &[usize] {
        &self.row_ind
    }

    pub fn values(&self) -> &[f64] {
        &self.val
    }

    pub fn col_nnz(&self, j: usize) -> usize {
        self.col_start[j + 1] - self.col_start[j]
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_start[j]..self.col_start[j + 1];
        self.row_ind[r.clone()]
            .iter()
            .copied()
            .zip(self.val[r].iter().copied())
    }

    pub fn to_crs(&self) -> Crs {
        let as_rows = Crs {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_start: self.col_start.clone(),
            col_ind: self.row_ind.clone(),
            val: self.val.clone(),
        };
        as_rows.transpose()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for j in 0..self.n_cols {
            for (i, v) in self.col(j) {
                d.set(i, j, v);
            }
        }
        d
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        DenseMatrix {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut d = Self::zeros(n, n);
        for i in 0..n {
            d.set(i, i, 1.0);
        }
        d
    }

    pub fn from_row_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                got: values.len(),
            });
        }
        Ok(DenseMatrix {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            values.extend_from_slice(r);
        }
        DenseMatrix {
            n_rows,
            n_cols,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n_cols + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n_cols + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.n_cols {
            self.values.swap(a * self.n_cols + j, b * self.n_cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.n_rows {
            self.values.swap(i * self.n_cols + a, i * self.n_cols + b);
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_cols, other.n_rows);
        let mut out = DenseMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.n_cols {
                    out.values[i * other.n_cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n_rows, other.n_rows);
        assert_eq!(self.n_cols, other.n_cols);
        DenseMatrix {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copies the block `[r0, r1) x [c0, c1)`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> DenseMatrix {
        let mut b = DenseMatrix::zeros(r1 - r0, c1 - c0);
        for i in r0..r1 {
            for j in c0..c1 {
                b.set(i - r0, j - c0, self.get(i, j));
            }
        }
        b
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// Inverse of a permutation given as `p[new] = old`.
pub fn invert_permutation(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![usize::MAX; p.len()];
    for (i, &pi) in p.iter().enumerate() {
        inv[pi] = i;
    }
    inv
}

/// True when `p` is a bijection on `0..p.len()`.
pub fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> TripletList {
        let mut t = TripletList::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.0);
            if i > 0 {
                t.push(i, i - 1, -1.0);
            }
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
            }
        }
        t
    }

    #[test]
    fn identity_from_triplets() {
        let mut t = TripletList::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 1, 1.0);
        assert_eq!(Crs::from_triplets(&t).unwrap(), Crs::identity(2));
    }

    #[test]
    fn duplicates_are_summed() {
        let mut t = TripletList::new(2, 2);
        t.push(0, 1, 2.0);
        t.push(0, 1, 3.0);
        let a = Crs::from_triplets(&t).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 1), 5.0);
    }

    #[test]
    fn explicit_zero_handling() {
        let mut t = TripletList::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 0, -1.0);
        t.push(1, 1, 1.0);
        assert_eq!(Crs::from_triplets_with(&t, true).unwrap().nnz(), 2);
        assert_eq!(Crs::from_triplets_with(&t, false).unwrap().nnz(), 1);
    }

    #[test]
    fn tridiag_row_start() {
        let a = Crs::from_triplets(&tridiag(4)).unwrap();
        assert_eq!(a.row_start(), &[0, 2, 5, 8, 10]);
        assert_eq!(a.to_ccs().col_start(), &[0, 2, 5, 8, 10]);
    }

    #[test]
    fn out_of_range_triplet() {
        let mut t = TripletList::new(2, 2);
        t.push(2, 0, 1.0);
        assert!(matches!(
            Crs::from_triplets(&t),
            Err(Error::IndexOutOfRange { row: 2, .. })
        ));
    }

    #[test]
    fn from_parts_rejects_unsorted() {
        let r = Crs::from_parts(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]);
        assert!(r.is_err());
    }

    #[test]
    fn identity_to_ccs() {
        let c = Crs::identity(3).to_ccs();
        assert_eq!(c.col_start(), &[0, 1, 2, 3]);
        assert_eq!(c.row_ind(), &[0, 1, 2]);
    }

    #[test]
    fn permuted_matches_dense() {
        let a = Crs::from_triplets(&tridiag(5)).unwrap();
        let p = [4, 2, 0, 1, 3];
        let q = [1, 0, 3, 4, 2];
        let ap = a.permuted(&p, &q);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(ap.get(i, j), a.get(p[i], q[j]));
            }
        }
    }

    #[test]
    fn dense_block_and_matmul() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let i = DenseMatrix::identity(2);
        assert_eq!(a.matmul(&i), a);
        assert_eq!(a.block(1, 2, 0, 2).values(), &[3.0, 4.0]);
        assert_eq!(a.transpose().get(0, 1), 3.0);
    }
}
