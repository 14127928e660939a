//! Schur complements of a factored level.

use crate::factor::SparseAccumulator;
use crate::options::HVariant;
use crate::sparse::{Ccs, Crs, DenseMatrix};

/// `S_C = C - L_E diag(d_B) U_F`, formed row by row without dropping.
/// Returns the matrix and the multiply-add flop count.
pub fn compute_schur_s(c_hat: &Crs, l_e: &Crs, d_b: &[f64], u_f: &Crs) -> (Crs, u64) {
    let nc = c_hat.n_rows();
    assert_eq!(l_e.n_rows(), nc);
    assert_eq!(u_f.n_cols(), c_hat.n_cols());
    let mut acc = SparseAccumulator::new(c_hat.n_cols());
    let mut row_start = Vec::with_capacity(nc + 1);
    row_start.push(0);
    let (mut ind, mut val) = (Vec::new(), Vec::new());
    let mut flops = 0u64;
    for i in 0..nc {
        acc.clear();
        for (j, v) in c_hat.row(i) {
            acc.add(j, v);
        }
        for (j, l) in l_e.row(i) {
            let f = l * d_b[j];
            for (c, u) in u_f.row(j) {
                acc.add(c, -f * u);
            }
            flops += 2 * u_f.row_nnz(j) as u64;
        }
        let mut e = acc.entries();
        e.sort_unstable_by_key(|x| x.0);
        for (j, v) in e {
            ind.push(j);
            val.push(v);
        }
        row_start.push(ind.len());
    }
    (
        Crs::from_parts_unchecked(nc, c_hat.n_cols(), row_start, ind, val),
        flops,
    )
}

/// Row `r` of `L_E L_B^{-1}` as a dense vector: solves `L_B^T g = r`.
fn left_solve(l_b: &Ccs, r: impl Iterator<Item = (usize, f64)>, m: usize) -> Vec<f64> {
    let mut g = vec![0.0; m];
    for (j, v) in r {
        g[j] = v;
    }
    for j in (0..m).rev() {
        let mut s = g[j];
        for (i, l) in l_b.col(j) {
            s -= l * g[i];
        }
        g[j] = s;
    }
    g
}

/// Column `c` of `U_B^{-1} U_F` as a dense vector: solves `U_B x = f`.
fn right_solve(u_b: &Crs, f: &[f64]) -> Vec<f64> {
    let m = f.len();
    let mut x = f.to_vec();
    for i in (0..m).rev() {
        let mut s = x[i];
        for (j, u) in u_b.row(i) {
            s -= u * x[j];
        }
        x[i] = s;
    }
    x
}

/// Inputs of the H-version for one level, all in permuted positions.
pub struct SchurParts<'a> {
    pub b_hat: &'a Crs,
    pub c_hat: &'a Crs,
    pub l_b: &'a Ccs,
    pub u_b: &'a Crs,
    pub l_e: &'a Crs,
    pub u_f: &'a Crs,
    pub d_b: &'a [f64],
}

/// Dense H-version Schur complement.
///
/// With [`HVariant::Modified`]: `H = C - 2 L_E D U_F + G_E B G_F`, where
/// `G_E = L_E L_B^{-1}` and `G_F = U_B^{-1} U_F`; since `s_c` already holds
/// `C - L_E D U_F`, this is evaluated as `2 S_C - C + G_E B G_F`.
/// With [`HVariant::Algorithm1`]: `H = S_C + G_E (B - D) G_F`.
/// Only `n_c x m` and `m x n_c` dense intermediates are formed.
pub fn compute_schur_h(s_c: &Crs, parts: &SchurParts<'_>, variant: HVariant) -> DenseMatrix {
    let nc = s_c.n_rows();
    let m = parts.b_hat.n_rows();
    let mut h = s_c.to_dense();
    if variant == HVariant::Modified {
        let c = parts.c_hat.to_dense();
        for i in 0..nc {
            for j in 0..nc {
                h.set(i, j, 2.0 * h.get(i, j) - c.get(i, j));
            }
        }
    }
    if m == 0 || nc == 0 {
        return h;
    }
    // G_F columns, then B G_F (or (B - D) G_F), stored as nc vectors of length m
    let u_f_cols = parts.u_f.to_ccs();
    let mut bg = Vec::with_capacity(nc);
    for c in 0..nc {
        let mut f = vec![0.0; m];
        for (i, v) in u_f_cols.col(c) {
            f[i] = v;
        }
        let g = right_solve(parts.u_b, &f);
        let mut y = vec![0.0; m];
        parts.b_hat.matvec(&g, &mut y);
        if variant == HVariant::Algorithm1 {
            for i in 0..m {
                y[i] -= parts.d_b[i] * g[i];
            }
        }
        bg.push(y);
    }
    for i in 0..nc {
        if parts.l_e.row_nnz(i) == 0 {
            continue;
        }
        let g = left_solve(parts.l_b, parts.l_e.row(i), m);
        for (c, y) in bg.iter().enumerate() {
            let s: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
            h.add(i, c, s);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::DenseMatrix;

    fn crs(rows: &[Vec<f64>]) -> Crs {
        Crs::from_dense(&DenseMatrix::from_rows(rows))
    }

    #[test]
    fn zero_l_e_gives_c() {
        let c = crs(&[vec![1.0, 2.0], vec![0.0, 3.0]]);
        let l_e = Crs::zeros(2, 3);
        let u_f = crs(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![2.0, 0.0]]);
        let (s, flops) = compute_schur_s(&c, &l_e, &[1.0, 2.0, 3.0], &u_f);
        assert_eq!(s.to_dense(), c.to_dense());
        assert_eq!(flops, 0);
    }

    #[test]
    fn two_by_two() {
        let c = crs(&[vec![3.0]]);
        let l_e = crs(&[vec![0.25]]);
        let u_f = crs(&[vec![0.25]]);
        let (s, _) = compute_schur_s(&c, &l_e, &[4.0], &u_f);
        assert_eq!(s.get(0, 0), 2.75);
    }

    #[test]
    fn tridiagonal_three() {
        let c = crs(&[vec![2.0]]);
        let l_e = crs(&[vec![0.0, -2.0 / 3.0]]);
        let u_f = crs(&[vec![0.0], vec![-2.0 / 3.0]]);
        let (s, _) = compute_schur_s(&c, &l_e, &[2.0, 1.5], &u_f);
        assert!((s.get(0, 0) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn h_version_without_coupling_is_c() {
        let b = crs(&[vec![2.0, 0.0], vec![0.0, 2.0]]);
        let c = crs(&[vec![5.0]]);
        let l_b = Crs::zeros(2, 2).to_ccs();
        let u_b = Crs::zeros(2, 2);
        let l_e = Crs::zeros(1, 2);
        let u_f = crs(&[vec![0.5], vec![0.0]]);
        let (s, _) = compute_schur_s(&c, &l_e, &[2.0, 2.0], &u_f);
        let parts = SchurParts {
            b_hat: &b,
            c_hat: &c,
            l_b: &l_b,
            u_b: &u_b,
            l_e: &l_e,
            u_f: &u_f,
            d_b: &[2.0, 2.0],
        };
        for v in [HVariant::Modified, HVariant::Algorithm1] {
            assert_eq!(compute_schur_h(&s, &parts, v).get(0, 0), 5.0);
        }
    }
}
