//! Dense brute-force reference computations for verification.
//!
//! Everything here is O(n^3) and meant for small matrices only.

use crate::error::{Error, Result};
use crate::multilevel::dense_lu_pivot;
use crate::sparse::DenseMatrix;

/// Size cap for the oracles.
pub const MAX_ORACLE_N: usize = 200;

/// Output of [`dense_ldu_reference`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLdu {
    /// `n x m` unit lower factor, unit diagonal included.
    pub l: DenseMatrix,
    /// Diagonal by position; entries past `m` hold partially updated values.
    pub d: Vec<f64>,
    /// `m x n` unit upper factor, unit diagonal included.
    pub u: DenseMatrix,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    pub m: usize,
    /// Accepted estimates per step.
    pub kappa_l: Vec<f64>,
    pub kappa_u: Vec<f64>,
}

fn greedy(x: &[f64], coeffs: impl Iterator<Item = (usize, f64)>) -> f64 {
    let s: f64 = coeffs.map(|(j, v)| v * x[j]).sum();
    let c = if s > 0.0 { -1.0 } else { 1.0 };
    c - s
}

/// Right-looking dense LDU of `a` (already scaled and permuted) with the
/// same deferral rules as the sparse factorization and no dropping.
pub fn dense_ldu_reference(a: &DenseMatrix, m: usize, sym: bool, tau_d: f64, tau_kappa: f64) -> DenseLdu {
    let n = a.n_rows();
    assert!(n <= MAX_ORACLE_N && a.n_cols() == n && m <= n);
    let mut w = a.clone();
    let mut p: Vec<usize> = (0..n).collect();
    let mut q = p.clone();
    let mut m = m;
    let mut x_l = vec![0.0; n];
    let mut x_u = vec![0.0; n];
    let (mut kappa_l, mut kappa_u) = (Vec::new(), Vec::new());
    let bad = |v: f64| v == 0.0 || (1.0 / v).abs() > tau_d;
    let mut k = 0;
    'steps: while k < m {
        let mut pivot = bad(w.get(k, k));
        loop {
            if pivot {
                while m - 1 > k && bad(w.get(m - 1, m - 1)) {
                    m -= 1;
                }
                if m - 1 == k {
                    m = k;
                    break 'steps;
                }
                w.swap_rows(k, m - 1);
                w.swap_cols(k, m - 1);
                p.swap(k, m - 1);
                q.swap(k, m - 1);
                m -= 1;
            }
            let xl = greedy(&x_l, (0..k).map(|j| (j, w.get(k, j))));
            let xu = if sym { xl } else { greedy(&x_u, (0..k).map(|j| (j, w.get(j, k)))) };
            if xl.abs() > tau_kappa || xu.abs() > tau_kappa {
                pivot = true;
                continue;
            }
            x_l[k] = xl;
            x_u[k] = xu;
            kappa_l.push(xl.abs());
            kappa_u.push(xu.abs());
            break;
        }
        let dk = w.get(k, k);
        for i in k + 1..n {
            w.set(i, k, w.get(i, k) / dk);
        }
        for j in k + 1..n {
            w.set(k, j, w.get(k, j) / dk);
        }
        for i in k + 1..n {
            let li = w.get(i, k) * dk;
            if li != 0.0 {
                for j in k + 1..n {
                    let v = w.get(k, j);
                    w.add(i, j, -li * v);
                }
            }
        }
        k += 1;
    }
    let mut l = DenseMatrix::zeros(n, m);
    let mut u = DenseMatrix::zeros(m, n);
    for j in 0..m {
        l.set(j, j, 1.0);
        u.set(j, j, 1.0);
        for i in j + 1..n {
            l.set(i, j, w.get(i, j));
            u.set(j, i, w.get(j, i));
        }
    }
    let d = (0..n).map(|i| w.get(i, i)).collect();
    DenseLdu {
        l,
        d,
        u,
        p,
        q,
        m,
        kappa_l,
        kappa_u,
    }
}

fn is_lower(t: &DenseMatrix) -> bool {
    (0..t.n_rows()).all(|i| (i + 1..t.n_cols()).all(|j| t.get(i, j) == 0.0))
}

/// Inverse of a triangular matrix by column-wise substitution.
pub fn dense_triangular_inverse(t: &DenseMatrix) -> Result<DenseMatrix> {
    let n = t.n_rows();
    if let Some(i) = (0..n).find(|&i| t.get(i, i) == 0.0) {
        return Err(Error::SingularMatrix { column: i });
    }
    let lower = is_lower(t);
    let mut inv = DenseMatrix::zeros(n, n);
    for c in 0..n {
        let mut x = vec![0.0; n];
        let rows: Box<dyn Iterator<Item = usize>> = if lower { Box::new(0..n) } else { Box::new((0..n).rev()) };
        for i in rows {
            let mut s = if i == c { 1.0 } else { 0.0 };
            let js: Box<dyn Iterator<Item = usize>> = if lower { Box::new(0..i) } else { Box::new(i + 1..n) };
            for j in js {
                s -= t.get(i, j) * x[j];
            }
            x[i] = s / t.get(i, i);
        }
        for i in 0..n {
            inv.set(i, c, x[i]);
        }
    }
    Ok(inv)
}

/// Exact `||T^{-1}||_inf` of a triangular matrix.
pub fn dense_inf_norm_inverse(t: &DenseMatrix) -> Result<f64> {
    let inv = dense_triangular_inverse(t)?;
    Ok((0..inv.n_rows())
        .map(|i| inv.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// Solves `A x = b` with dense partial-pivoting LU.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = dense_lu_pivot(a)?;
    let mut x = b.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}

/// `A^{-1} B` column by column.
pub fn dense_solve_matrix(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let lu = dense_lu_pivot(a)?;
    let mut out = DenseMatrix::zeros(a.n_rows(), b.n_cols());
    for c in 0..b.n_cols() {
        let mut x: Vec<f64> = (0..b.n_rows()).map(|i| b.get(i, c)).collect();
        lu.solve_in_place(&mut x);
        for (i, v) in x.into_iter().enumerate() {
            out.set(i, c, v);
        }
    }
    Ok(out)
}

/// Exact Schur complement `C - E B^{-1} F` of the leading `m x m` block.
pub fn dense_schur_exact(a: &DenseMatrix, m: usize) -> Result<DenseMatrix> {
    let n = a.n_rows();
    let b = a.block(0, m, 0, m);
    let f = a.block(0, m, m, n);
    let e = a.block(m, n, 0, m);
    let c = a.block(m, n, m, n);
    if m == 0 {
        return Ok(c);
    }
    Ok(c.sub(&e.matmul(&dense_solve_matrix(&b, &f)?)))
}

/// Blocks of one level in dense form. `l_b` and `u_b` include the unit diagonal.
pub struct DenseLevel<'a> {
    pub b_hat: &'a DenseMatrix,
    pub e_hat: &'a DenseMatrix,
    pub f_hat: &'a DenseMatrix,
    pub c_hat: &'a DenseMatrix,
    pub l_b: &'a DenseMatrix,
    pub d_b: &'a [f64],
    pub u_b: &'a DenseMatrix,
    pub l_e: &'a DenseMatrix,
    pub u_f: &'a DenseMatrix,
}

fn scale_rows(d: &[f64], a: &DenseMatrix) -> DenseMatrix {
    let mut out = a.clone();
    for (i, di) in d.iter().enumerate() {
        for v in out.row_mut(i) {
            *v *= di;
        }
    }
    out
}

/// `S_C = C - L_E D_B U_F`.
pub fn dense_schur_s_version(lv: &DenseLevel<'_>) -> DenseMatrix {
    lv.c_hat.sub(&lv.l_e.matmul(&scale_rows(lv.d_b, lv.u_f)))
}

/// `T_C = L_E L_B^{-1} B U_B^{-1} U_F - E U_B^{-1} U_F - L_E L_B^{-1} F + C`.
pub fn dense_schur_t_version(lv: &DenseLevel<'_>) -> Result<DenseMatrix> {
    let lbi = dense_triangular_inverse(lv.l_b)?;
    let ubi = dense_triangular_inverse(lv.u_b)?;
    let ge = lv.l_e.matmul(&lbi);
    let gf = ubi.matmul(lv.u_f);
    let t1 = ge.matmul(lv.b_hat).matmul(&gf);
    let t2 = lv.e_hat.matmul(&gf);
    let t3 = ge.matmul(lv.f_hat);
    Ok(t1.sub(&t2).sub(&t3).sub(&lv.c_hat.scaled(-1.0)))
}

/// `H_C = C - 2 L_E D U_F + L_E L_B^{-1} B U_B^{-1} U_F`, formed densely.
pub fn dense_schur_h_version(lv: &DenseLevel<'_>) -> Result<DenseMatrix> {
    let lbi = dense_triangular_inverse(lv.l_b)?;
    let ubi = dense_triangular_inverse(lv.u_b)?;
    let ldu = lv.l_e.matmul(&scale_rows(lv.d_b, lv.u_f));
    let corr = lv.l_e.matmul(&lbi).matmul(lv.b_hat).matmul(&ubi).matmul(lv.u_f);
    Ok(lv.c_hat.sub(&ldu.scaled(2.0)).sub(&corr.scaled(-1.0)))
}

trait Scaled {
    fn scaled(&self, f: f64) -> DenseMatrix;
}

impl Scaled for DenseMatrix {
    fn scaled(&self, f: f64) -> DenseMatrix {
        let vals = self.values().iter().map(|v| v * f).collect();
        DenseMatrix::from_row_major(self.n_rows(), self.n_cols(), vals).expect("same shape")
    }
}
