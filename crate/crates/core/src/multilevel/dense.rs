use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;

/// Dense LU factorization with partial (row) pivoting, `P A = L U`.
///
/// `L` (unit lower, diagonal implicit) and `U` share one row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLu {
    lu: DenseMatrix,
    /// `perm[i]` is the row of `A` that ended up in row `i`.
    perm: Vec<usize>,
}

/// Factors a square matrix, choosing the largest-magnitude pivot in each
/// column. An exactly zero pivot column is reported as singular.
pub fn dense_lu_pivot(a: &DenseMatrix) -> Result<DenseLu> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.n_cols(),
        });
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (piv, big) = (k..n)
            .map(|i| (i, lu.get(i, k).abs()))
            .fold((k, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if big == 0.0 {
            return Err(Error::SingularMatrix { column: k });
        }
        lu.swap_rows(k, piv);
        perm.swap(k, piv);
        let pivot = lu.get(k, k);
        for i in k + 1..n {
            let f = lu.get(i, k) / pivot;
            lu.set(i, k, f);
            if f != 0.0 {
                for j in k + 1..n {
                    let v = lu.get(k, j);
                    lu.add(i, j, -f * v);
                }
            }
        }
    }
    Ok(DenseLu { lu, perm })
}

impl DenseLu {
    pub(crate) fn from_parts(lu: DenseMatrix, perm: Vec<usize>) -> Self {
        DenseLu { lu, perm }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn packed(&self) -> &DenseMatrix {
        &self.lu
    }

    pub fn l(&self) -> DenseMatrix {
        let n = self.n();
        let mut l = DenseMatrix::identity(n);
        for i in 0..n {
            for j in 0..i {
                l.set(i, j, self.lu.get(i, j));
            }
        }
        l
    }

    pub fn u(&self) -> DenseMatrix {
        let n = self.n();
        let mut u = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                u.set(i, j, self.lu.get(i, j));
            }
        }
        u
    }

    /// The permutation matrix `P` with `P A = L U`.
    pub fn p(&self) -> DenseMatrix {
        let n = self.n();
        let mut p = DenseMatrix::zeros(n, n);
        for (i, &r) in self.perm.iter().enumerate() {
            p.set(i, r, 1.0);
        }
        p
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&r| b[r]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        b.copy_from_slice(&x);
    }
}
