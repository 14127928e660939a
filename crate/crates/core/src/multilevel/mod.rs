//! Multilevel driver and solve.
//!
//! Each level preprocesses its matrix, factors the leading block with
//! [`iludp_factor`], and forms the Schur complement of the deferred part.
//! The recursion stops when the Schur complement is empty, dense enough,
//! or small enough, and the last one is factored by dense LU.

mod dense;
pub mod io;
mod schur;

pub use dense::{dense_lu_pivot, DenseLu};
pub use schur::{compute_schur_h, compute_schur_s, SchurParts};

pub use crate::options::{HVariant, Options};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::{iludp_factor, FactorOutput, FlopCounters};
use crate::preprocess::preprocess;
use crate::sparse::{invert_permutation, Ccs, Crs};

/// Hard limit on the number of levels.
pub const MAX_LEVELS: usize = 64;

/// One level of the preconditioner, in the permuted and scaled frame of
/// that level's input matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecLevel {
    pub n: usize,
    pub m: usize,
    pub l_b: Ccs,
    pub d_b: Vec<f64>,
    pub u_b: Crs,
    /// `(n-m) x m` lower-left block of the scaled permuted matrix.
    pub e: Crs,
    /// `m x (n-m)` upper-right block of the scaled permuted matrix.
    pub f: Crs,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<usize>,
    pub q_inv: Vec<usize>,
    /// Dense factorization of the final Schur complement (last level only).
    pub dense: Option<DenseLu>,
    /// Nonzeros of the discarded border factors, kept for fill accounting.
    pub nnz_l_e: usize,
    pub nnz_u_f: usize,
}

/// Diagnostics gathered while factoring one level; not persisted.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LevelStats {
    pub n: usize,
    pub m: usize,
    pub symmetric: bool,
    pub pivots: usize,
    pub tagged: usize,
    pub unmatched: usize,
    pub flops: FlopCounters,
    pub schur_flops: u64,
    pub schur_nnz: usize,
    pub h_version: bool,
    pub dense_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelPrec {
    /// Size of the original matrix.
    pub n: usize,
    /// Nonzeros of the original matrix.
    pub nnz_a: usize,
    pub levels: Vec<PrecLevel>,
    pub stats: Vec<LevelStats>,
}

impl PrecLevel {
    fn apply_b_inverse(&self, x: &mut [f64]) {
        let m = self.m;
        for j in 0..m {
            let xj = x[j];
            if xj != 0.0 {
                for (i, l) in self.l_b.col(j) {
                    x[i] -= l * xj;
                }
            }
        }
        for (xi, d) in x.iter_mut().zip(&self.d_b) {
            *xi /= d;
        }
        for i in (0..m).rev() {
            let s: f64 = self.u_b.row(i).map(|(j, u)| u * x[j]).sum();
            x[i] -= s;
        }
    }

    /// Stored entries of `L + D + U` for this level, including the dense block.
    pub fn factor_nnz(&self) -> usize {
        let dense = self.dense.as_ref().map_or(0, |d| d.n() * d.n());
        self.l_b.nnz() + self.u_b.nnz() + self.m + self.nnz_l_e + self.nnz_u_f + dense
    }
}

impl MultilevelPrec {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// Size of the dense last-level block (0 when the recursion ended empty).
    pub fn dense_size(&self) -> usize {
        self.levels
            .last()
            .and_then(|l| l.dense.as_ref())
            .map_or(0, DenseLu::n)
    }

    /// `nnz(L + D + U) / nnz(A)` summed over levels, with the dense block
    /// counted in full.
    pub fn fill_ratio(&self) -> f64 {
        let total: usize = self.levels.iter().map(PrecLevel::factor_nnz).sum();
        total as f64 / self.nnz_a.max(1) as f64
    }

    /// Number of deferred positions per level (empty after deserialization).
    pub fn pivots_per_level(&self) -> Vec<usize> {
        self.stats.iter().map(|s| s.pivots).collect()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        psmilu_solve(self, b)
    }

    fn solve_level(&self, idx: usize, b: &[f64]) -> Vec<f64> {
        let lv = &self.levels[idx];
        let (n, m) = (lv.n, lv.m);
        let bh: Vec<f64> = lv.p.iter().map(|&i| lv.s[i] * b[i]).collect();
        let mut y = vec![0.0; n];
        let mut t1 = bh[..m].to_vec();
        lv.apply_b_inverse(&mut t1);
        if n > m {
            let mut r2 = bh[m..].to_vec();
            lv.e.matvec_sub(&t1, &mut r2);
            let y2 = match &lv.dense {
                Some(lu) => {
                    lu.solve_in_place(&mut r2);
                    r2
                }
                None => self.solve_level(idx + 1, &r2),
            };
            let mut y1 = bh[..m].to_vec();
            lv.f.matvec_sub(&y2, &mut y1);
            lv.apply_b_inverse(&mut y1);
            y[..m].copy_from_slice(&y1);
            y[m..].copy_from_slice(&y2);
        } else {
            y.copy_from_slice(&t1);
        }
        (0..n).map(|j| lv.t[j] * y[lv.q_inv[j]]).collect()
    }
}

/// Applies the multilevel preconditioner: `y = M^{-1} b`.
pub fn psmilu_solve(prec: &MultilevelPrec, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != prec.n {
        return Err(Error::DimensionMismatch {
            expected: prec.n,
            got: b.len(),
        });
    }
    if prec.levels.is_empty() {
        return Ok(b.to_vec());
    }
    Ok(prec.solve_level(0, b))
}

/// One factored level before the next is built.
struct LevelResult {
    level: PrecLevel,
    stats: LevelStats,
    schur: Crs,
    /// Ingredients of the H-version, present only when `n > m`.
    b_hat: Crs,
    c_hat: Crs,
    l_e: Crs,
    u_f: Crs,
}

fn factor_level(a: &Crs, m0: usize, opts: &Options) -> Result<LevelResult> {
    let n = a.n_rows();
    let pre = preprocess(a, m0, &opts.preprocess)?;
    let scaled = a.scaled(&pre.s, &pre.t);
    let sym = pre.symmetric && m0 > 0;
    let fo: FactorOutput = iludp_factor(&scaled, pre.p.clone(), pre.q.clone(), pre.m, sym, opts)?;
    let m = fo.m;
    let blocks = fo.blocks();
    let ap = scaled.permuted(&fo.p, &fo.q);
    let b_hat = ap.block(0, m, 0, m);
    let e = ap.block(m, n, 0, m);
    let f = ap.block(0, m, m, n);
    let c_hat = ap.block(m, n, m, n);
    let (schur, schur_flops) = compute_schur_s(&c_hat, &blocks.l_e, fo.d_b(), &blocks.u_f);
    let stats = LevelStats {
        n,
        m,
        symmetric: sym,
        pivots: fo.pivots,
        tagged: pre.tagged,
        unmatched: pre.unmatched,
        flops: fo.flops,
        schur_flops,
        schur_nnz: schur.nnz(),
        h_version: false,
        dense_size: None,
    };
    let level = PrecLevel {
        n,
        m,
        l_b: blocks.l_b,
        d_b: fo.d_b().to_vec(),
        u_b: blocks.u_b,
        e,
        f,
        s: pre.s,
        t: pre.t,
        q_inv: invert_permutation(&fo.q),
        p: fo.p,
        dense: None,
        nnz_l_e: blocks.l_e.nnz(),
        nnz_u_f: blocks.u_f.nnz(),
    };
    Ok(LevelResult {
        level,
        stats,
        schur,
        b_hat,
        c_hat,
        l_e: blocks.l_e,
        u_f: blocks.u_f,
    })
}

/// Builds the multilevel preconditioner of `a`. With `m0 > 0` the leading
/// `m0 x m0` block must be symmetric and is factored symmetrically on the
/// first level; deeper levels always use the general path.
pub fn psmilu_factor(a: &Crs, m0: usize, opts: &Options) -> Result<MultilevelPrec> {
    opts.validate()?;
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.n_cols(),
        });
    }
    if m0 > n {
        return Err(Error::InvalidOption(format!("symmetric block {m0} exceeds size {n}")));
    }
    if !a.leading_block_is_symmetric(m0) {
        return Err(Error::InvalidOption(format!("leading {m0} x {m0} block is not symmetric")));
    }
    let n_ref = opts.n_ref.unwrap_or(n) as f64;
    let small = opts.c_d * n_ref.cbrt();
    let mut prec = MultilevelPrec {
        n,
        nnz_a: a.nnz(),
        levels: Vec::new(),
        stats: Vec::new(),
    };
    if n == 0 {
        return Ok(prec);
    }
    let mut current = a.clone();
    let mut m0 = m0;
    for level in 1..=MAX_LEVELS {
        let wrap = |e: Error| Error::Factorization {
            level,
            source: Box::new(e),
        };
        let mut r = factor_level(&current, m0, opts).map_err(wrap)?;
        let nc = r.level.n - r.level.m;
        if nc == 0 {
            prec.levels.push(r.level);
            prec.stats.push(r.stats);
            return Ok(prec);
        }
        let dense = r.schur.nnz() as f64 >= opts.rho * (nc * nc) as f64
            || nc as f64 <= small
            || (level > 1 && r.level.m == 0)
            || level == MAX_LEVELS;
        if dense {
            let mat = if (nc as f64) < opts.c_h {
                r.stats.h_version = true;
                let parts = SchurParts {
                    b_hat: &r.b_hat,
                    c_hat: &r.c_hat,
                    l_b: &r.level.l_b,
                    u_b: &r.level.u_b,
                    l_e: &r.l_e,
                    u_f: &r.u_f,
                    d_b: &r.level.d_b,
                };
                compute_schur_h(&r.schur, &parts, opts.h_variant)
            } else {
                r.schur.to_dense()
            };
            let lu = dense_lu_pivot(&mat).map_err(wrap)?;
            r.stats.dense_size = Some(nc);
            r.level.dense = Some(lu);
            prec.levels.push(r.level);
            prec.stats.push(r.stats);
            return Ok(prec);
        }
        prec.levels.push(r.level);
        prec.stats.push(r.stats);
        current = r.schur;
        m0 = 0;
    }
    Err(Error::TooManyLevels(MAX_LEVELS))
}

/// Level-1 Crout update flops with and without exploiting the symmetric
/// block, both measured on the same preprocessed input.
pub fn level1_update_flops(a: &Crs, m0: usize, opts: &Options) -> Result<(u64, u64)> {
    let pre = preprocess(a, m0, &opts.preprocess)?;
    let scaled = a.scaled(&pre.s, &pre.t);
    let sym = pre.symmetric && m0 > 0;
    let run = |exploit: bool| -> Result<u64> {
        let o = Options {
            exploit_symmetry: exploit,
            ..opts.clone()
        };
        let fo = iludp_factor(&scaled, pre.p.clone(), pre.q.clone(), pre.m, sym, &o)?;
        Ok(fo.flops.update())
    };
    Ok((run(true)?, run(false)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::DenseMatrix;

    #[test]
    fn identity_single_level() {
        let a = Crs::identity(10);
        let prec = psmilu_factor(&a, 10, &Options::default()).unwrap();
        assert_eq!(prec.n_levels(), 1);
        assert_eq!(prec.levels[0].m, 10);
        assert_eq!(prec.dense_size(), 0);
        assert_eq!(prec.fill_ratio(), 1.0);
        let b: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(prec.solve(&b).unwrap(), b);
    }

    #[test]
    fn zero_diagonal_two_by_two() {
        let a = Crs::from_dense(&DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]));
        let prec = psmilu_factor(&a, 2, &Options::default()).unwrap();
        assert_eq!(prec.levels[0].m, 0);
        assert_eq!(prec.dense_size(), 2);
        assert_eq!(prec.solve(&[1.0, 2.0]).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn rejects_nonsymmetric_leading_block() {
        let a = Crs::from_dense(&DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]));
        assert!(matches!(psmilu_factor(&a, 2, &Options::default()), Err(Error::InvalidOption(_))));
        assert!(psmilu_solve(&psmilu_factor(&a, 0, &Options::default()).unwrap(), &[1.0]).is_err());
    }
}
