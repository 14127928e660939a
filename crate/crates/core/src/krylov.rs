//! Restarted GMRES with right preconditioning.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multilevel::MultilevelPrec;
use crate::sparse::{Crs, DenseMatrix};

/// `y = A x` for a square operator.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// `y = M^{-1} x`.
pub trait Preconditioner {
    fn apply_inverse(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for Crs {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec(x));
    }
}

/// The identity preconditioner.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Preconditioner for Identity {
    fn apply_inverse(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }
}

/// An explicit dense approximate inverse.
impl Preconditioner for DenseMatrix {
    fn apply_inverse(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.matvec(x));
    }
}

impl Preconditioner for MultilevelPrec {
    fn apply_inverse(&self, x: &[f64], y: &mut [f64]) {
        let r = crate::multilevel::psmilu_solve(self, x).expect("preconditioner size matches");
        y.copy_from_slice(&r);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresConfig {
    pub restart: usize,
    pub rtol: f64,
    /// Maximum number of inner iterations over all cycles.
    pub maxit: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig {
            restart: 30,
            rtol: 1e-12,
            maxit: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub x: Vec<f64>,
    pub iterations: usize,
    pub restarts: usize,
    /// Relative residual after each inner iteration (least-squares estimate).
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// True relative residual `||b - A x|| / ||b||` of the returned solution.
    pub final_relres: f64,
    /// Whether a Krylov space became invariant before convergence.
    pub breakdown: bool,
    /// Whether the solve stopped because the true residual stalled above
    /// `rtol` while the Givens estimate had already reached it.
    pub stagnated: bool,
}

impl SolveReport {
    /// First iteration count at which the recorded residual reached `tol`.
    pub fn iterations_to(&self, tol: f64) -> Option<usize> {
        self.residual_history.iter().position(|&r| r <= tol).map(|i| i + 1)
    }
}

/// Restart cycles tolerated in a row where the Givens estimate reaches
/// `rtol` but the recomputed residual does not at least halve.
const MAX_STALLS: usize = 3;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Solves `A M^{-1} y = b` by restarted GMRES and returns `x = M^{-1} y`.
///
/// Convergence is declared when the true relative residual at a restart
/// boundary is at most `rtol`; inside a cycle the Givens estimate ends the
/// cycle early. When the recomputed residual stalls at the rounding floor
/// of `A x` the solve stops with `stagnated` set instead of cycling to
/// `maxit`.
pub fn gmres_right(
    a: &dyn LinearOperator,
    b: &[f64],
    m_inv: &dyn Preconditioner,
    cfg: &GmresConfig,
) -> Result<SolveReport> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if cfg.restart == 0 {
        return Err(Error::InvalidOption("restart must be at least 1".into()));
    }
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    let mut report = SolveReport {
        x: Vec::new(),
        iterations: 0,
        restarts: 0,
        residual_history: Vec::new(),
        converged: false,
        final_relres: 0.0,
        breakdown: false,
        stagnated: false,
    };
    if bnorm == 0.0 {
        report.x = x;
        report.converged = true;
        return Ok(report);
    }
    let k_max = cfg.restart;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(k_max + 1);
    let mut h = vec![vec![0.0; k_max]; k_max + 1];
    let mut cs = vec![0.0; k_max];
    let mut sn = vec![0.0; k_max];
    let mut g = vec![0.0; k_max + 1];
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut cycles = 0usize;
    // consecutive cycles whose estimate met rtol without the true residual following
    let mut stalls = 0usize;
    let mut estimate_met = false;
    let mut prev_relres = f64::INFINITY;
    loop {
        a.apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let relres = beta / bnorm;
        report.final_relres = relres;
        if relres <= cfg.rtol {
            report.converged = true;
            break;
        }
        if report.iterations >= cfg.maxit || !relres.is_finite() {
            break;
        }
        if estimate_met && relres > 0.5 * prev_relres {
            stalls += 1;
            if stalls >= MAX_STALLS {
                report.stagnated = true;
                break;
            }
        } else {
            stalls = 0;
        }
        prev_relres = relres;
        estimate_met = false;
        cycles += 1;
        v.clear();
        v.push(r.iter().map(|x| x / beta).collect());
        g.iter_mut().for_each(|x| *x = 0.0);
        g[0] = beta;
        let mut k = 0;
        while k < k_max && report.iterations < cfg.maxit {
            let j = k;
            m_inv.apply_inverse(&v[j], &mut z);
            a.apply(&z, &mut w);
            for i in 0..=j {
                let hij = dot(&w, &v[i]);
                h[i][j] = hij;
                for (wl, vl) in w.iter_mut().zip(&v[i]) {
                    *wl -= hij * vl;
                }
            }
            let hnext = norm(&w);
            h[j + 1][j] = hnext;
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let denom = h[j][j].hypot(h[j + 1][j]);
            if denom == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = h[j + 1][j] / denom;
            }
            h[j][j] = denom;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            report.iterations += 1;
            k = j + 1;
            let est = g[j + 1].abs() / bnorm;
            report.residual_history.push(est);
            if hnext <= 1e-14 * bnorm {
                if est > cfg.rtol {
                    report.breakdown = true;
                }
                break;
            }
            if est <= cfg.rtol {
                estimate_met = true;
                break;
            }
            v.push(w.iter().map(|x| x / hnext).collect());
        }
        // back substitution on the k x k triangle, then x += M^{-1} V y
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|l| h[i][l] * y[l]).sum();
            y[i] = if h[i][i] != 0.0 { (g[i] - s) / h[i][i] } else { 0.0 };
        }
        let mut u = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            for (ul, vl) in u.iter_mut().zip(vi) {
                *ul += yi * vl;
            }
        }
        m_inv.apply_inverse(&u, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        if report.breakdown {
            a.apply(&x, &mut r);
            let res: f64 = r.iter().zip(b).map(|(ri, bi)| (bi - ri) * (bi - ri)).sum::<f64>().sqrt();
            report.final_relres = res / bnorm;
            report.converged = report.final_relres <= cfg.rtol;
            break;
        }
    }
    report.restarts = cycles.saturating_sub(1);
    report.x = x;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_one_iteration() {
        let a = Crs::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let rep = gmres_right(&a, &b, &Identity, &GmresConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        for (x, y) in rep.x.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rhs() {
        let a = Crs::identity(3);
        let rep = gmres_right(&a, &[0.0; 3], &Identity, &GmresConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.x, vec![0.0; 3]);
    }

    #[test]
    fn nonconvergence_reported() {
        let n = 50;
        let mut d = DenseMatrix::zeros(n, n);
        for i in 0..n {
            d.set(i, i, 2.0);
            if i + 1 < n {
                d.set(i, i + 1, -1.0);
                d.set(i + 1, i, -1.0);
            }
        }
        let cfg = GmresConfig {
            restart: 2,
            rtol: 1e-12,
            maxit: 5,
        };
        let rep = gmres_right(&d, &vec![1.0; n], &Identity, &cfg).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 5);
        assert!(rep.final_relres > 1e-12);
    }

    #[test]
    fn size_mismatch() {
        let a = Crs::identity(3);
        assert!(gmres_right(&a, &[1.0; 2], &Identity, &GmresConfig::default()).is_err());
    }
}
