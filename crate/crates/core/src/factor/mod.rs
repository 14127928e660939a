//! One level of Crout incomplete LDU factorization with diagonal pivoting.
//!
//! Step `k` builds column `k` of `L` and row `k` of `U` from the previously
//! finished columns and rows. Before that, the step is screened: a diagonal
//! whose inverse is too large, or a row of `L` (column of `U`) that would
//! make the running inverse-norm estimate too large, causes the current
//! position to be exchanged with the last position of the leading block,
//! shrinking the block by one. Deferred positions end up in the trailing
//! part and are handled by the next level.
//!
//! On a symmetric leading block the part of row `k` of `U` inside the block
//! is copied from column `k` of `L`, so `U_B = L_B^T` holds bitwise.

mod accumulator;
mod estimator;

pub use accumulator::SparseAccumulator;
pub use estimator::CondEstimator;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::options::Options;
use crate::sparse::{invert_permutation, is_permutation, AugCcs, AugCrs, Ccs, Crs};

/// Operation counters; a multiply-add counts as two flops.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlopCounters {
    /// Crout update of the `L` columns.
    pub update_l: u64,
    /// Crout update of the `U` rows.
    pub update_u: u64,
    /// Diagonal pre-updates.
    pub diag_update: u64,
    /// Inverse-norm estimation.
    pub estimator: u64,
    /// Entries examined by dropping.
    pub drop_ops: u64,
    /// Slot moves performed by row and column interchanges.
    pub swap_moves: u64,
}

impl FlopCounters {
    /// Total Crout update flops.
    pub fn update(&self) -> u64 {
        self.update_l + self.update_u
    }

    pub fn total(&self) -> u64 {
        self.update_l + self.update_u + self.diag_update + self.estimator
    }
}

/// Drops entries with `|v| * kappa <= tau`, keeps the `n_keep` largest
/// survivors (equal magnitudes favour the smaller index), and returns them
/// sorted by index.
pub fn apply_dropping(entries: &[(usize, f64)], kappa: f64, tau: f64, n_keep: usize) -> Vec<(usize, f64)> {
    let mut kept: Vec<(usize, f64)> = entries
        .iter()
        .copied()
        .filter(|&(_, v)| v.abs() * kappa > tau)
        .collect();
    if kept.len() > n_keep {
        let order = |x: &(usize, f64), y: &(usize, f64)| {
            y.1.abs()
                .partial_cmp(&x.1.abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(x.0.cmp(&y.0))
        };
        if n_keep == 0 {
            kept.clear();
        } else {
            kept.select_nth_unstable_by(n_keep - 1, order);
            kept.truncate(n_keep);
        }
    }
    kept.sort_unstable_by_key(|e| e.0);
    kept
}

fn fill_cap(alpha: f64, nnz: usize) -> usize {
    if alpha.is_infinite() {
        usize::MAX
    } else {
        (alpha * nnz as f64).floor() as usize
    }
}

/// Result of one level of factorization. Positions refer to the permuted
/// matrix `A[p, q]`.
#[derive(Debug, Clone)]
pub struct FactorOutput {
    /// Final size of the factored leading block.
    pub m: usize,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    /// Diagonal by position; `d[..m]` is `d_B`, the rest holds the
    /// partially updated diagonals of deferred positions.
    pub d: Vec<f64>,
    /// `n x m` unit lower factor (unit diagonal not stored).
    pub l: AugCcs,
    /// `m x n` unit upper factor (unit diagonal not stored).
    pub u: AugCrs,
    /// Accepted inverse-norm estimates per step.
    pub kappa_l: Vec<f64>,
    pub kappa_u: Vec<f64>,
    /// Number of positions deferred out of the leading block.
    pub pivots: usize,
    pub flops: FlopCounters,
    pub symmetric: bool,
}

/// The four blocks of a finished level in plain compressed form.
#[derive(Debug, Clone)]
pub struct FactorBlocks {
    /// `m x m`, strictly lower.
    pub l_b: Ccs,
    /// `(n-m) x m`.
    pub l_e: Crs,
    /// `m x m`, strictly upper.
    pub u_b: Crs,
    /// `m x (n-m)`.
    pub u_f: Crs,
}

impl FactorOutput {
    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn d_b(&self) -> &[f64] {
        &self.d[..self.m]
    }

    pub fn blocks(&self) -> FactorBlocks {
        let n = self.n();
        let m = self.m;
        let l = self.l.to_ccs().to_crs();
        let mut lb_rows = Vec::with_capacity(m + 1);
        lb_rows.push(0);
        let (mut lb_ind, mut lb_val) = (Vec::new(), Vec::new());
        let mut le_rows = vec![0];
        let (mut le_ind, mut le_val) = (Vec::new(), Vec::new());
        for i in 0..n {
            let (ind, val, rows) = if i < m {
                (&mut lb_ind, &mut lb_val, &mut lb_rows)
            } else {
                (&mut le_ind, &mut le_val, &mut le_rows)
            };
            ind.extend_from_slice(l.row_indices(i));
            val.extend_from_slice(l.row_values(i));
            rows.push(ind.len());
        }
        let l_b = Crs::from_parts_unchecked(m, m, lb_rows, lb_ind, lb_val).to_ccs();
        let l_e = Crs::from_parts_unchecked(n - m, m, le_rows, le_ind, le_val);
        let u = self.u.to_crs();
        let mut ub = (vec![0], Vec::new(), Vec::new());
        let mut uf = (vec![0], Vec::new(), Vec::new());
        for i in 0..m {
            for (j, v) in u.row(i) {
                if j < m {
                    ub.1.push(j);
                    ub.2.push(v);
                } else {
                    uf.1.push(j - m);
                    uf.2.push(v);
                }
            }
            ub.0.push(ub.1.len());
            uf.0.push(uf.1.len());
        }
        FactorBlocks {
            l_b,
            l_e,
            u_b: Crs::from_parts_unchecked(m, m, ub.0, ub.1, ub.2),
            u_f: Crs::from_parts_unchecked(m, n - m, uf.0, uf.1, uf.2),
        }
    }
}

/// Working state of the factorization at step `k`.
///
/// The individual phases are public so they can be exercised one at a
/// time; [`iludp_factor`] drives them in order.
pub struct FactorState<'a> {
    a: &'a Crs,
    a_cols: Ccs,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub p: Vec<usize>,
    pub q: Vec<usize>,
    pinv: Vec<usize>,
    qinv: Vec<usize>,
    pub d: Vec<f64>,
    pub l: AugCcs,
    pub u: AugCrs,
    l_start: Vec<usize>,
    u_start: Vec<usize>,
    pub est: CondEstimator,
    pub lhat: SparseAccumulator,
    pub uhat: SparseAccumulator,
    pub flops: FlopCounters,
    sym: bool,
    copy_sym: bool,
    tau_d: f64,
    kappa_l: Vec<f64>,
    kappa_u: Vec<f64>,
    m0: usize,
}

impl<'a> FactorState<'a> {
    /// `a` is the scaled matrix in its original ordering; `p`, `q` give the
    /// positions. With `sym`, the leading `m x m` block of `a[p, q]` must be
    /// symmetric and `p[..m] == q[..m]`.
    pub fn new(a: &'a Crs, p: Vec<usize>, q: Vec<usize>, m: usize, sym: bool, opts: &Options) -> Result<Self> {
        let n = a.n_rows();
        if a.n_cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.n_cols(),
            });
        }
        if p.len() != n || q.len() != n || !is_permutation(&p) || !is_permutation(&q) {
            return Err(Error::Structure("p and q must be permutations of the matrix size".into()));
        }
        if m > n {
            return Err(Error::InvalidOption(format!("leading block {m} exceeds size {n}")));
        }
        if sym && p[..m] != q[..m] {
            return Err(Error::Structure("symmetric factorization needs p == q on the leading block".into()));
        }
        let pinv = invert_permutation(&p);
        let qinv = invert_permutation(&q);
        let d = (0..n).map(|i| a.get(p[i], q[i])).collect();
        let reserve = |alpha: f64| {
            let f = if alpha.is_finite() { alpha + 1.0 } else { 4.0 };
            ((f * a.nnz() as f64) as usize).min(n.saturating_mul(m).max(a.nnz()))
        };
        Ok(FactorState {
            a,
            a_cols: a.to_ccs(),
            n,
            m,
            k: 0,
            p,
            q,
            pinv,
            qinv,
            d,
            l: AugCcs::with_capacity(n, m, reserve(opts.alpha_l)),
            u: AugCrs::with_capacity(n, m, reserve(opts.alpha_u)),
            l_start: Vec::with_capacity(m),
            u_start: Vec::with_capacity(m),
            est: CondEstimator::new(n),
            lhat: SparseAccumulator::new(n),
            uhat: SparseAccumulator::new(n),
            flops: FlopCounters::default(),
            sym,
            copy_sym: sym && opts.exploit_symmetry,
            tau_d: opts.tau_d,
            kappa_l: Vec::with_capacity(m),
            kappa_u: Vec::with_capacity(m),
            m0: m,
        })
    }

    fn bad_diagonal(&self, i: usize) -> bool {
        let d = self.d[i];
        d == 0.0 || (1.0 / d).abs() > self.tau_d
    }

    /// Whether step `k` must pivot because of its diagonal.
    pub fn diagonal_needs_pivot(&self) -> bool {
        self.bad_diagonal(self.k)
    }

    /// Defers position `k`: walks `m` down past trailing bad diagonals and
    /// exchanges `k` with the last remaining position. Returns `false` when
    /// no candidate is left, in which case `m == k` afterwards.
    pub fn diagonal_pivot(&mut self) -> bool {
        let k = self.k;
        debug_assert!(self.m > k);
        while self.m - 1 > k && self.bad_diagonal(self.m - 1) {
            self.m -= 1;
        }
        if self.m - 1 == k {
            self.m = k;
            return false;
        }
        let t = self.m - 1;
        self.l.swap_rows(k, t);
        self.u.swap_cols(k, t);
        self.p.swap(k, t);
        self.q.swap(k, t);
        self.pinv[self.p[k]] = k;
        self.pinv[self.p[t]] = t;
        self.qinv[self.q[k]] = k;
        self.qinv[self.q[t]] = t;
        self.d.swap(k, t);
        self.m -= 1;
        true
    }

    /// Inverse-norm estimates for step `k` from row `k` of `L` and column
    /// `k` of `U`.
    pub fn estimate(&mut self) -> (f64, f64) {
        let k = self.k;
        let col_u: Option<Box<dyn Iterator<Item = (usize, f64)>>> = if self.sym {
            None
        } else {
            Some(Box::new(self.u.col_iter(k)))
        };
        let before = self.est.flops;
        let r = self.est.step(k, self.l.row_iter(k), col_u);
        self.flops.estimator += self.est.flops - before;
        r
    }

    /// First slot of column `j` of `L` holding a row index `>= k`.
    fn advance_l(l: &AugCcs, start: &mut usize, j: usize, k: usize) -> usize {
        let end = l.primary_slots(j).end;
        while *start < end && l.index_at(*start) < k {
            *start += 1;
        }
        *start
    }

    fn advance_u(u: &AugCrs, start: &mut usize, i: usize, k: usize) -> usize {
        let end = u.primary_slots(i).end;
        while *start < end && u.index_at(*start) < k {
            *start += 1;
        }
        *start
    }

    /// `lhat = A[p_{k+1:n}, q_k] - L_{k+1:n, :k} D U_{:k, k}` (undivided).
    pub fn crout_update_col(&mut self) {
        let k = self.k;
        self.lhat.clear();
        for (r, v) in self.a_cols.col(self.q[k]) {
            let i = self.pinv[r];
            if i > k {
                self.lhat.add(i, v);
            }
        }
        for (j, ujk) in self.u.col_iter(k) {
            let f = self.d[j] * ujk;
            let s = Self::advance_l(&self.l, &mut self.l_start[j], j, k);
            let end = self.l.primary_slots(j).end;
            for slot in s..end {
                let i = self.l.index_at(slot);
                if i != k {
                    self.lhat.add(i, -self.l.value_at(slot) * f);
                    self.flops.update_l += 2;
                }
            }
        }
    }

    /// `uhat = A[p_k, q_{k+1:n}] - L_{k, :k} D U_{:k, k+1:n}` (undivided).
    /// On a symmetric block the entries inside the block are copied from
    /// `lhat`, which must already hold column `k`.
    pub fn crout_update_row(&mut self) {
        let k = self.k;
        let m = self.m;
        self.uhat.clear();
        let lo = if self.copy_sym {
            for &i in self.lhat.indices() {
                if i < m {
                    self.uhat.add(i, self.lhat.get(i));
                }
            }
            m
        } else {
            k + 1
        };
        for (c, v) in self.a.row(self.p[k]) {
            let j = self.qinv[c];
            if j >= lo {
                self.uhat.add(j, v);
            }
        }
        for (i, lki) in self.l.row_iter(k) {
            let f = self.d[i] * lki;
            let mut s = Self::advance_u(&self.u, &mut self.u_start[i], i, k);
            let end = self.u.primary_slots(i).end;
            if lo > k + 1 {
                s += self.u.primary_indices(i)[s - self.u.primary_slots(i).start..].partition_point(|&j| j < lo);
            }
            for slot in s..end {
                let j = self.u.index_at(slot);
                if j != k {
                    self.uhat.add(j, -self.u.value_at(slot) * f);
                    self.flops.update_u += 2;
                }
            }
        }
    }

    /// Divides `lhat` and `uhat` by `d_k`.
    pub fn scale_by_pivot(&mut self) {
        let inv = 1.0 / self.d[self.k];
        self.lhat.scale(inv);
        self.uhat.scale(inv);
    }

    /// `d_i -= d_k l_i u_i` for `k < i < m` where both entries are present.
    pub fn pre_update_diag(&mut self) {
        let (k, m) = (self.k, self.m);
        let dk = self.d[k];
        for &i in self.lhat.indices() {
            if i > k && i < m && self.uhat.contains(i) {
                let (li, ui) = (self.lhat.get(i), self.uhat.get(i));
                if li != 0.0 && ui != 0.0 {
                    self.d[i] -= dk * li * ui;
                    self.flops.diag_update += 3;
                }
            }
        }
    }

    /// Drops, caps and appends column `k` of `L` and row `k` of `U`, then
    /// advances to the next step.
    pub fn finish_step(&mut self, kappa: (f64, f64), opts: &Options) {
        let k = self.k;
        let m = self.m;
        let (kl, ku) = kappa;
        let n_l = fill_cap(opts.alpha_l, self.a_cols.col_nnz(self.q[k]));
        let n_u = fill_cap(opts.alpha_u, self.a.row_nnz(self.p[k]));
        let lhat = self.lhat.entries();
        let uhat = self.uhat.entries();
        self.flops.drop_ops += (lhat.len() + uhat.len()) as u64;
        let (lcol, urow) = if self.sym {
            let (b, e): (Vec<_>, Vec<_>) = lhat.into_iter().partition(|e| e.0 < m);
            let f: Vec<_> = uhat.into_iter().filter(|e| e.0 >= m).collect();
            let kept_b = apply_dropping(&b, kl, opts.tau_l, n_l.min(n_u));
            let kept_e = apply_dropping(&e, kl, opts.tau_l, n_l - kept_b.len());
            let kept_f = apply_dropping(&f, ku, opts.tau_u, n_u - kept_b.len());
            let mut lcol = kept_b.clone();
            lcol.extend(kept_e);
            let mut urow = kept_b;
            urow.extend(kept_f);
            (lcol, urow)
        } else {
            (
                apply_dropping(&lhat, kl, opts.tau_l, n_l),
                apply_dropping(&uhat, ku, opts.tau_u, n_u),
            )
        };
        self.l.append_column(&lcol);
        self.u.append_row(&urow);
        self.l_start.push(self.l.primary_slots(k).start);
        self.u_start.push(self.u.primary_slots(k).start);
        self.kappa_l.push(kl);
        self.kappa_u.push(ku);
        self.k += 1;
    }

    pub fn into_output(mut self) -> FactorOutput {
        self.flops.swap_moves = self.l.swap_moves() + self.u.swap_moves();
        FactorOutput {
            m: self.m,
            p: self.p,
            q: self.q,
            d: self.d,
            l: self.l,
            u: self.u,
            kappa_l: self.kappa_l,
            kappa_u: self.kappa_u,
            pivots: self.m0 - self.m,
            flops: self.flops,
            symmetric: self.sym,
        }
    }
}

/// Factors the leading `m x m` block of `a[p, q]` (with its borders) by
/// Crout incomplete LDU with diagonal pivoting.
///
/// `a` must already be scaled. With `sym`, the leading block is treated as
/// symmetric and the result satisfies `U_B == L_B^T` exactly. Positions that
/// fail the `tau_d` or `tau_kappa` tests are moved past the final `m`.
pub fn iludp_factor(a: &Crs, p: Vec<usize>, q: Vec<usize>, m: usize, sym: bool, opts: &Options) -> Result<FactorOutput> {
    let mut st = FactorState::new(a, p, q, m, sym, opts)?;
    'steps: while st.k < st.m {
        let mut pivot = st.diagonal_needs_pivot();
        let kappa = loop {
            if pivot && !st.diagonal_pivot() {
                break 'steps;
            }
            let (kl, ku) = st.estimate();
            if kl > opts.tau_kappa || ku > opts.tau_kappa {
                pivot = true;
                continue;
            }
            break (kl, ku);
        };
        st.crout_update_col();
        st.crout_update_row();
        st.scale_by_pivot();
        st.pre_update_diag();
        st.finish_step(kappa, opts);
    }
    Ok(st.into_output())
}
