//! Augmented compressed storage for incrementally built triangular factors.
//!
//! An [`AugStorage`] is a compressed major-ordered matrix (CCS for
//! [`AugCcs`], CRS for [`AugCrs`]) whose entries are additionally threaded
//! into one linked list per minor index. This gives amortized O(1) access
//! per nonzero in both orders, while the compressed part keeps its indices
//! sorted so that interchanging two minor indices only touches the affected
//! major segments.
//!
//! Terminology inside this module is orientation-neutral: a *primary* line
//! is a column of an [`AugCcs`] (a row of an [`AugCrs`]), a *secondary*
//! line is the crossing direction. Each stored entry owns one link node;
//! `val_pos` maps a node to its slot in the compressed arrays and
//! `slot_node` maps back, so slots can be shuffled by interchanges without
//! breaking the lists.

use std::marker::PhantomData;
use std::ops::Range;

use super::{Ccs, Crs, DenseMatrix};

const NIL: usize = usize::MAX;

/// Marker for column-major primary storage (the `L` factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnMajor;

/// Marker for row-major primary storage (the `U` factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowMajor;

/// Augmented compressed storage, generic over the primary orientation.
#[derive(Debug, Clone)]
pub struct AugStorage<O> {
    n_secondary: usize,
    start: Vec<usize>,
    ind: Vec<usize>,
    val: Vec<f64>,
    node_primary: Vec<usize>,
    sec_start: Vec<usize>,
    sec_next: Vec<usize>,
    sec_end: Vec<usize>,
    val_pos: Vec<usize>,
    slot_node: Vec<usize>,
    swap_moves: u64,
    swap_bound: u64,
    _orientation: PhantomData<O>,
}

/// `L` storage: columns appended one at a time, rows linked.
pub type AugCcs = AugStorage<ColumnMajor>;
/// `U` storage: rows appended one at a time, columns linked.
pub type AugCrs = AugStorage<RowMajor>;

/// Iterator over one secondary line, following the link chain.
pub struct SecondaryIter<'a, O> {
    store: &'a AugStorage<O>,
    node: usize,
}

impl<O> Iterator for SecondaryIter<'_, O> {
    type Item = (usize, f64);

    #[inline]
    fn next(&mut self) -> Option<Self::Item> {
        if self.node == NIL {
            return None;
        }
        let node = self.node;
        self.node = self.store.sec_next[node];
        Some((
            self.store.node_primary[node],
            self.store.val[self.store.val_pos[node]],
        ))
    }
}

impl<O> AugStorage<O> {
    /// Empty storage with `n_secondary` crossing lines and room reserved for
    /// `primary_cap` primaries and `nnz_cap` entries.
    pub fn with_capacity(n_secondary: usize, primary_cap: usize, nnz_cap: usize) -> Self {
        let mut start = Vec::with_capacity(primary_cap + 1);
        start.push(0);
        AugStorage {
            n_secondary,
            start,
            ind: Vec::with_capacity(nnz_cap),
            val: Vec::with_capacity(nnz_cap),
            node_primary: Vec::with_capacity(nnz_cap),
            sec_start: vec![NIL; n_secondary],
            sec_next: Vec::with_capacity(nnz_cap),
            sec_end: vec![NIL; n_secondary],
            val_pos: Vec::with_capacity(nnz_cap),
            slot_node: Vec::with_capacity(nnz_cap),
            swap_moves: 0,
            swap_bound: 0,
            _orientation: PhantomData,
        }
    }

    pub fn new(n_secondary: usize) -> Self {
        Self::with_capacity(n_secondary, 0, 0)
    }

    pub fn n_secondary(&self) -> usize {
        self.n_secondary
    }

    /// Number of primaries appended so far.
    pub fn n_primary(&self) -> usize {
        self.start.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.ind.len()
    }

    /// Reserved entry capacity.
    pub fn capacity(&self) -> usize {
        self.ind.capacity()
    }

    /// Total slot moves performed by secondary interchanges.
    pub fn swap_moves(&self) -> u64 {
        self.swap_moves
    }

    /// Sum over all interchanges of the number of entries lying in the
    /// touched primary segments between the two exchanged indices.
    pub fn swap_bound(&self) -> u64 {
        self.swap_bound
    }

    pub fn primary_slots(&self, j: usize) -> Range<usize> {
        self.start[j]..self.start[j + 1]
    }

    pub fn primary_indices(&self, j: usize) -> &[usize] {
        &self.ind[self.start[j]..self.start[j + 1]]
    }

    pub fn primary_values(&self, j: usize) -> &[f64] {
        &self.val[self.start[j]..self.start[j + 1]]
    }

    pub fn primary_nnz(&self, j: usize) -> usize {
        self.start[j + 1] - self.start[j]
    }

    #[inline]
    pub fn index_at(&self, slot: usize) -> usize {
        self.ind[slot]
    }

    #[inline]
    pub fn value_at(&self, slot: usize) -> f64 {
        self.val[slot]
    }

    pub fn primary_iter(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.primary_slots(j);
        self.ind[r.clone()]
            .iter()
            .copied()
            .zip(self.val[r].iter().copied())
    }

    /// Entries of secondary line `i` in ascending primary order.
    pub fn secondary_iter(&self, i: usize) -> SecondaryIter<'_, O> {
        SecondaryIter {
            store: self,
            node: self.sec_start[i],
        }
    }

    pub fn secondary_is_empty(&self, i: usize) -> bool {
        self.sec_start[i] == NIL
    }

    /// Appends primary line `self.n_primary()` with `entries` given in strictly
    /// ascending secondary order. Storage grows geometrically when full.
    pub fn append_primary(&mut self, entries: &[(usize, f64)]) {
        let j = self.n_primary();
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        for &(s, v) in entries {
            assert!(s < self.n_secondary, "secondary index {s} out of range");
            let slot = self.ind.len();
            let node = self.node_primary.len();
            self.ind.push(s);
            self.val.push(v);
            self.node_primary.push(j);
            self.sec_next.push(NIL);
            self.val_pos.push(slot);
            self.slot_node.push(node);
            if self.sec_end[s] == NIL {
                self.sec_start[s] = node;
            } else {
                let tail = self.sec_end[s];
                self.sec_next[tail] = node;
            }
            self.sec_end[s] = node;
        }
        self.start.push(self.ind.len());
    }

    #[inline]
    fn move_slot(&mut self, from: usize, to: usize) {
        self.ind[to] = self.ind[from];
        self.val[to] = self.val[from];
        let node = self.slot_node[from];
        self.slot_node[to] = node;
        self.val_pos[node] = to;
        self.swap_moves += 1;
    }

    /// Interchanges secondary lines `a` and `b`, keeping every touched primary
    /// segment sorted. Work is linear in the entries of the touched segments
    /// lying between `a` and `b`.
    pub fn swap_secondary(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let mut na = self.sec_start[a];
        let mut nb = self.sec_start[b];
        while na != NIL || nb != NIL {
            let ja = if na == NIL { usize::MAX } else { self.node_primary[na] };
            let jb = if nb == NIL { usize::MAX } else { self.node_primary[nb] };
            let j = ja.min(jb);
            let seg = self.primary_slots(j);
            if ja == jb {
                // both present: exchange values and the node/slot pairing
                let (sa, sb) = (self.val_pos[na], self.val_pos[nb]);
                self.val.swap(sa, sb);
                self.val_pos[na] = sb;
                self.val_pos[nb] = sa;
                self.slot_node[sa] = nb;
                self.slot_node[sb] = na;
                self.swap_moves += 1;
                self.swap_bound += count_between(&self.ind[seg.clone()], a, b);
                na = self.sec_next[na];
                nb = self.sec_next[nb];
            } else if ja < jb {
                // entry moves from a down to b
                self.swap_bound += count_between(&self.ind[seg.clone()], a, b);
                let node = na;
                let v = self.val[self.val_pos[node]];
                let mut pos = self.val_pos[node];
                while pos + 1 < seg.end && self.ind[pos + 1] < b {
                    self.move_slot(pos + 1, pos);
                    pos += 1;
                }
                self.ind[pos] = b;
                self.val[pos] = v;
                self.slot_node[pos] = node;
                self.val_pos[node] = pos;
                self.swap_moves += 1;
                na = self.sec_next[na];
            } else {
                // entry moves from b up to a
                self.swap_bound += count_between(&self.ind[seg.clone()], a, b);
                let node = nb;
                let v = self.val[self.val_pos[node]];
                let mut pos = self.val_pos[node];
                while pos > seg.start && self.ind[pos - 1] > a {
                    self.move_slot(pos - 1, pos);
                    pos -= 1;
                }
                self.ind[pos] = a;
                self.val[pos] = v;
                self.slot_node[pos] = node;
                self.val_pos[node] = pos;
                self.swap_moves += 1;
                nb = self.sec_next[nb];
            }
            debug_assert!(self.ind[seg.clone()].windows(2).all(|w| w[0] < w[1]));
        }
        self.sec_start.swap(a, b);
        self.sec_end.swap(a, b);
    }

    /// Checks every structural invariant. Intended for tests and debug assertions.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for j in 0..self.n_primary() {
            let idx = self.primary_indices(j);
            if !idx.windows(2).all(|w| w[0] < w[1]) {
                return Err(format!("primary {j} not sorted"));
            }
        }
        let mut seen = 0usize;
        for i in 0..self.n_secondary {
            let mut node = self.sec_start[i];
            let mut last_primary = None;
            let mut tail = NIL;
            while node != NIL {
                let slot = self.val_pos[node];
                if self.slot_node[slot] != node {
                    return Err(format!("slot/node mismatch at node {node}"));
                }
                if self.ind[slot] != i {
                    return Err(format!(
                        "node {node} linked in line {i} but slot holds {}",
                        self.ind[slot]
                    ));
                }
                let j = self.node_primary[node];
                if !self.primary_slots(j).contains(&slot) {
                    return Err(format!("node {node} slot outside primary {j}"));
                }
                if let Some(lp) = last_primary {
                    if lp >= j {
                        return Err(format!("line {i} not in ascending primary order"));
                    }
                }
                last_primary = Some(j);
                tail = node;
                seen += 1;
                node = self.sec_next[node];
            }
            if tail != self.sec_end[i] {
                return Err(format!("line {i} tail pointer stale"));
            }
        }
        if seen != self.nnz() {
            return Err(format!("linked {seen} entries, stored {}", self.nnz()));
        }
        Ok(())
    }

    /// Dense image in (secondary, primary) coordinates.
    fn dense_secondary_by_primary(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n_secondary, self.n_primary());
        for j in 0..self.n_primary() {
            for (i, v) in self.primary_iter(j) {
                d.set(i, j, v);
            }
        }
        d
    }
}

fn count_between(idx: &[usize], a: usize, b: usize) -> u64 {
    let lo = idx.partition_point(|&x| x < a);
    let hi = idx.partition_point(|&x| x <= b);
    (hi - lo) as u64
}

impl AugStorage<ColumnMajor> {
    pub fn n_rows(&self) -> usize {
        self.n_secondary
    }

    pub fn n_cols(&self) -> usize {
        self.n_primary()
    }

    /// Appends the next column; `entries` are `(row, value)` sorted by row.
    pub fn append_column(&mut self, entries: &[(usize, f64)]) {
        self.append_primary(entries)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        self.swap_secondary(a, b)
    }

    /// `(col, value)` pairs of row `i` in ascending column order.
    pub fn row_iter(&self, i: usize) -> SecondaryIter<'_, ColumnMajor> {
        self.secondary_iter(i)
    }

    /// `(row, value)` pairs of column `j` in ascending row order.
    pub fn col_iter(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.primary_iter(j)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.dense_secondary_by_primary()
    }

    pub fn to_ccs(&self) -> Ccs {
        Ccs::from_parts_unchecked(
            self.n_secondary,
            self.n_primary(),
            self.start.clone(),
            self.ind.clone(),
            self.val.clone(),
        )
    }
}

impl AugStorage<RowMajor> {
    pub fn n_rows(&self) -> usize {
        self.n_primary()
    }

    pub fn n_cols(&self) -> usize {
        self.n_secondary
    }

    /// Appends the next row; `entries` are `(col, value)` sorted by column.
    pub fn append_row(&mut self, entries: &[(usize, f64)]) {
        self.append_primary(entries)
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        self.swap_secondary(a, b)
    }

    /// `(row, value)` pairs of column `j` in ascending row order.
    pub fn col_iter(&self, j: usize) -> SecondaryIter<'_, RowMajor> {
        self.secondary_iter(j)
    }

    /// `(col, value)` pairs of row `i` in ascending column order.
    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.primary_iter(i)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.dense_secondary_by_primary().transpose()
    }

    pub fn to_crs(&self) -> Crs {
        Crs::from_parts_unchecked(
            self.n_primary(),
            self.n_secondary,
            self.start.clone(),
            self.ind.clone(),
            self.val.clone(),
        )
    }
}
