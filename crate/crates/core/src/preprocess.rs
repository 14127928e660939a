//! Per-level preprocessing: equilibration, diagonal matching, fill-reducing
//! symmetric reordering, and deferral of dense rows and weak diagonals.
//!
//! The output is a pair of permutations `p`, `q`, positive scalings `s`,
//! `t` (indexed by original row/column), and the size `m` of the leading
//! block that the factorization may eliminate. The preprocessed matrix is
//! `diag(s[p]) A[p, q] diag(t[q])`.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::{invert_permutation, Crs};

/// Tunables for preprocessing that do not belong to the factorization options.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    /// Leading-block diagonals with scaled magnitude below this are deferred.
    pub diag_defer_tol: f64,
    /// Rows/columns with more than this multiple of the mean nonzeros per row are deferred.
    pub dense_factor: f64,
    /// Maximum equilibration sweeps.
    pub max_sweeps: usize,
    pub reordering: Reordering,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            diag_defer_tol: 1e-2,
            dense_factor: 10.0,
            max_sweeps: 20,
            reordering: Reordering::ApproximateMinimumDegree,
        }
    }
}

/// Symmetric reordering strategy applied to the leading block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reordering {
    Natural,
    ReverseCuthillMcKee,
    /// Approximate minimum degree on the pattern of `A + A^T`.
    ApproximateMinimumDegree,
}

impl Reordering {
    /// Ordering (`perm[new] = old`) of the symmetrized pattern of `pattern`.
    pub fn order(&self, pattern: &Crs) -> Vec<usize> {
        match self {
            Reordering::Natural => (0..pattern.n_rows()).collect(),
            Reordering::ReverseCuthillMcKee => symmetric_reorder(pattern),
            Reordering::ApproximateMinimumDegree => amd_order(pattern),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessResult {
    /// Row permutation, `p[new] = old`.
    pub p: Vec<usize>,
    /// Column permutation, `q[new] = old`.
    pub q: Vec<usize>,
    /// Row scaling indexed by original row.
    pub s: Vec<f64>,
    /// Column scaling indexed by original column.
    pub t: Vec<f64>,
    /// Size of the leading block handed to the factorization.
    pub m: usize,
    /// Whether the leading block was treated symmetrically.
    pub symmetric: bool,
    /// Number of dense rows parked at the very end.
    pub tagged: usize,
    /// Rows without a structural match (nonsymmetric path only).
    pub unmatched: usize,
}

const EQUILIBRATION_TOL: f64 = 1e-3;

fn check_structure(a: &Crs) -> Result<()> {
    let mut col_seen = vec![false; a.n_cols()];
    for i in 0..a.n_rows() {
        let mut any = false;
        for (j, v) in a.row(i) {
            if v != 0.0 {
                any = true;
                col_seen[j] = true;
            }
        }
        if !any {
            return Err(Error::StructurallySingular {
                what: "row",
                index: i,
            });
        }
    }
    if let Some(j) = col_seen.iter().position(|s| !s) {
        return Err(Error::StructurallySingular {
            what: "column",
            index: j,
        });
    }
    Ok(())
}

fn row_col_max(a: &Crs, s: &[f64], t: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut r = vec![0.0f64; a.n_rows()];
    let mut c = vec![0.0f64; a.n_cols()];
    for (i, ri) in r.iter_mut().enumerate() {
        for (j, v) in a.row(i) {
            let x = (s[i] * v * t[j]).abs();
            *ri = ri.max(x);
            c[j] = c[j].max(x);
        }
    }
    (r, c)
}

/// Max-magnitude equilibration by simultaneous square-root row/column
/// sweeps. Afterwards every row and column of `diag(s) A diag(t)` has
/// max-magnitude at most one. With `symmetric`, `s == t` on return.
pub fn equilibrate(a: &Crs, symmetric: bool, max_sweeps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if symmetric && a.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: a.n_rows(),
            got: a.n_cols(),
        });
    }
    check_structure(a)?;
    let n = a.n_rows();
    let mut s = vec![1.0; n];
    let mut t = vec![1.0; a.n_cols()];
    if symmetric {
        let all: Vec<bool> = vec![true; n];
        symmetric_sweeps(a, &all, &mut s, max_sweeps);
        t.clone_from(&s);
    } else {
        for _ in 0..max_sweeps {
            let (r, c) = row_col_max(a, &s, &t);
            let dev = r.iter().chain(&c).fold(0.0f64, |m, x| m.max((1.0 - x).abs()));
            if dev <= EQUILIBRATION_TOL {
                break;
            }
            for (si, ri) in s.iter_mut().zip(&r) {
                *si /= ri.sqrt();
            }
            for (tj, cj) in t.iter_mut().zip(&c) {
                *tj /= cj.sqrt();
            }
        }
        // exact row normalization bounds every column by one as well
        let (r, _) = row_col_max(a, &s, &t);
        for (si, ri) in s.iter_mut().zip(&r) {
            *si /= ri;
        }
    }
    Ok((s, t))
}

/// Symmetric sweeps restricted to the index set `inside`; entries with
/// either index outside are ignored. Ends with a uniform rescale so no row
/// of the block exceeds one.
fn symmetric_sweeps(a: &Crs, inside: &[bool], s: &mut [f64], max_sweeps: usize) {
    let n = a.n_rows();
    let block_max = |s: &[f64]| -> Vec<f64> {
        let mut r = vec![0.0f64; n];
        for i in (0..n).filter(|&i| inside[i]) {
            for (j, v) in a.row(i) {
                if inside[j] {
                    r[i] = r[i].max((s[i] * v * s[j]).abs());
                }
            }
        }
        r
    };
    for _ in 0..max_sweeps {
        let r = block_max(s);
        let dev = (0..n)
            .filter(|&i| inside[i] && r[i] > 0.0)
            .fold(0.0f64, |m, i| m.max((1.0 - r[i]).abs()));
        if dev <= EQUILIBRATION_TOL {
            break;
        }
        for i in 0..n {
            if inside[i] && r[i] > 0.0 {
                s[i] /= r[i].sqrt();
            }
        }
    }
    let r = block_max(s);
    let rmax = r.iter().fold(0.0f64, |m, &x| m.max(x));
    if rmax > 1.0 {
        let f = 1.0 / rmax.sqrt();
        for i in (0..n).filter(|&i| inside[i]) {
            s[i] *= f;
        }
    }
}

/// Equilibration for a predominantly symmetric matrix: the block `inside`
/// is scaled symmetrically first, then the remaining rows and columns are
/// swept with the block scaling held fixed.
fn equilibrate_partial(a: &Crs, inside: &[bool], max_sweeps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_structure(a)?;
    let n = a.n_rows();
    let mut s = vec![1.0; n];
    symmetric_sweeps(a, inside, &mut s, max_sweeps);
    let mut t = s.clone();
    if inside.iter().all(|&x| x) {
        return Ok((s, t));
    }
    for _ in 0..max_sweeps {
        let (r, c) = row_col_max(a, &s, &t);
        let dev = (0..n)
            .filter(|&i| !inside[i])
            .fold(0.0f64, |m, i| m.max((1.0 - r[i]).abs()).max((1.0 - c[i]).abs()));
        if dev <= EQUILIBRATION_TOL {
            break;
        }
        for i in (0..n).filter(|&i| !inside[i]) {
            s[i] /= r[i].sqrt();
            t[i] /= c[i].sqrt();
        }
    }
    let (r, _) = row_col_max(a, &s, &t);
    for i in (0..n).filter(|&i| !inside[i]) {
        s[i] /= r[i];
    }
    Ok((s, t))
}

/// Result of [`greedy_diag_match`].
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// Column permutation: column `q[i]` of the input becomes column `i`.
    pub q: Vec<usize>,
    /// Rows that received a structurally zero diagonal.
    pub unmatched: Vec<usize>,
}

/// Greedy maximum-magnitude transversal. Each row, in order, claims its
/// largest unclaimed nonzero column; rows left without one try a single
/// augmenting exchange with the owner of one of their columns.
pub fn greedy_diag_match(a: &Crs) -> Matching {
    let n = a.n_rows();
    assert_eq!(n, a.n_cols(), "matching needs a square matrix");
    let mut col_owner = vec![usize::MAX; n];
    let mut row_col = vec![usize::MAX; n];
    for i in 0..n {
        let mut best = usize::MAX;
        let mut best_v = 0.0;
        for (j, v) in a.row(i) {
            if col_owner[j] == usize::MAX && v.abs() > best_v {
                best = j;
                best_v = v.abs();
            }
        }
        if best != usize::MAX {
            col_owner[best] = i;
            row_col[i] = best;
        }
    }
    for i in 0..n {
        if row_col[i] != usize::MAX {
            continue;
        }
        'search: for (j, v) in a.row(i) {
            if v == 0.0 {
                continue;
            }
            let r = col_owner[j];
            if r == usize::MAX {
                col_owner[j] = i;
                row_col[i] = j;
                break;
            }
            let mut alt = usize::MAX;
            let mut alt_v = 0.0;
            for (j2, v2) in a.row(r) {
                if col_owner[j2] == usize::MAX && v2.abs() > alt_v {
                    alt = j2;
                    alt_v = v2.abs();
                }
            }
            if alt != usize::MAX {
                col_owner[alt] = r;
                row_col[r] = alt;
                col_owner[j] = i;
                row_col[i] = j;
                break 'search;
            }
        }
    }
    let mut free_cols = (0..n).filter(|&j| col_owner[j] == usize::MAX);
    let mut unmatched = Vec::new();
    for i in 0..n {
        if row_col[i] == usize::MAX {
            unmatched.push(i);
            row_col[i] = free_cols.next().expect("as many free columns as unmatched rows");
        }
    }
    Matching {
        q: row_col,
        unmatched,
    }
}

/// Adjacency lists of the symmetrized off-diagonal pattern, sorted.
fn symmetric_adjacency(pattern: &Crs) -> Vec<Vec<usize>> {
    let n = pattern.n_rows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for &j in pattern.row_indices(i) {
            if j != i && j < n {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

fn bfs_levels(adj: &[Vec<usize>], root: usize, level: &mut [usize], touched: &mut Vec<usize>) -> usize {
    touched.clear();
    level[root] = 0;
    touched.push(root);
    let mut head = 0;
    let mut depth = 0;
    while head < touched.len() {
        let v = touched[head];
        head += 1;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                depth = depth.max(level[w]);
                touched.push(w);
            }
        }
    }
    depth
}

/// Reverse Cuthill-McKee ordering (`perm[new] = old`) of the pattern of
/// `A + A^T`. Each connected component starts from a pseudo-peripheral
/// vertex; ties are broken by vertex index, so the result is deterministic.
pub fn symmetric_reorder(pattern: &Crs) -> Vec<usize> {
    let n = pattern.n_rows();
    let adj = symmetric_adjacency(pattern);
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut level = vec![usize::MAX; n];
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if placed[seed] {
            continue;
        }
        // pseudo-peripheral start: repeatedly jump to a min-degree vertex of the last level
        let mut root = seed;
        let mut depth = bfs_levels(&adj, root, &mut level, &mut touched);
        let component: Vec<usize> = touched.clone();
        if let Some(&r) = component.iter().min_by_key(|&&v| (degree[v], v)) {
            for &v in &component {
                level[v] = usize::MAX;
            }
            root = r;
            depth = bfs_levels(&adj, root, &mut level, &mut touched);
        }
        loop {
            let candidate = touched
                .iter()
                .copied()
                .filter(|&v| level[v] == depth)
                .min_by_key(|&v| (degree[v], v))
                .expect("last level is nonempty");
            for &v in &touched {
                level[v] = usize::MAX;
            }
            let d2 = bfs_levels(&adj, candidate, &mut level, &mut touched);
            if d2 > depth {
                root = candidate;
                depth = d2;
            } else {
                break;
            }
        }
        for &v in &touched {
            level[v] = usize::MAX;
        }
        placed[root] = true;
        queue.push_back(root);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !placed[w]));
            nbrs.sort_unstable_by_key(|&w| (degree[w], w));
            for &w in &nbrs {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Approximate minimum degree ordering (`perm[new] = old`) of the pattern
/// of `A + A^T`.
pub fn amd_order(pattern: &Crs) -> Vec<usize> {
    let n = pattern.n_rows();
    let adj = symmetric_adjacency(pattern);
    let mut ptr = Vec::with_capacity(n + 1);
    let mut ind = Vec::new();
    ptr.push(0);
    // the diagonal is listed too; the ordering ignores it but expects nnz >= n
    for (i, a) in adj.iter().enumerate() {
        let at = a.partition_point(|&j| j < i);
        ind.extend_from_slice(&a[..at]);
        ind.push(i);
        ind.extend_from_slice(&a[at..]);
        ptr.push(ind.len());
    }
    let control = amd::Control::default();
    match amd::order(n, &ptr, &ind, &control) {
        Ok((perm, _, _)) => perm,
        // the adjacency is sorted and duplicate free, so this is unreachable
        Err(_) => symmetric_reorder(pattern),
    }
}

/// Half-bandwidth `max |i - j|` over stored entries.
pub fn bandwidth(a: &Crs) -> usize {
    (0..a.n_rows())
        .flat_map(|i| a.row_indices(i).iter().map(move |&j| i.abs_diff(j)))
        .max()
        .unwrap_or(0)
}

/// Outcome of [`defer_special_rows`], in positions of the matrix it was given.
#[derive(Debug, Clone, PartialEq)]
pub struct Deferral {
    /// `order[new] = old` position.
    pub order: Vec<usize>,
    pub m: usize,
    /// Dense rows/columns moved to the very end.
    pub tagged: usize,
    /// Leading rows moved past `m` for a weak or missing diagonal.
    pub weak: usize,
}

/// Moves dense rows/columns and weak diagonals out of the leading block.
///
/// Input positions are those of an already scaled and matched matrix `a`.
/// Leading positions `< m` whose row or column holds more than
/// `dense_factor` times the mean nonzeros per row are tagged and parked at
/// the very end; leading positions with `|a_ii| < diag_defer_tol` (or listed
/// in `forced`) follow the original trailing block. Kept leading positions
/// retain their relative order.
pub fn defer_special_rows(a: &Crs, m: usize, forced: &[usize], cfg: &PreprocessConfig) -> Deferral {
    let n = a.n_rows();
    let avg = a.nnz() as f64 / n.max(1) as f64;
    let limit = cfg.dense_factor * avg;
    let mut col_nnz = vec![0usize; a.n_cols()];
    for &j in a.col_ind() {
        col_nnz[j] += 1;
    }
    let mut is_forced = vec![false; n];
    for &i in forced {
        is_forced[i] = true;
    }
    let mut kept = Vec::with_capacity(m);
    let mut weak = Vec::new();
    let mut dense = Vec::new();
    for i in 0..m {
        if a.row_nnz(i) as f64 > limit || col_nnz[i] as f64 > limit {
            dense.push(i);
        } else if is_forced[i] || a.get(i, i).abs() < cfg.diag_defer_tol {
            weak.push(i);
        } else {
            kept.push(i);
        }
    }
    let new_m = kept.len();
    let (n_weak, tagged) = (weak.len(), dense.len());
    let mut order = kept;
    order.extend(m..n);
    order.extend(weak);
    order.extend(dense);
    Deferral {
        order,
        m: new_m,
        tagged,
        weak: n_weak,
    }
}

/// Full per-level preprocessing. `m0 > 0` selects the symmetric path for
/// the leading `m0 x m0` block; `m0 == 0` treats the whole matrix as
/// nonsymmetric.
pub fn preprocess(a: &Crs, m0: usize, cfg: &PreprocessConfig) -> Result<PreprocessResult> {
    let n = a.n_rows();
    if n != a.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.n_cols(),
        });
    }
    if m0 > n {
        return Err(Error::InvalidOption(format!(
            "symmetric block size {m0} exceeds matrix size {n}"
        )));
    }
    if n == 0 {
        return Ok(PreprocessResult {
            p: vec![],
            q: vec![],
            s: vec![],
            t: vec![],
            m: 0,
            symmetric: m0 > 0,
            tagged: 0,
            unmatched: 0,
        });
    }
    if m0 > 0 {
        let inside: Vec<bool> = (0..n).map(|i| i < m0).collect();
        let (s, t) = equilibrate_partial(a, &inside, cfg.max_sweeps)?;
        let scaled = a.scaled(&s, &t);
        let def = defer_special_rows(&scaled, m0, &[], cfg);
        let p = reorder_leading(&scaled, &def.order, &def.order, def.m, cfg.reordering);
        Ok(PreprocessResult {
            q: p.clone(),
            p,
            s,
            t,
            m: def.m,
            symmetric: true,
            tagged: def.tagged,
            unmatched: 0,
        })
    } else {
        let (s, t) = equilibrate(a, false, cfg.max_sweeps)?;
        let scaled = a.scaled(&s, &t);
        let matching = greedy_diag_match(&scaled);
        let identity: Vec<usize> = (0..n).collect();
        let matched = scaled.permuted(&identity, &matching.q);
        let def = defer_special_rows(&matched, n, &matching.unmatched, cfg);
        let rows: Vec<usize> = def.order.clone();
        let cols: Vec<usize> = def.order.iter().map(|&i| matching.q[i]).collect();
        let p = reorder_leading(&scaled, &rows, &cols, def.m, cfg.reordering);
        // reorder_leading permuted the leading positions of `rows`; mirror on `cols`
        let row_pos = invert_permutation(&rows);
        let q = p.iter().map(|&r| cols[row_pos[r]]).collect();
        Ok(PreprocessResult {
            p,
            q,
            s,
            t,
            m: def.m,
            symmetric: false,
            tagged: def.tagged,
            unmatched: matching.unmatched.len(),
        })
    }
}

/// Applies the symmetric reordering to the leading `m` positions of
/// `a[rows, cols]` and returns the updated row order.
fn reorder_leading(a: &Crs, rows: &[usize], cols: &[usize], m: usize, strategy: Reordering) -> Vec<usize> {
    if m == 0 {
        return rows.to_vec();
    }
    let mut col_pos = vec![usize::MAX; a.n_cols()];
    for (k, &c) in cols[..m].iter().enumerate() {
        col_pos[c] = k;
    }
    let block = a.extract(&rows[..m], &col_pos, m);
    let perm = strategy.order(&block);
    let mut out: Vec<usize> = perm.iter().map(|&k| rows[k]).collect();
    out.extend_from_slice(&rows[m..]);
    out
}
