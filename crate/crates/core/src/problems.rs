//! Test problem generators.
//!
//! The finite-difference systems discretize `-Δu = f` on the unit square
//! (cube) with `u = e^{x+y}` (`e^{x+y+z}`). Neumann data is imposed on the
//! top edge (face) and Dirichlet data elsewhere. Dirichlet nodes are kept as
//! identity rows instead of being eliminated, so the matrix is
//!
//! ```text
//! [ B  F ]    B: interior stencil rows (symmetric)
//! [ E  C ]    trailing rows: Neumann rows, then Dirichlet identity rows
//! ```
//!
//! Nodes are numbered interior first, then Neumann, then Dirichlet, each
//! group in lexicographic order with `x` varying fastest.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sparse::{Crs, TripletList};

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSystem {
    pub a: Crs,
    pub b: Vec<f64>,
    /// Size of the leading symmetric block (the interior nodes).
    pub m: usize,
    /// Analytic solution sampled at the nodes.
    pub exact: Vec<f64>,
    pub meta: GridMeta,
}

/// Grid description written next to generated systems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub m: usize,
    pub n: usize,
    /// Nodes per side, including boundary nodes.
    pub dims: Vec<usize>,
    /// Mesh width per dimension.
    pub h: Vec<f64>,
    pub n_neumann: usize,
    pub n_dirichlet: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    Interior,
    Neumann,
    Dirichlet,
}

/// Generic box grid assembly shared by the 2D and 3D generators.
fn assemble(dims: &[usize], neumann_top: bool) -> PoissonSystem {
    assert!(dims.iter().all(|&d| d >= 3), "every side needs at least 3 nodes");
    let dim = dims.len();
    let h: Vec<f64> = dims.iter().map(|&d| 1.0 / (d - 1) as f64).collect();
    let total: usize = dims.iter().product();
    let coords = |mut lin: usize| -> Vec<usize> {
        let mut c = Vec::with_capacity(dim);
        for &d in dims {
            c.push(lin % d);
            lin /= d;
        }
        c
    };
    let linear = |c: &[usize]| -> usize {
        let mut lin = 0;
        for a in (0..dim).rev() {
            lin = lin * dims[a] + c[a];
        }
        lin
    };
    let kind = |c: &[usize]| -> NodeKind {
        let top = dim - 1;
        let inner = |a: usize| c[a] > 0 && c[a] + 1 < dims[a];
        if (0..dim).all(inner) {
            NodeKind::Interior
        } else if neumann_top && c[top] + 1 == dims[top] && (0..top).all(inner) {
            NodeKind::Neumann
        } else {
            NodeKind::Dirichlet
        }
    };
    let mut order = Vec::with_capacity(total);
    for want in [NodeKind::Interior, NodeKind::Neumann, NodeKind::Dirichlet] {
        order.extend((0..total).filter(|&l| kind(&coords(l)) == want));
    }
    let mut pos = vec![0usize; total];
    for (new, &old) in order.iter().enumerate() {
        pos[old] = new;
    }
    let point = |c: &[usize]| -> Vec<f64> { c.iter().zip(&h).map(|(&i, &hh)| i as f64 * hh).collect() };
    let u = |x: &[f64]| x.iter().sum::<f64>().exp();

    let mut t = TripletList::with_capacity(total, total, (2 * dim + 1) * total);
    let mut b = vec![0.0; total];
    let mut exact = vec![0.0; total];
    let (mut m, mut n_neumann, mut n_dirichlet) = (0, 0, 0);
    for (row, &lin) in order.iter().enumerate() {
        let c = coords(lin);
        let x = point(&c);
        exact[row] = u(&x);
        match kind(&c) {
            NodeKind::Interior => {
                m += 1;
                let mut center = 0.0;
                for a in 0..dim {
                    let w = 1.0 / (h[a] * h[a]);
                    center += 2.0 * w;
                    for delta in [-1isize, 1] {
                        let mut nb = c.clone();
                        nb[a] = (nb[a] as isize + delta) as usize;
                        t.push(row, pos[linear(&nb)], -w);
                    }
                }
                t.push(row, row, center);
                // -Δ e^{sum x} = -dim * e^{sum x}
                b[row] = -(dim as f64) * u(&x);
            }
            NodeKind::Neumann => {
                n_neumann += 1;
                // second-order one-sided difference of du/dn on the top boundary
                let top = dim - 1;
                let hh = h[top];
                let mut below = c.clone();
                for (k, coef) in [(0usize, 3.0), (1, -4.0), (2, 1.0)] {
                    below[top] = c[top] - k;
                    t.push(row, pos[linear(&below)], coef / (2.0 * hh));
                }
                b[row] = u(&x);
            }
            NodeKind::Dirichlet => {
                n_dirichlet += 1;
                t.push(row, row, 1.0);
                b[row] = u(&x);
            }
        }
    }
    let a = Crs::from_triplets(&t).expect("generated indices are in range");
    PoissonSystem {
        a,
        b,
        m,
        exact,
        meta: GridMeta {
            m,
            n: total,
            dims: dims.to_vec(),
            h,
            n_neumann,
            n_dirichlet,
        },
    }
}

/// 5-point Poisson system on an `nx x ny` node grid with a Neumann top edge.
pub fn fdm_poisson_2d(nx: usize, ny: usize) -> PoissonSystem {
    assemble(&[nx, ny], true)
}

/// As [`fdm_poisson_2d`] with Dirichlet data on every edge.
pub fn fdm_poisson_2d_dirichlet(nx: usize, ny: usize) -> PoissonSystem {
    assemble(&[nx, ny], false)
}

/// 7-point Poisson system on an `nx x ny x nz` node grid with a Neumann top face.
pub fn fdm_poisson_3d(nx: usize, ny: usize, nz: usize) -> PoissonSystem {
    assemble(&[nx, ny, nz], true)
}

pub fn fdm_poisson_3d_dirichlet(nx: usize, ny: usize, nz: usize) -> PoissonSystem {
    assemble(&[nx, ny, nz], false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixKind {
    Spd,
    SymmetricIndefinite,
    Nonsymmetric,
    ZeroDiagSym,
}

impl std::str::FromStr for MatrixKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "spd" => Ok(MatrixKind::Spd),
            "symmetric-indefinite" => Ok(MatrixKind::SymmetricIndefinite),
            "nonsymmetric" => Ok(MatrixKind::Nonsymmetric),
            "zero-diag-sym" => Ok(MatrixKind::ZeroDiagSym),
            _ => Err(format!("unknown matrix kind '{s}'")),
        }
    }
}

/// Seeded random sparse matrix.
///
/// * `Spd`: `M^T M + n I` for a random sparse `M`.
/// * `SymmetricIndefinite`: symmetric, diagonally dominant, diagonal signs random.
/// * `Nonsymmetric`: diagonally dominant by rows, diagonal signs random.
/// * `ZeroDiagSym`: symmetric with at least one (about a quarter of, at
///   most half of) zero diagonal entries, each such row coupled to its own
///   dominant partner.
pub fn random_test_matrix(n: usize, density: f64, kind: MatrixKind, seed: u64) -> Crs {
    assert!(density > 0.0 && density <= 1.0, "density must lie in (0, 1]");
    assert!(n > 0, "matrix must be nonempty");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = TripletList::new(n, n);
    match kind {
        MatrixKind::Spd => {
            let mut m = vec![Vec::new(); n];
            for (i, row) in m.iter_mut().enumerate() {
                for j in 0..n {
                    if i == j || rng.gen::<f64>() < density {
                        row.push((j, rng.gen_range(-1.0..1.0)));
                    }
                }
            }
            // (M^T M)_{jk} = sum_i m_ij m_ik
            for row in &m {
                for &(j, a) in row {
                    for &(k, b) in row {
                        t.push(j, k, a * b);
                    }
                }
            }
            for i in 0..n {
                t.push(i, i, n as f64);
            }
        }
        MatrixKind::SymmetricIndefinite | MatrixKind::ZeroDiagSym => {
            let mut off = vec![0.0; n];
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < density {
                        let v = rng.gen_range(-1.0..1.0);
                        t.push(i, j, v);
                        t.push(j, i, v);
                        off[i] += f64::abs(v);
                        off[j] += f64::abs(v);
                    }
                }
            }
            if kind == MatrixKind::SymmetricIndefinite {
                for (i, o) in off.iter().enumerate() {
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    t.push(i, i, sign * (o + rng.gen_range(0.5..1.5)));
                }
            } else {
                // disjoint pairs (zero row, partner); each pair forms a
                // nonsingular 2 x 2 block [0 v; v d]
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                let drawn = (0..n).filter(|_| rng.gen::<f64>() < 0.25).count();
                let k = drawn.max(1).min(n / 2);
                let mut zero = vec![false; n];
                for (&i, &j) in order[..k].iter().zip(&order[k..2 * k]) {
                    zero[i] = true;
                    let v = (off[i].max(off[j]) + 1.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    t.push(i, j, v);
                    t.push(j, i, v);
                }
                for i in 0..n {
                    if !zero[i] {
                        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        t.push(i, i, sign * (off[i] + rng.gen_range(0.5..1.5)));
                    }
                }
                if n == 1 {
                    t.push(0, 0, 0.0);
                }
            }
        }
        MatrixKind::Nonsymmetric => {
            for i in 0..n {
                let mut off = 0.0;
                for j in 0..n {
                    if j != i && rng.gen::<f64>() < density {
                        let v = rng.gen_range(-1.0..1.0);
                        t.push(i, j, v);
                        off += f64::abs(v);
                    }
                }
                let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                t.push(i, i, sign * (off + rng.gen_range(0.5..1.5)));
            }
        }
    }
    Crs::from_triplets(&t).expect("generated indices are in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_dirichlet_grid() {
        let sys = fdm_poisson_2d_dirichlet(3, 3);
        assert_eq!(sys.a.n_rows(), 9);
        assert_eq!(sys.m, 1);
        let h2 = 0.25;
        let row: Vec<f64> = sys.a.row_values(0).to_vec();
        let mut want = vec![-1.0 / h2; 4];
        want.push(4.0 / h2);
        let mut got = row.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn cube_three() {
        let sys = fdm_poisson_3d(3, 3, 3);
        assert_eq!(sys.a.n_rows(), 27);
        assert_eq!(sys.m, 1);
        assert_eq!(sys.meta.n_neumann, 1);
        assert_eq!(sys.a.get(0, 0), 6.0 / 0.25);
        assert_eq!(sys.a.row_nnz(0), 7);
    }

    #[test]
    fn block_structure() {
        let sys = fdm_poisson_2d(7, 6);
        let a = &sys.a;
        assert!(a.leading_block_is_symmetric(sys.m));
        let first_dirichlet = sys.m + sys.meta.n_neumann;
        for i in first_dirichlet..a.n_rows() {
            assert_eq!(a.row_indices(i), &[i]);
            assert_eq!(a.get(i, i), 1.0);
        }
        let f_nonzero = (0..sys.m).any(|i| a.row_indices(i).iter().any(|&j| j >= first_dirichlet));
        assert!(f_nonzero);
        for i in 0..a.n_rows() {
            assert!(a.row_nnz(i) <= 5);
        }
    }

    #[test]
    fn random_kinds() {
        let a = random_test_matrix(12, 0.3, MatrixKind::ZeroDiagSym, 4);
        assert!(a.diagonal().iter().any(|&d| d == 0.0));
        assert!(a.leading_block_is_symmetric(12));
        let b = random_test_matrix(12, 0.3, MatrixKind::Nonsymmetric, 4);
        assert_eq!(b, random_test_matrix(12, 0.3, MatrixKind::Nonsymmetric, 4));
        assert!(random_test_matrix(12, 0.3, MatrixKind::Spd, 1).leading_block_is_symmetric(12));
        assert_eq!("zero-diag-sym".parse::<MatrixKind>(), Ok(MatrixKind::ZeroDiagSym));
    }
}
