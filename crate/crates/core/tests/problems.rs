use psmilu::problems::{
    fdm_poisson_2d, fdm_poisson_2d_dirichlet, fdm_poisson_3d, fdm_poisson_3d_dirichlet, random_test_matrix,
    MatrixKind, PoissonSystem,
};
use psmilu::{gmres_right, psmilu_factor, Crs, DenseMatrix, GmresConfig, Options};

/// Solves the system to a tight tolerance with an exact-limit preconditioner.
fn solve(sys: &PoissonSystem) -> Vec<f64> {
    let prec = psmilu_factor(&sys.a, sys.m, &Options::exact()).unwrap();
    let cfg = GmresConfig {
        rtol: 1e-11,
        ..GmresConfig::default()
    };
    let rep = gmres_right(&sys.a, &sys.b, &prec, &cfg).unwrap();
    assert!(rep.final_relres < 1e-9, "relres {}", rep.final_relres);
    rep.x
}

fn max_error(sys: &PoissonSystem) -> f64 {
    solve(sys)
        .iter()
        .zip(&sys.exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Dense Cholesky; `false` when a pivot is not positive.
fn is_positive_definite(a: &DenseMatrix) -> bool {
    let n = a.n_rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    true
}

fn is_symmetric(a: &Crs) -> bool {
    a.leading_block_is_symmetric(a.n_rows())
}

#[test]
fn refinement_2d_is_second_order() {
    let errors: Vec<f64> = [17, 33, 65].iter().map(|&s| max_error(&fdm_poisson_2d(s, s))).collect();
    for order in observed_orders(&errors) {
        assert!((1.7..=2.3).contains(&order), "errors {errors:?}");
    }
}

#[test]
fn refinement_3d_is_second_order() {
    let errors: Vec<f64> = [5, 9, 17].iter().map(|&s| max_error(&fdm_poisson_3d(s, s, s))).collect();
    for order in observed_orders(&errors) {
        assert!((1.7..=2.3).contains(&order), "errors {errors:?}");
    }
}

#[test]
fn dirichlet_refinement_is_second_order() {
    let errors: Vec<f64> = [9, 17, 33].iter().map(|&s| max_error(&fdm_poisson_2d_dirichlet(s, s))).collect();
    for order in observed_orders(&errors) {
        assert!((1.7..=2.3).contains(&order), "errors {errors:?}");
    }
}

#[test]
fn interior_block_is_spd() {
    for sys in [fdm_poisson_2d(9, 7), fdm_poisson_3d(5, 4, 5)] {
        let m = sys.m;
        let b = sys.a.block(0, m, 0, m);
        assert!(is_symmetric(&b));
        assert!(is_positive_definite(&b.to_dense()));
        assert!(sys.a.leading_block_is_symmetric(m));
        // the Neumann rows break symmetry of the whole matrix
        assert!(!is_symmetric(&sys.a));
    }
}

#[test]
fn dirichlet_trailing_block_is_identity() {
    for sys in [fdm_poisson_2d_dirichlet(6, 5), fdm_poisson_3d_dirichlet(4, 4, 4)] {
        let (n, m) = (sys.a.n_rows(), sys.m);
        assert_eq!(sys.meta.n_neumann, 0);
        assert_eq!(sys.meta.n_dirichlet, n - m);
        let c = sys.a.block(m, n, m, n).to_dense();
        assert_eq!(c, DenseMatrix::identity(n - m));
        assert_eq!(sys.a.block(m, n, 0, m).nnz(), 0);
        // Dirichlet rows carry the boundary values
        for i in m..n {
            assert_eq!(sys.b[i], sys.exact[i]);
        }
    }
}

#[test]
fn neumann_grid_counts() {
    let sys = fdm_poisson_2d(6, 5);
    assert_eq!(sys.m, 4 * 3);
    assert_eq!(sys.meta.n_neumann, 4);
    assert_eq!(sys.meta.n_dirichlet, 30 - 12 - 4);
    let sys = fdm_poisson_3d(4, 5, 6);
    assert_eq!(sys.m, 2 * 3 * 4);
    assert_eq!(sys.meta.n_neumann, 2 * 3);
    assert_eq!(sys.a.n_rows(), 120);
}

#[test]
fn random_matrices_are_deterministic() {
    for kind in [
        MatrixKind::Spd,
        MatrixKind::SymmetricIndefinite,
        MatrixKind::Nonsymmetric,
        MatrixKind::ZeroDiagSym,
    ] {
        let a = random_test_matrix(30, 0.2, kind, 11);
        let b = random_test_matrix(30, 0.2, kind, 11);
        let c = random_test_matrix(30, 0.2, kind, 12);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

#[test]
fn random_matrix_kinds_have_their_structure() {
    let spd = random_test_matrix(25, 0.2, MatrixKind::Spd, 3);
    assert!(is_symmetric(&spd));
    assert!(is_positive_definite(&spd.to_dense()));

    let ind = random_test_matrix(25, 0.2, MatrixKind::SymmetricIndefinite, 3);
    assert!(is_symmetric(&ind));
    let d = ind.diagonal();
    assert!(d.iter().any(|&v| v > 0.0) && d.iter().any(|&v| v < 0.0));

    let ns = random_test_matrix(25, 0.2, MatrixKind::Nonsymmetric, 3);
    assert!(!is_symmetric(&ns));

    let zd = random_test_matrix(25, 0.2, MatrixKind::ZeroDiagSym, 3);
    assert!(is_symmetric(&zd));
    assert!(zd.diagonal().iter().any(|&v| v == 0.0));
}
