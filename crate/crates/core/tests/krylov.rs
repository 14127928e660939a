use psmilu::krylov::Identity;
use psmilu::oracle::dense_solve_matrix;
use psmilu::problems::{fdm_poisson_2d, random_test_matrix, MatrixKind};
use psmilu::{gmres_right, psmilu_factor, DenseMatrix, GmresConfig, Options};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn relres(a: &psmilu::Crs, x: &[f64], b: &[f64]) -> f64 {
    let mut r = b.to_vec();
    a.matvec_sub(x, &mut r);
    let n = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>().sqrt();
    n(&r) / n(b)
}

fn rhs(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn dense_inverse_preconditioner_converges_at_once() {
    let a = random_test_matrix(50, 0.1, MatrixKind::Spd, 5);
    let inv = dense_solve_matrix(&a.to_dense(), &DenseMatrix::identity(50)).unwrap();
    let b = rhs(50, 1);
    let rep = gmres_right(&a, &b, &inv, &GmresConfig::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.iterations <= 2, "{} iterations", rep.iterations);
    assert!(relres(&a, &rep.x, &b) <= 1e-12);
}

#[test]
fn exact_multilevel_preconditioner_converges_at_once() {
    let sys = fdm_poisson_2d(20, 20);
    let prec = psmilu_factor(&sys.a, sys.m, &Options::exact()).unwrap();
    let rep = gmres_right(&sys.a, &sys.b, &prec, &GmresConfig::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.iterations <= 3, "{} iterations", rep.iterations);
}

#[test]
fn preconditioning_reduces_iterations() {
    let sys = fdm_poisson_2d(30, 30);
    let cfg = GmresConfig {
        rtol: 1e-8,
        maxit: 5000,
        ..GmresConfig::default()
    };
    let plain = gmres_right(&sys.a, &sys.b, &Identity, &cfg).unwrap();
    let prec = psmilu_factor(&sys.a, sys.m, &Options::default()).unwrap();
    let pre = gmres_right(&sys.a, &sys.b, &prec, &cfg).unwrap();
    assert!(pre.converged);
    assert!(pre.iterations * 4 < plain.iterations, "{} vs {}", pre.iterations, plain.iterations);
}

#[test]
fn report_matches_recomputed_residual() {
    let a = random_test_matrix(80, 0.05, MatrixKind::Nonsymmetric, 9);
    let b = rhs(80, 2);
    for (restart, maxit) in [(5, 7), (10, 200), (30, 2000)] {
        let cfg = GmresConfig {
            restart,
            rtol: 1e-10,
            maxit,
        };
        let rep = gmres_right(&a, &b, &Identity, &cfg).unwrap();
        let r = relres(&a, &rep.x, &b);
        assert!((r - rep.final_relres).abs() <= 1e-12 + 1e-6 * r);
        assert_eq!(rep.converged, rep.final_relres <= cfg.rtol);
        assert!(rep.iterations <= maxit);
        assert_eq!(rep.residual_history.len(), rep.iterations);
    }
}

#[test]
fn zero_rhs_gives_zero_solution() {
    let sys = fdm_poisson_2d(5, 5);
    let b = vec![0.0; sys.a.n_rows()];
    let rep = gmres_right(&sys.a, &b, &Identity, &GmresConfig::default()).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 0);
    assert!(rep.x.iter().all(|&v| v == 0.0));
}

#[test]
fn rejects_bad_input() {
    let sys = fdm_poisson_2d(5, 5);
    assert!(gmres_right(&sys.a, &[1.0; 3], &Identity, &GmresConfig::default()).is_err());
    let cfg = GmresConfig {
        restart: 0,
        ..GmresConfig::default()
    };
    assert!(gmres_right(&sys.a, &sys.b, &Identity, &cfg).is_err());
}
