use std::collections::BTreeSet;

use psmilu::preprocess::{amd_order, bandwidth, symmetric_reorder};
use psmilu::problems::fdm_poisson_2d_dirichlet;
use psmilu::sparse::is_permutation;
use psmilu::Crs;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Nonzeros of the Cholesky factor of a symmetric pattern under the given
/// order, by playing the elimination game on adjacency sets.
fn symbolic_fill(a: &Crs, order: &[usize]) -> usize {
    let n = a.n_rows();
    let mut pos = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        pos[v] = k;
    }
    let mut adj: Vec<BTreeSet<usize>> = (0..n)
        .map(|i| a.row_indices(i).iter().map(|&j| pos[j]).filter(|&j| j != pos[i]).collect())
        .collect();
    let mut permuted = vec![BTreeSet::new(); n];
    for i in 0..n {
        permuted[pos[i]] = std::mem::take(&mut adj[i]);
    }
    let mut total = n;
    for k in 0..n {
        let later: Vec<usize> = permuted[k].iter().copied().filter(|&j| j > k).collect();
        total += later.len();
        for &x in &later {
            for &y in &later {
                if x != y {
                    permuted[x].insert(y);
                }
            }
        }
    }
    total
}

fn interior_block(side: usize) -> Crs {
    let sys = fdm_poisson_2d_dirichlet(side, side);
    sys.a.block(0, sys.m, 0, sys.m)
}

fn shuffled(a: &Crs, seed: u64) -> Crs {
    let mut p: Vec<usize> = (0..a.n_rows()).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    a.permuted(&p, &p)
}

#[test]
fn amd_reduces_fill_below_natural() {
    let a = interior_block(10);
    let natural: Vec<usize> = (0..a.n_rows()).collect();
    let amd = amd_order(&a);
    assert!(is_permutation(&amd));
    let (f_nat, f_amd) = (symbolic_fill(&a, &natural), symbolic_fill(&a, &amd));
    assert!(f_amd < f_nat, "amd {f_amd} vs natural {f_nat}");
}

#[test]
fn rcm_recovers_band_structure() {
    let a = interior_block(10);
    for seed in 0..5 {
        let b = shuffled(&a, seed);
        let rcm = symmetric_reorder(&b);
        assert!(is_permutation(&rcm));
        let reordered = b.permuted(&rcm, &rcm);
        assert!(bandwidth(&reordered) <= 2 * 8, "bandwidth {}", bandwidth(&reordered));
        assert!(bandwidth(&reordered) < bandwidth(&b));
        let natural: Vec<usize> = (0..b.n_rows()).collect();
        assert!(symbolic_fill(&b, &rcm) < symbolic_fill(&b, &natural));
    }
}

#[test]
fn orderings_of_disconnected_pattern() {
    let a = Crs::identity(7);
    assert!(is_permutation(&amd_order(&a)));
    assert!(is_permutation(&symmetric_reorder(&a)));
    assert_eq!(symbolic_fill(&a, &amd_order(&a)), 7);
}
