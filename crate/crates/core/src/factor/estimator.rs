/// Incremental estimate of the infinity norms of `L_k^{-1}` and `U_k^{-T}`.
///
/// At step `k` the solution `x = L_k^{-1} c` is extended by one entry,
/// `x_k = c_k - sum_{j<k} l_kj x_j`, with the sign `c_k = +-1` chosen to make
/// `|x_k|` as large as possible. `|x_k|` never exceeds the row sum of
/// `|L_k^{-1}|`, so it is a lower bound of the exact norm.
#[derive(Debug, Clone)]
pub struct CondEstimator {
    x_l: Vec<f64>,
    x_u: Vec<f64>,
    c_l: Vec<f64>,
    c_u: Vec<f64>,
    pub flops: u64,
}

/// Greedy extension of `x` by one entry. Returns `(x_k, c_k)`.
fn extend(x: &[f64], entries: impl Iterator<Item = (usize, f64)>, flops: &mut u64) -> (f64, f64) {
    let mut s = 0.0;
    for (j, v) in entries {
        s += v * x[j];
        *flops += 2;
    }
    let c = if s > 0.0 { -1.0 } else { 1.0 };
    (c - s, c)
}

impl CondEstimator {
    pub fn new(n: usize) -> Self {
        CondEstimator {
            x_l: vec![0.0; n],
            x_u: vec![0.0; n],
            c_l: vec![0.0; n],
            c_u: vec![0.0; n],
            flops: 0,
        }
    }

    /// Computes the estimates for step `k` from row `k` of `L` and column `k`
    /// of `U` (entries with index below `k`). With `col_u == None` the
    /// `U`-side reuses the `L`-side result, as for a symmetric block.
    /// Entry `k` is overwritten on every call, so a rejected step leaves no trace.
    pub fn step(
        &mut self,
        k: usize,
        row_l: impl Iterator<Item = (usize, f64)>,
        col_u: Option<Box<dyn Iterator<Item = (usize, f64)> + '_>>,
    ) -> (f64, f64) {
        let (xl, cl) = extend(&self.x_l, row_l, &mut self.flops);
        self.x_l[k] = xl;
        self.c_l[k] = cl;
        let (xu, cu) = match col_u {
            Some(it) => extend(&self.x_u, it, &mut self.flops),
            None => (xl, cl),
        };
        self.x_u[k] = xu;
        self.c_u[k] = cu;
        (xl.abs(), xu.abs())
    }

    pub fn x_l(&self) -> &[f64] {
        &self.x_l
    }

    pub fn x_u(&self) -> &[f64] {
        &self.x_u
    }

    pub fn signs_l(&self) -> &[f64] {
        &self.c_l
    }

    pub fn signs_u(&self) -> &[f64] {
        &self.c_u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_prefix() {
        let mut est = CondEstimator::new(4);
        for k in 0..4 {
            let (kl, ku) = est.step(k, std::iter::empty(), Some(Box::new(std::iter::empty())));
            assert_eq!((kl, ku), (1.0, 1.0));
        }
    }

    #[test]
    fn unit_bidiagonal() {
        let mut est = CondEstimator::new(4);
        let mut seq = Vec::new();
        for k in 0..4 {
            let row: Vec<(usize, f64)> = if k > 0 { vec![(k - 1, -1.0)] } else { vec![] };
            seq.push(est.step(k, row.into_iter(), None).0);
        }
        assert_eq!(seq, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(est.signs_l().iter().all(|c| c.abs() == 1.0));
    }
}
