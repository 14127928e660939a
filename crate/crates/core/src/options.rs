//! Control parameters for the multilevel factorization.

use crate::error::{Error, Result};
use crate::preprocess::PreprocessConfig;

/// How the H-version Schur complement correction is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HVariant {
    /// `C - 2 L_E D U_F + G_E B G_F` with `G_E = L_E L_B^{-1}`, `G_F = U_B^{-1} U_F`.
    #[default]
    Modified,
    /// `S_C + T_E T_F` with `T_E = L_E L_B^{-1} (B - D_B)` and `T_F = U_B^{-1} U_F`.
    Algorithm1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    /// Drop tolerance for `L`.
    pub tau_l: f64,
    /// Drop tolerance for `U`.
    pub tau_u: f64,
    /// Largest accepted `|1/d_k|`.
    pub tau_d: f64,
    /// Largest accepted inverse-norm estimate.
    pub tau_kappa: f64,
    /// Fill factor for columns of `L`; `f64::INFINITY` disables the cap.
    pub alpha_l: f64,
    /// Fill factor for rows of `U`; `f64::INFINITY` disables the cap.
    pub alpha_u: f64,
    /// Density at which the Schur complement is treated as dense.
    pub rho: f64,
    /// Size factor for the dense switch, compared against `c_d * N^(1/3)`.
    pub c_d: f64,
    /// Schur complements smaller than this use the H-version.
    pub c_h: f64,
    /// Reference size `N`; `None` means the size of the input matrix.
    pub n_ref: Option<usize>,
    pub h_variant: HVariant,
    /// Copy the `U` row from the `L` column on symmetric leading blocks.
    /// Turning this off runs the general update on the same input.
    pub exploit_symmetry: bool,
    pub preprocess: PreprocessConfig,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tau_l: 0.01,
            tau_u: 0.01,
            tau_d: 10.0,
            tau_kappa: 100.0,
            alpha_l: 4.0,
            alpha_u: 4.0,
            rho: 0.25,
            c_d: 1.0,
            c_h: 10.0,
            n_ref: None,
            h_variant: HVariant::Modified,
            exploit_symmetry: true,
            preprocess: PreprocessConfig::default(),
        }
    }
}

impl Options {
    /// Options with dropping, fill caps and pivot thresholds all disabled.
    pub fn exact() -> Self {
        Options {
            tau_l: 0.0,
            tau_u: 0.0,
            tau_d: f64::INFINITY,
            tau_kappa: f64::INFINITY,
            alpha_l: f64::INFINITY,
            alpha_u: f64::INFINITY,
            ..Options::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("tau_l", self.tau_l),
            ("tau_u", self.tau_u),
            ("tau_d", self.tau_d),
            ("tau_kappa", self.tau_kappa),
            ("c_d", self.c_d),
            ("c_h", self.c_h),
        ];
        for (name, v) in nonneg {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidOption(format!("{name} must be nonnegative, got {v}")));
            }
        }
        for (name, v) in [("alpha_l", self.alpha_l), ("alpha_u", self.alpha_u)] {
            if v.is_nan() || v < 1.0 {
                return Err(Error::InvalidOption(format!("{name} must be at least 1, got {v}")));
            }
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidOption(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let o = Options::default();
        assert_eq!((o.tau_l, o.tau_u, o.tau_d, o.tau_kappa), (0.01, 0.01, 10.0, 100.0));
        assert_eq!((o.alpha_l, o.alpha_u, o.rho, o.c_d, o.c_h), (4.0, 4.0, 0.25, 1.0, 10.0));
        assert!(o.n_ref.is_none());
        o.validate().unwrap();
        Options::exact().validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let o = Options { alpha_l: 0.5, ..Options::default() };
        assert!(o.validate().is_err());
        let o = Options { rho: 0.0, ..Options::default() };
        assert!(o.validate().is_err());
        let o = Options { tau_d: -1.0, ..Options::default() };
        assert!(o.validate().is_err());
    }
}
