//! Gaussian states of N bosonic modes in shot-noise units.
//!
//! Quadratures are ordered x1, p1, x2, p2, ... with x = a + a†, so the
//! vacuum has unit variance in every quadrature and a coherent state |α⟩
//! has mean (2 Re α, 2 Im α).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// N-mode Gaussian state: mean vector of length 2N and 2N×2N covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    num_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Build from raw mean and covariance. The covariance is symmetrized;
    /// no physicality check is performed here (see [`GaussianState::symplectic_eigenvalues`]).
    pub fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n2 = mean.len();
        if n2 == 0 || n2 % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: n2,
            });
        }
        if cov.nrows() != n2 || cov.ncols() != n2 {
            return Err(Error::DimensionMismatch {
                expected: n2,
                got: cov.nrows(),
            });
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self {
            num_modes: n2 / 2,
            mean,
            cov,
        })
    }

    /// N-mode vacuum: zero mean, identity covariance.
    pub fn vacuum(num_modes: usize) -> Self {
        Self {
            num_modes,
            mean: DVector::zeros(2 * num_modes),
            cov: DMatrix::identity(2 * num_modes, 2 * num_modes),
        }
    }

    /// Coherent state |α⟩: mean (2 Re α, 2 Im α), identity covariance.
    pub fn coherent(alpha: Complex64) -> Self {
        let mut s = Self::vacuum(1);
        s.mean[0] = 2.0 * alpha.re;
        s.mean[1] = 2.0 * alpha.im;
        s
    }

    /// Squeezed vacuum with independent squeeze/antisqueeze levels in dB and a
    /// squeezing-axis angle. `squeeze_db > 0` means variance below shot noise:
    /// cov = R(angle) · diag(10^(−s/10), 10^(a/10)) · R(angle)ᵀ.
    ///
    /// Rejects variance products below 1 (unphysical); equality is a pure state.
    pub fn squeezed_vacuum(squeeze_db: f64, antisqueeze_db: f64, angle: f64) -> Result<Self> {
        let v_sq = 10f64.powf(-squeeze_db / 10.0);
        let v_anti = 10f64.powf(antisqueeze_db / 10.0);
        let product = v_sq * v_anti;
        if product < 1.0 - 1e-12 {
            return Err(Error::UnphysicalSqueezing {
                squeeze_db,
                antisqueeze_db,
                product,
            });
        }
        let (c, s) = (angle.cos(), angle.sin());
        let r = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![v_sq, v_anti]));
        let cov = &r * d * r.transpose();
        Self::from_parts(DVector::zeros(2), cov)
    }

    /// Tensor product: block-concatenated means, block-diagonal covariance,
    /// mode order preserved.
    pub fn tensor(states: &[GaussianState]) -> Self {
        let n: usize = states.iter().map(|s| s.num_modes).sum();
        let mut mean = DVector::zeros(2 * n);
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        let mut off = 0;
        for s in states {
            let k = 2 * s.num_modes;
            mean.rows_mut(off, k).copy_from(&s.mean);
            cov.view_mut((off, off), (k, k)).copy_from(&s.cov);
            off += k;
        }
        Self {
            num_modes: n,
            mean,
            cov,
        }
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Marginal state of a subset of modes (in the order given).
    pub fn marginal(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            if m >= self.num_modes {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    num_modes: self.num_modes,
                });
            }
        }
        let rows: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let mean = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.mean[r]));
        let cov = DMatrix::from_fn(rows.len(), rows.len(), |i, j| self.cov[(rows[i], rows[j])]);
        Self::from_parts(mean, cov)
    }

    /// Symplectic eigenvalues of the covariance matrix, ascending. Computed as
    /// the paired singular values of V^{1/2} Ω V^{1/2}, which needs only real
    /// symmetric decompositions. Physical states have all values ≥ 1.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.cov)
    }

    /// True when every symplectic eigenvalue is ≥ 1 − tol.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues().iter().all(|&v| v >= 1.0 - tol)
    }
}

/// Standard symplectic form Ω for the interleaved ordering: blocks [[0,1],[-1,0]].
pub fn symplectic_form(num_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * num_modes, 2 * num_modes);
    for k in 0..num_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Symplectic eigenvalues of a covariance matrix, ascending.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows() / 2;
    // V^{1/2} via symmetric eigendecomposition; clamp tiny negatives.
    let eig = cov.clone().symmetric_eigen();
    let sqrt_vals = DVector::from_iterator(2 * n, eig.eigenvalues.iter().map(|&v| v.max(0.0).sqrt()));
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let a = &root * symplectic_form(n) * &root; // real antisymmetric
    // Singular values of A come in pairs (ν, ν); eigenvalues of AᵀA are ν² doubled.
    let mut sq: Vec<f64> = (a.transpose() * &a)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|&v| v.max(0.0).sqrt())
        .collect();
    sq.sort_by(|x, y| x.partial_cmp(y).unwrap());
    (0..n).map(|k| 0.5 * (sq[2 * k] + sq[2 * k + 1])).collect()
}

/// Weighted collection of Gaussian states. Weights are non-negative and sum to
/// the mixture's total probability mass (1 for a normalized state, the success
/// probability for a post-selected one).
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    branches: Vec<(f64, GaussianState)>,
}

impl GaussianMixture {
    pub fn new(branches: Vec<(f64, GaussianState)>) -> Self {
        debug_assert!(branches.iter().all(|(w, _)| *w >= 0.0));
        Self { branches }
    }

    /// Single-branch mixture with unit mass.
    pub fn pure(state: GaussianState) -> Self {
        Self {
            branches: vec![(1.0, state)],
        }
    }

    pub fn branches(&self) -> &[(f64, GaussianState)] {
        &self.branches
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.branches.iter().map(|(w, _)| w).sum()
    }

    /// Rescale weights to unit total mass.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.total_mass();
        if mass <= 0.0 {
            return Err(Error::EmptyMixture);
        }
        Ok(Self {
            branches: self
                .branches
                .iter()
                .map(|(w, s)| (w / mass, s.clone()))
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn coherent_zero_is_vacuum() {
        let s = GaussianState::coherent(Complex64::new(0.0, 0.0));
        assert_eq!(s, GaussianState::vacuum(1));
    }

    #[test]
    fn coherent_three_plus_three_i() {
        let s = GaussianState::coherent(Complex64::new(3.0, 3.0));
        assert_relative_eq!(s.mean()[0], 6.0);
        assert_relative_eq!(s.mean()[1], 6.0);
        assert_eq!(s.cov(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn coherent_pure_imaginary() {
        let s = GaussianState::coherent(Complex64::new(0.0, 1.0));
        assert_relative_eq!(s.mean()[0], 0.0);
        assert_relative_eq!(s.mean()[1], 2.0);
    }

    #[test]
    fn squeezed_zero_db_is_vacuum() {
        let s = GaussianState::squeezed_vacuum(0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(s.cov()[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(s.cov()[(1, 1)], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn squeezed_three_db_pure() {
        let s = GaussianState::squeezed_vacuum(3.0, 3.0, 0.0).unwrap();
        assert_relative_eq!(s.cov()[(0, 0)], 10f64.powf(-0.3), epsilon = 1e-12);
        assert_relative_eq!(s.cov()[(1, 1)], 10f64.powf(0.3), epsilon = 1e-12);
        let nu = s.symplectic_eigenvalues()[0];
        assert_relative_eq!(nu, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn squeezed_impure_symplectic_eigenvalue() {
        // 3.4 dB squeeze with 5 dB antisqueeze models the lab squeezers.
        let s = GaussianState::squeezed_vacuum(3.4, 5.0, 0.0).unwrap();
        let nu = s.symplectic_eigenvalues()[0];
        let expect = (10f64.powf(-0.34) * 10f64.powf(0.5)).sqrt();
        assert_relative_eq!(nu, expect, epsilon = 1e-10);
        assert_relative_eq!(nu, 1.202, epsilon = 1e-3);
        assert!(s.is_physical(1e-9));
    }

    #[test]
    fn squeezed_rejects_unphysical() {
        let err = GaussianState::squeezed_vacuum(3.0, 2.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::UnphysicalSqueezing { .. }));
    }

    #[test]
    fn tensor_blocks() {
        let a = GaussianState::coherent(Complex64::new(1.0, -0.5));
        let b = GaussianState::vacuum(1);
        let t = GaussianState::tensor(&[a, b]);
        assert_eq!(t.num_modes(), 2);
        assert_relative_eq!(t.mean()[0], 2.0);
        assert_relative_eq!(t.mean()[1], -1.0);
        assert_relative_eq!(t.mean()[2], 0.0);

        let tri = GaussianState::tensor(&[
            GaussianState::vacuum(1),
            GaussianState::squeezed_vacuum(3.0, 3.0, 0.0).unwrap(),
            GaussianState::vacuum(1),
        ]);
        assert_eq!(tri.num_modes(), 3);
        assert_eq!(tri.cov().nrows(), 6);
        assert_relative_eq!(tri.cov()[(2, 2)], 10f64.powf(-0.3), epsilon = 1e-12);
        assert_relative_eq!(tri.cov()[(0, 2)], 0.0);
    }

    #[test]
    fn vacuum_symplectic_eigenvalues_are_one() {
        let s = GaussianState::vacuum(3);
        for nu in s.symplectic_eigenvalues() {
            assert_relative_eq!(nu, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mixture_mass() {
        let m = GaussianMixture::new(vec![
            (0.75, GaussianState::coherent(Complex64::new(3.0, 3.0))),
            (0.25, GaussianState::vacuum(1)),
        ]);
        assert_relative_eq!(m.total_mass(), 1.0);
        let n = m.normalized().unwrap();
        assert_relative_eq!(n.total_mass(), 1.0);
    }
}
