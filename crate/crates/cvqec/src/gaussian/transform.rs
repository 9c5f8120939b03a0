//! Symplectic transforms: linear optics plus phase-space displacements.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::state::{symplectic_form, GaussianState};

/// Affine phase-space map q → S q + d with S symplectic (S Ω Sᵀ = Ω).
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
    displacement: DVector<f64>,
}

impl SymplecticTransform {
    pub fn new(matrix: DMatrix<f64>, displacement: DVector<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != displacement.len() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: displacement.len(),
            });
        }
        Ok(Self {
            matrix,
            displacement,
        })
    }

    pub fn identity(num_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * num_modes, 2 * num_modes),
            displacement: DVector::zeros(2 * num_modes),
        }
    }

    /// Pure displacement: S = I, d as given (length 2N, interleaved x,p).
    pub fn displacement(d: DVector<f64>) -> Self {
        let n = d.len();
        Self {
            matrix: DMatrix::identity(n, n),
            displacement: d,
        }
    }

    /// Two-mode beam splitter on modes (i, j) with the annihilation-operator
    /// convention
    ///
    ///   a_i → √T a_i + √(1−T) e^{iφ} a_j
    ///   a_j → −√(1−T) e^{−iφ} a_i + √T a_j
    ///
    /// so transmittance 1 is the identity and a balanced splitter (T = 1/2,
    /// φ = 0) sends classical amplitudes (α, β) → ((α+β)/√2, (β−α)/√2).
    /// The inverse of `beam_splitter(.., T, φ)` is `beam_splitter(.., T, φ+π)`.
    pub fn beam_splitter(
        num_modes: usize,
        i: usize,
        j: usize,
        transmittance: f64,
        phase: f64,
    ) -> Result<Self> {
        if i == j {
            return Err(Error::SameMode(i));
        }
        for &m in &[i, j] {
            if m >= num_modes {
                return Err(Error::ModeOutOfRange {
                    mode: m,
                    num_modes,
                });
            }
        }
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(Error::ParameterRange {
                name: "transmittance",
                value: transmittance,
                min: 0.0,
                max: 1.0,
            });
        }
        let t = transmittance.sqrt();
        let r = (1.0 - transmittance).sqrt();
        let mut s = DMatrix::identity(2 * num_modes, 2 * num_modes);
        let mut put = |a: usize, b: usize, u: Complex64| {
            s[(2 * a, 2 * b)] = u.re;
            s[(2 * a, 2 * b + 1)] = -u.im;
            s[(2 * a + 1, 2 * b)] = u.im;
            s[(2 * a + 1, 2 * b + 1)] = u.re;
        };
        let e = Complex64::from_polar(1.0, phase);
        put(i, i, Complex64::new(t, 0.0));
        put(i, j, r * e);
        put(j, i, -r * e.conj());
        put(j, j, Complex64::new(t, 0.0));
        Ok(Self {
            matrix: s,
            displacement: DVector::zeros(2 * num_modes),
        })
    }

    /// Balanced beam splitter, phase 0.
    pub fn balanced_beam_splitter(num_modes: usize, i: usize, j: usize) -> Result<Self> {
        Self::beam_splitter(num_modes, i, j, 0.5, 0.0)
    }

    /// Swap two modes.
    pub fn swap(num_modes: usize, i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::SameMode(i));
        }
        let mut s = DMatrix::identity(2 * num_modes, 2 * num_modes);
        for k in 0..2 {
            s[(2 * i + k, 2 * i + k)] = 0.0;
            s[(2 * j + k, 2 * j + k)] = 0.0;
            s[(2 * i + k, 2 * j + k)] = 1.0;
            s[(2 * j + k, 2 * i + k)] = 1.0;
        }
        Ok(Self {
            matrix: s,
            displacement: DVector::zeros(2 * num_modes),
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn displacement_vector(&self) -> &DVector<f64> {
        &self.displacement
    }

    pub fn num_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// self ∘ other: apply `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.matrix.nrows() != other.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                got: other.matrix.nrows(),
            });
        }
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            displacement: &self.matrix * &other.displacement + &self.displacement,
        })
    }

    /// Inverse map. Uses S⁻¹ = Ω⁻¹ Sᵀ Ω, exact for symplectic S.
    pub fn inverse(&self) -> Self {
        let n = self.num_modes();
        let omega = symplectic_form(n);
        let s_inv = -&omega * self.matrix.transpose() * &omega;
        let d_inv = -(&s_inv * &self.displacement);
        Self {
            matrix: s_inv,
            displacement: d_inv,
        }
    }

    /// ‖SΩSᵀ − Ω‖_max, the symplectic-condition residual.
    pub fn symplectic_residual(&self) -> f64 {
        let omega = symplectic_form(self.num_modes());
        let res = &self.matrix * &omega * self.matrix.transpose() - &omega;
        res.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Apply to a state: mean → S·mean + d, cov → S·cov·Sᵀ.
    pub fn apply(&self, state: &GaussianState) -> Result<GaussianState> {
        if 2 * state.num_modes() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                got: 2 * state.num_modes(),
            });
        }
        let mean = &self.matrix * state.mean() + &self.displacement;
        let cov = &self.matrix * state.cov() * self.matrix.transpose();
        GaussianState::from_parts(mean, cov)
    }
}
