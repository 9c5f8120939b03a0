//! Homodyne conditioning and closed-form coherent-state overlaps.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gaussian::state::GaussianState;

/// Variance below which the measured quadrature is treated as degenerate and
/// the Schur complement falls back to a pseudoinverse.
pub const DEGENERATE_VAR: f64 = 1e-12;

/// Post-measurement map for the remaining modes: mean is affine in the
/// outcome, covariance is outcome-independent.
///
/// mean(outcome) = base_mean + gain · (outcome − outcome_mean)
#[derive(Debug, Clone)]
pub struct AffineConditional {
    pub base_mean: DVector<f64>,
    /// One column per measured outcome.
    pub gain: DMatrix<f64>,
    pub cov: DMatrix<f64>,
    /// Set when a measured variance fell below [`DEGENERATE_VAR`].
    pub degenerate: bool,
}

impl AffineConditional {
    /// Conditional state at a specific outcome vector.
    pub fn at(&self, outcome: &DVector<f64>, outcome_mean: &DVector<f64>) -> Result<GaussianState> {
        let mean = &self.base_mean + &self.gain * (outcome - outcome_mean);
        GaussianState::from_parts(mean, self.cov.clone())
    }
}

/// Result of a single homodyne measurement: the 1-D Gaussian outcome
/// distribution and the conditional map for the remaining modes.
#[derive(Debug, Clone)]
pub struct HomodyneOutcome {
    pub outcome_mean: f64,
    pub outcome_var: f64,
    pub conditional: AffineConditional,
}

/// Measure the quadrature x·cosθ + p·sinθ of `mode` with an ideal detector.
/// The measured mode is removed from the state.
pub fn homodyne_condition(
    state: &GaussianState,
    mode: usize,
    angle: f64,
) -> Result<HomodyneOutcome> {
    let n = state.num_modes();
    if mode >= n {
        return Err(Error::ModeOutOfRange {
            mode,
            num_modes: n,
        });
    }
    if n < 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: n });
    }
    let (c, s) = (angle.cos(), angle.sin());
    let mut row = DVector::zeros(2 * n);
    row[2 * mode] = c;
    row[2 * mode + 1] = s;

    let outcome_mean = row.dot(state.mean());
    let outcome_var = (state.cov() * &row).dot(&row);

    let rest: Vec<usize> = (0..2 * n)
        .filter(|r| r / 2 != mode)
        .collect();
    let cross = DVector::from_iterator(
        rest.len(),
        rest.iter().map(|&r| {
            (0..2 * n)
                .map(|k| state.cov()[(r, k)] * row[k])
                .sum::<f64>()
        }),
    );
    let degenerate = outcome_var < DEGENERATE_VAR;
    let inv_var = if degenerate { 0.0 } else { 1.0 / outcome_var };

    let base_mean = DVector::from_iterator(rest.len(), rest.iter().map(|&r| state.mean()[r]));
    let gain = &cross * inv_var;
    let v_rest = DMatrix::from_fn(rest.len(), rest.len(), |i, j| {
        state.cov()[(rest[i], rest[j])]
    });
    let cov = &v_rest - &gain * outcome_var * gain.transpose();

    Ok(HomodyneOutcome {
        outcome_mean,
        outcome_var,
        conditional: AffineConditional {
            base_mean,
            gain: DMatrix::from_column_slice(rest.len(), 1, gain.as_slice()),
            cov,
            degenerate,
        },
    })
}

/// ⟨α|ρ|α⟩ for a 1-mode Gaussian ρ, in closed form:
/// 2/√det(V+I) · exp(−δᵀ(V+I)⁻¹δ/2) with δ = mean − (2 Re α, 2 Im α).
/// Equals the Uhlmann fidelity with |α⟩ whenever ρ is involved with a pure state.
pub fn coherent_overlap(state: &GaussianState, alpha: Complex64) -> Result<f64> {
    if state.num_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: state.num_modes(),
        });
    }
    let v = state.cov();
    let m = [
        v[(0, 0)] + 1.0,
        v[(0, 1)],
        v[(1, 1)] + 1.0,
    ];
    let det = m[0] * m[2] - m[1] * m[1];
    let dx = state.mean()[0] - 2.0 * alpha.re;
    let dp = state.mean()[1] - 2.0 * alpha.im;
    // (V+I)⁻¹ in closed form for 2×2.
    let quad = (m[2] * dx * dx - 2.0 * m[1] * dx * dp + m[0] * dp * dp) / det;
    Ok(2.0 / det.sqrt() * (-0.5 * quad).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::SymplecticTransform;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_PI_2;

    fn epr(db: f64) -> GaussianState {
        let sq_x = GaussianState::squeezed_vacuum(db, db, 0.0).unwrap();
        let sq_p = GaussianState::squeezed_vacuum(db, db, FRAC_PI_2).unwrap();
        let bs = SymplecticTransform::balanced_beam_splitter(2, 0, 1).unwrap();
        bs.apply(&GaussianState::tensor(&[sq_x, sq_p])).unwrap()
    }

    #[test]
    fn product_state_has_zero_gain() {
        let s = GaussianState::tensor(&[
            GaussianState::coherent(Complex64::new(1.0, 1.0)),
            GaussianState::vacuum(1),
        ]);
        let out = homodyne_condition(&s, 0, 0.0).unwrap();
        assert_relative_eq!(out.outcome_mean, 2.0);
        assert_relative_eq!(out.outcome_var, 1.0);
        assert_relative_eq!(out.conditional.gain[(0, 0)], 0.0);
        assert_relative_eq!(out.conditional.gain[(1, 0)], 0.0);
        assert_eq!(out.conditional.cov, DMatrix::identity(2, 2));
    }

    #[test]
    fn epr_conditional_variance_matches_schur_complement() {
        let state = epr(3.0);
        let out = homodyne_condition(&state, 0, 0.0).unwrap();
        // Direct Schur complement of the 4×4 covariance: V22 − V21 V11⁻¹ V12
        // for the measured row x1.
        let v = state.cov();
        let var_x1 = v[(0, 0)];
        let cond_xx = v[(2, 2)] - v[(2, 0)] * v[(0, 2)] / var_x1;
        assert_relative_eq!(out.conditional.cov[(0, 0)], cond_xx, epsilon = 1e-12);
        // Conditioning on the correlated quadrature sharpens it below shot noise.
        assert!(cond_xx < 1.0);
    }

    #[test]
    fn law_of_total_covariance() {
        let state = epr(2.5);
        let out = homodyne_condition(&state, 0, 0.7).unwrap();
        let marg = state.marginal(&[1]).unwrap();
        // E[cond_mean] over outcomes is the unconditional mean,
        // cov + gain·var·gainᵀ restores the marginal covariance.
        assert_relative_eq!(
            (&out.conditional.base_mean - marg.mean()).norm(),
            0.0,
            epsilon = 1e-12
        );
        let restored = &out.conditional.cov
            + &out.conditional.gain * out.outcome_var * out.conditional.gain.transpose();
        assert_relative_eq!((&restored - marg.cov()).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn monte_carlo_matches_analytic_marginal() {
        use rand::{Rng, SeedableRng};
        let state = epr(2.0);
        let out = homodyne_condition(&state, 0, 0.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let std = out.outcome_var.sqrt();
        let mut sum = DVector::zeros(2);
        let mut sum_sq = DMatrix::zeros(2, 2);
        for _ in 0..n {
            let u1: f64 = rng.gen::<f64>().max(1e-12);
            let u2: f64 = rng.gen();
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            let o = out.outcome_mean + std * z;
            let mean = &out.conditional.base_mean
                + &out.conditional.gain * DVector::from_vec(vec![o - out.outcome_mean]);
            sum += &mean;
            sum_sq += &mean * mean.transpose();
        }
        let emp_mean = &sum / n as f64;
        let emp_cov_of_means = &sum_sq / n as f64 - &emp_mean * emp_mean.transpose();
        let total = &emp_cov_of_means + &out.conditional.cov;
        let marg = state.marginal(&[1]).unwrap();
        let se = 3.0 * (2.0 / (n as f64).sqrt());
        assert!((emp_mean - marg.mean()).norm() < se, "mean off");
        assert!((total - marg.cov()).norm() < se, "cov off");
    }

    #[test]
    fn overlap_with_itself_is_one() {
        let a = Complex64::new(1.3, -0.4);
        let f = coherent_overlap(&GaussianState::coherent(a), a).unwrap();
        assert_relative_eq!(f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn vacuum_vs_coherent_overlap() {
        let a = Complex64::new(1.1, 0.7);
        let f = coherent_overlap(&GaussianState::vacuum(1), a).unwrap();
        assert_relative_eq!(f, (-a.norm_sqr()).exp(), epsilon = 1e-12);
    }

    #[test]
    fn degenerate_variance_flagged() {
        // 60 dB squeezing leaves ~1e-6 variance, still finite; push further by
        // conditioning a nearly deterministic quadrature.
        let sq = GaussianState::squeezed_vacuum(130.0, 130.0, 0.0).unwrap();
        let s = GaussianState::tensor(&[sq, GaussianState::vacuum(1)]);
        let out = homodyne_condition(&s, 0, 0.0).unwrap();
        assert!(out.conditional.degenerate);
        assert!(out.conditional.cov.iter().all(|v| v.is_finite()));
    }
}
