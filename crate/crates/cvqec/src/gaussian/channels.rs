//! Single-mode channels: full erasure and partial loss.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gaussian::state::GaussianState;

/// Trace out `mode` and re-tensor vacuum in its place: the mode's mean is
/// zeroed, its 2×2 covariance block becomes the identity and all
/// cross-covariances with other modes vanish.
pub fn replace_with_vacuum(state: &GaussianState, mode: usize) -> Result<GaussianState> {
    if mode >= state.num_modes() {
        return Err(Error::ModeOutOfRange {
            mode,
            num_modes: state.num_modes(),
        });
    }
    let mut mean = state.mean().clone();
    let mut cov = state.cov().clone();
    let n2 = mean.len();
    for r in [2 * mode, 2 * mode + 1] {
        mean[r] = 0.0;
        for k in 0..n2 {
            cov[(r, k)] = 0.0;
            cov[(k, r)] = 0.0;
        }
        cov[(r, r)] = 1.0;
    }
    GaussianState::from_parts(mean, cov)
}

/// Attenuation channel with transmission η on one mode: mean block ×√η,
/// covariance block → ηV + (1−η)I, cross blocks ×√η.
pub fn loss_channel(state: &GaussianState, mode: usize, eta: f64) -> Result<GaussianState> {
    if mode >= state.num_modes() {
        return Err(Error::ModeOutOfRange {
            mode,
            num_modes: state.num_modes(),
        });
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::ParameterRange {
            name: "eta",
            value: eta,
            min: 0.0,
            max: 1.0,
        });
    }
    let n2 = 2 * state.num_modes();
    let mut g = DMatrix::identity(n2, n2);
    let root = eta.sqrt();
    g[(2 * mode, 2 * mode)] = root;
    g[(2 * mode + 1, 2 * mode + 1)] = root;
    let mean = &g * state.mean();
    let mut cov = &g * state.cov() * g.transpose();
    cov[(2 * mode, 2 * mode)] += 1.0 - eta;
    cov[(2 * mode + 1, 2 * mode + 1)] += 1.0 - eta;
    GaussianState::from_parts(mean, cov)
}
