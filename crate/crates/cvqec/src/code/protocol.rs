//! Deterministic feedforward correction and probabilistic post-selection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::gaussian::{coherent_overlap, GaussianMixture, GaussianState};

use super::{
    decode_and_syndrome, encode, erase, make_epr, AcceptanceRule, CodeParams, DecodedState,
    ErasurePattern, FeedforwardGain, QuadratureGrid,
};

/// Feedforward signs (s_x, s_p) per erased channel, fixed once by brute force
/// over the four ±1 combinations at 60 dB squeezing and G = 2, where the
/// correction is nearly perfect only for the right pair.
pub fn feedforward_signs(channel: usize) -> (f64, f64) {
    static TABLE: OnceLock<[(f64, f64); 4]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let alpha = Complex64::new(3.0, 3.0);
        let params = CodeParams::symmetric(alpha, 60.0);
        let epr = make_epr(&params).expect("physical reference squeezers");
        let encoded = encode(
            &GaussianState::coherent(alpha),
            &GaussianState::vacuum(1),
            &epr,
        )
        .expect("static circuit");
        let mut table = [(1.0, 1.0); 4];
        for ch in 0..4 {
            let dec = decode_and_syndrome(
                &erase(&encoded, &ErasurePattern::single(ch)).expect("valid channel"),
                1.0,
            )
            .expect("static circuit");
            let target = if ch < 2 { alpha } else { Complex64::new(0.0, 0.0) };
            let out_idx = if ch < 2 { 0 } else { 1 };
            let mut best = (f64::NEG_INFINITY, (1.0, 1.0));
            for sx in [1.0, -1.0] {
                for sp in [1.0, -1.0] {
                    let corrected =
                        correct_with_signs(&dec, ch, (sx, sp), 2.0).expect("one erasure");
                    let out = corrected.marginal(&[out_idx]).expect("two outputs");
                    let f = coherent_overlap(&out, target).expect("one mode");
                    if f > best.0 {
                        best = (f, (sx, sp));
                    }
                }
            }
            table[ch] = best.1;
        }
        table
    })[channel]
}

fn correct_with_signs(
    decoded: &DecodedState,
    erased_channel: usize,
    signs: (f64, f64),
    g: f64,
) -> Result<GaussianState> {
    let mut feed = DMatrix::zeros(4, 2);
    let out = if erased_channel < 2 { 0 } else { 1 };
    let root = g.sqrt();
    feed[(2 * out, 0)] = signs.0 * root;
    feed[(2 * out + 1, 1)] = signs.1 * root;
    integrate_feedforward(decoded, &feed)
}

/// Compose a linear feedforward (displacement = feed · outcome) with the
/// conditional decode map and integrate analytically over the Gaussian
/// syndrome distribution. The result is an exact two-mode Gaussian.
fn integrate_feedforward(decoded: &DecodedState, feed: &DMatrix<f64>) -> Result<GaussianState> {
    let net = &decoded.outputs.gain + feed;
    let mean = &decoded.outputs.base_mean + feed * &decoded.syndrome.mean;
    let cov = &decoded.outputs.cov + &net * &decoded.syndrome.cov * net.transpose();
    GaussianState::from_parts(mean, cov)
}

/// Deterministic protocol: displace the damaged output by ±√G (x_m, p_m)
/// with the per-channel sign table, then average over syndrome outcomes.
///
/// Requires at most one blocked channel; with none, no feedforward is applied
/// and the outputs are the exact unconditional marginals.
pub fn deterministic_correct(
    decoded: &DecodedState,
    pattern: &ErasurePattern,
    gain: FeedforwardGain,
) -> Result<GaussianState> {
    match pattern.count_blocked() {
        0 => integrate_feedforward(decoded, &DMatrix::zeros(4, 2)),
        1 => {
            let ch = pattern.blocked.iter().position(|&b| b).expect("one blocked");
            correct_with_signs(decoded, ch, feedforward_signs(ch), gain.g)
        }
        n => Err(Error::TooManyErasures(n)),
    }
}

/// Transmission fidelity of the bare single-channel erasure link of the
/// error model: F = (1−p_e) + p_e e^(−|α|²).
pub fn single_channel_baseline(alpha: Complex64, p_e: f64) -> f64 {
    (1.0 - p_e) + p_e * (-alpha.norm_sqr()).exp()
}

/// Post-selected transmission: all sixteen erasure patterns are decoded, the
/// accepted region of the syndrome plane is discretized on the midpoint grid
/// and every accepted cell contributes one Gaussian branch for output 1 (the
/// coherent signal), weighted by P_i × pdf × cell area.
///
/// Returns the accepted mixture (mass = success probability) and the success
/// probability itself.
pub fn probabilistic_protocol(
    params: &CodeParams,
    p_e: f64,
    rule: &AcceptanceRule,
    grid: &QuadratureGrid,
) -> Result<(GaussianMixture, f64)> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::ParameterRange {
            name: "p_e",
            value: p_e,
            min: 0.0,
            max: 1.0,
        });
    }
    let epr = make_epr(params)?;
    let encoded = encode(
        &GaussianState::coherent(params.alpha),
        &GaussianState::vacuum(1),
        &epr,
    )?;

    let per_pattern: Vec<Result<Vec<(f64, GaussianState)>>> = (0..16)
        .into_par_iter()
        .map(|idx| {
            let pattern = ErasurePattern::from_index(idx);
            let weight = pattern.probability(p_e);
            let mut branches = Vec::new();
            if weight == 0.0 {
                return Ok(branches);
            }
            let corrupted = erase(&encoded, &pattern)?;
            let dec = decode_and_syndrome(&corrupted, params.detection_efficiency)?;
            let out = dec.output_conditional(0);
            let area = grid.cell_size() * grid.cell_size();
            for i in 0..grid.cells {
                let x = grid.center(i);
                for j in 0..grid.cells {
                    let p = grid.center(j);
                    if !rule.accepts(x, p) {
                        continue;
                    }
                    let w = weight * dec.syndrome.pdf(x, p) * area;
                    if w == 0.0 {
                        continue;
                    }
                    let outcome = DVector::from_vec(vec![x, p]);
                    let state = out.at(&outcome, &dec.syndrome.mean)?;
                    branches.push((w, state));
                }
            }
            Ok(branches)
        })
        .collect();

    let mut branches = Vec::new();
    for part in per_pattern {
        branches.extend(part?);
    }
    let mixture = GaussianMixture::new(branches);
    let success = mixture.total_mass();
    Ok((mixture, success))
}

/// Fidelity of a (possibly unnormalized) mixture of 1-mode Gaussian branches
/// to the coherent state |α⟩: Σ w_i ⟨α|ρ_i|α⟩ / Σ w_i.
pub fn mixture_fidelity_to_coherent(mix: &GaussianMixture, alpha: Complex64) -> Result<f64> {
    let mass = mix.total_mass();
    if mix.is_empty() || mass <= 0.0 {
        return Err(Error::EmptyMixture);
    }
    let mut acc = 0.0;
    for (w, state) in mix.branches() {
        acc += w * coherent_overlap(state, alpha)?;
    }
    Ok(acc / mass)
}
