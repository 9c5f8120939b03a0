//! Simulated homodyne data acquisition and maximum-likelihood density-matrix
//! reconstruction, mirroring the experimental analysis chain: the local
//! oscillator phase sweeps linearly over [0, 2π), samples are binned in
//! (phase, value) and the iteration ρ ← N[R(ρ) ρ R(ρ)] runs until the
//! log-likelihood stops improving.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockDensityMatrix;
use crate::gaussian::GaussianMixture;

/// One homodyne data point: local-oscillator phase and measured quadrature
/// value in SNU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub theta: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyConfig {
    /// Fock cutoff of the reconstruction.
    pub cutoff: usize,
    pub max_iters: usize,
    /// Stop when the mean log-likelihood gain per sample drops below this.
    pub tolerance: f64,
    pub phase_bins: usize,
    pub value_bins: usize,
    /// Samples with |value| beyond this are dropped from the likelihood.
    pub value_range: f64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            cutoff: 30,
            max_iters: 2000,
            tolerance: 1e-9,
            phase_bins: 64,
            value_bins: 200,
            value_range: 8.0,
        }
    }
}

impl TomographyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 2 {
            return Err(Error::ParameterRange {
                name: "cutoff",
                value: self.cutoff as f64,
                min: 2.0,
                max: f64::INFINITY,
            });
        }
        if self.tolerance <= 0.0 {
            return Err(Error::ParameterRange {
                name: "tolerance",
                value: self.tolerance,
                min: f64::MIN_POSITIVE,
                max: f64::INFINITY,
            });
        }
        Ok(())
    }
}

/// Draw `n` quadrature samples from a normalized 1-mode Gaussian mixture.
/// Phases sweep [0, 2π) on a uniform deterministic schedule; for each sample
/// the branch is picked by weight and the value drawn from that branch's
/// quadrature marginal at the current phase. Fully determined by the seed.
pub fn sample_homodyne(
    mix: &GaussianMixture,
    n: usize,
    seed: u64,
) -> Result<Vec<QuadratureSample>> {
    let mass = mix.total_mass();
    if mix.is_empty() || mass <= 0.0 {
        return Err(Error::EmptyMixture);
    }
    for (_, s) in mix.branches() {
        if s.num_modes() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: s.num_modes(),
            });
        }
    }
    let mut cumulative = Vec::with_capacity(mix.len());
    let mut acc = 0.0;
    for (w, _) in mix.branches() {
        acc += w;
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let theta = std::f64::consts::TAU * i as f64 / n as f64;
        let u: f64 = rng.gen::<f64>() * mass;
        let idx = cumulative.partition_point(|&c| c < u).min(mix.len() - 1);
        let state = &mix.branches()[idx].1;
        let (c, s) = (theta.cos(), theta.sin());
        let mean = c * state.mean()[0] + s * state.mean()[1];
        let var = c * c * state.cov()[(0, 0)]
            + 2.0 * c * s * state.cov()[(0, 1)]
            + s * s * state.cov()[(1, 1)];
        let z: f64 = rng.sample(StandardNormal);
        out.push(QuadratureSample {
            theta,
            value: mean + var.max(0.0).sqrt() * z,
        });
    }
    Ok(out)
}

/// Fock-basis amplitudes ⟨n|x_θ⟩ up to `dim`, SNU-normalized
/// (ψ₀(x) = (2π)^(−1/4) e^(−x²/4)) with phase factor e^{inθ}.
pub fn quadrature_projector(theta: f64, x: f64, dim: usize) -> DVector<Complex64> {
    let mut psi = vec![0.0f64; dim];
    psi[0] = (std::f64::consts::TAU).powf(-0.25) * (-x * x / 4.0).exp();
    if dim > 1 {
        psi[1] = x * psi[0];
    }
    for n in 1..dim.saturating_sub(1) {
        psi[n + 1] = (x * psi[n] - (n as f64).sqrt() * psi[n - 1]) / ((n + 1) as f64).sqrt();
    }
    DVector::from_iterator(
        dim,
        psi.iter()
            .enumerate()
            .map(|(n, &v)| Complex64::from_polar(1.0, n as f64 * theta) * v),
    )
}

/// Reconstruction output with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct MaxLikResult {
    pub rho: FockDensityMatrix,
    pub iterations: usize,
    pub log_likelihood: Vec<f64>,
    /// True when the log-likelihood never decreased between iterations.
    pub monotone: bool,
    /// Set when fewer than two (phase, value) bins received samples.
    pub degenerate: bool,
    /// Samples outside the value range, excluded from the likelihood.
    pub dropped_samples: usize,
}

/// Iterative RρR maximum-likelihood reconstruction over binned samples.
pub fn maxlik_reconstruct(
    samples: &[QuadratureSample],
    config: &TomographyConfig,
) -> Result<MaxLikResult> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let dim = config.cutoff;
    let (pb, vb, range) = (config.phase_bins, config.value_bins, config.value_range);

    // Bin counts over (phase, value).
    let mut counts = vec![0u64; pb * vb];
    let mut dropped = 0usize;
    for s in samples {
        if s.value.abs() > range {
            dropped += 1;
            continue;
        }
        let pbin = (((s.theta.rem_euclid(std::f64::consts::TAU)) / std::f64::consts::TAU
            * pb as f64) as usize)
            .min(pb - 1);
        let vbin = (((s.value + range) / (2.0 * range) * vb as f64) as usize).min(vb - 1);
        counts[pbin * vb + vbin] += 1;
    }
    let used: u64 = counts.iter().sum();
    if used == 0 {
        return Err(Error::NoSamples);
    }
    let occupied = counts.iter().filter(|&&c| c > 0).count();
    let degenerate = occupied < 2;

    // Projectors at occupied bin centers.
    let mut bins: Vec<(f64, DVector<Complex64>)> = Vec::with_capacity(occupied);
    for p in 0..pb {
        let theta = (p as f64 + 0.5) / pb as f64 * std::f64::consts::TAU;
        for v in 0..vb {
            let c = counts[p * vb + v];
            if c == 0 {
                continue;
            }
            let x = -range + (v as f64 + 0.5) / vb as f64 * (2.0 * range);
            bins.push((c as f64, quadrature_projector(theta, x, dim)));
        }
    }

    let mut rho: DMatrix<Complex64> =
        DMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0);
    let mut ll_trace = Vec::new();
    let mut monotone = true;
    let mut iterations = 0;
    for _ in 0..config.max_iters {
        let mut r: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
        let mut ll = 0.0;
        for (count, proj) in &bins {
            let rp = &rho * proj;
            let prob = proj.dotc(&rp).re.max(1e-300);
            ll += count * prob.ln();
            let scale = Complex64::new(count / prob, 0.0);
            // r += scale · |proj⟩⟨proj|
            r.ger_symm(1.0.into(), proj, proj, scale);
        }
        iterations += 1;
        if let Some(&prev) = ll_trace.last() {
            if ll < prev - 1e-9 * prev.abs().max(1.0) {
                monotone = false;
            }
            ll_trace.push(ll);
            if (ll - prev) / used as f64 ((prev)) < config.tolerance {
                break;
            }
        } else {
            ll_trace.push(ll);
        }
        let next = &r * &rho * &r;
        let herm = (&next + next.adjoint()) * Complex64::new(0.5, 0.0);
        let trace: f64 = (0..dim).map(|i| herm[(i, i)].re).sum();
        rho = herm / Complex64::new(trace, 0.0);
    }

    Ok(MaxLikResult {
        rho: FockDensityMatrix::from_matrix(rho)?,
        iterations,
        log_likelihood: ll_trace,
        monotone,
        degenerate,
        dropped_samples: dropped,
    })
}
