//! Truncated Fock-basis backend: Gaussian→Fock conversion, Uhlmann fidelity
//! and Wigner-function rendering.
//!
//! Operators are built at a working dimension of twice the requested cutoff
//! and cropped afterwards, so that large displacements (|α|² ≈ 18 for the
//! reference signal) do not fold truncation artifacts back into the kept
//! block. Truncated mass is reported, never silently renormalized away.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gaussian::{GaussianMixture, GaussianState};

/// Working-dimension multiplier for operator construction.
const WORK_MULT: usize = 2;

/// Relative thermal weight below which mixture branches drop eigencomponents.
const THERMAL_TAIL: f64 = 1e-12;

/// Truncated D×D density matrix in the Fock basis.
#[derive(Debug, Clone)]
pub struct FockDensityMatrix {
    dim: usize,
    matrix: DMatrix<Complex64>,
    /// Probability mass lost to truncation (1 − trace at construction).
    trace_deficit: f64,
    /// Set when the deficit exceeds 5%, i.e. the cutoff is too small.
    cutoff_warning: bool,
}

impl FockDensityMatrix {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || dim == 0 {
            return Err(Error::DimensionMismatch {
                expected: dim.max(1),
                got: matrix.ncols(),
            });
        }
        let herm_dev = hermitian_deviation(&matrix);
        if herm_dev > 1e-8 {
            return Err(Error::NonHermitian(herm_dev));
        }
        let trace: f64 = (0..dim).map(|i| matrix[(i, i)].re).sum();
        let deficit = 1.0 - trace;
        Ok(Self {
            dim,
            matrix,
            trace_deficit: deficit,
            cutoff_warning: deficit > 0.05,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.matrix[(i, i)].re).sum()
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn cutoff_warning(&self) -> bool {
        self.cutoff_warning
    }

    /// Mean photon number ⟨n⟩ of the (renormalized) matrix.
    pub fn mean_photon_number(&self) -> f64 {
        let tr = self.trace();
        (0..self.dim)
            .map(|n| n as f64 * self.matrix[(n, n)].re)
            .sum::<f64>()
            / tr
    }

    /// Photon-number distribution (diagonal, renormalized).
    pub fn diagonal(&self) -> Vec<f64> {
        let tr = self.trace();
        (0..self.dim).map(|n| self.matrix[(n, n)].re / tr).collect()
    }
}

fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Annihilation operator on a dim-dimensional truncated space.
fn ladder(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// exp(A) for anti-Hermitian A, via the Hermitian eigendecomposition of iA.
fn exp_antihermitian(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = a.map(|z| z * Complex64::i());
    let eig = h.symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, -l)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint()
}

/// Displacement operator exp(α a† − α* a) on a dim-dimensional space.
pub fn displacement_operator(alpha: Complex64, dim: usize) -> DMatrix<Complex64> {
    let a = ladder(dim);
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    exp_antihermitian(&gen)
}

/// Squeeze operator exp((z* a² − z a†²)/2) on a dim-dimensional space.
pub fn squeeze_operator(z: Complex64, dim: usize) -> DMatrix<Complex64> {
    let a = ladder(dim);
    let a2 = &a * &a;
    let gen = (&a2 * z.conj() - a2.adjoint() * z) * Complex64::new(0.5, 0.0);
    exp_antihermitian(&gen)
}

/// ⟨m|D(α)|n⟩ in closed form (associated-Laguerre recurrences along the
/// diagonals). Agrees with [`displacement_operator`] away from the truncation
/// boundary and costs O(dim²) instead of an eigendecomposition.
pub fn displacement_matrix_closed(alpha: Complex64, dim: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(dim, dim);
    let x = alpha.norm_sqr();
    let gauss = (-x / 2.0).exp();
    for k in 0..dim {
        // prefactor √(n!/(n+k)!) α^k e^{−x/2} for entry (n+k, n)
        let mut pref = gauss;
        for j in 1..=k {
            pref /= (j as f64).sqrt();
        }
        let upper = alpha.powu(k as u32) * pref;
        let lower = (-alpha.conj()).powu(k as u32) * pref;
        let (mut l_prev, mut l_cur) = (0.0f64, 1.0f64); // L_{-1}, L_0
        let mut scale = 1.0f64;
        for n in 0..dim - k {
            if n > 0 {
                scale *= (n as f64 / (n + k) as f64).sqrt();
                let nn = (n - 1) as f64;
                let kk = k as f64;
                let next =
                    ((2.0 * nn + kk + 1.0 - x) * l_cur - (nn + kk) * l_prev) / (nn + 1.0);
                l_prev = l_cur;
                l_cur = next;
            }
            let val = scale * l_cur;
            out[(n + k, n)] = upper * val;
            if k > 0 {
                out[(n, n + k)] = lower * val;
            }
        }
    }
    out
}

/// Thermal-state photon-number weights for mean occupation `nbar`.
fn thermal_weights(nbar: f64, dim: usize) -> Vec<f64> {
    if nbar <= 0.0 {
        let mut w = vec![0.0; dim];
        w[0] = 1.0;
        return w;
    }
    let ratio = nbar / (1.0 + nbar);
    let mut w = Vec::with_capacity(dim);
    let mut cur = 1.0 / (1.0 + nbar);
    for _ in 0..dim {
        w.push(cur);
        cur *= ratio;
    }
    w
}

/// Pure coherent state |α⟩⟨α| truncated at `dim`, amplitudes
/// e^(−|α|²/2) αⁿ/√(n!).
pub fn coherent_fock(alpha: Complex64, dim: usize) -> FockDensityMatrix {
    let mut amp = DVector::zeros(dim);
    let mut cur = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            cur *= alpha / Complex64::new((n as f64).sqrt(), 0.0);
        }
        amp[n] = cur;
    }
    let matrix = &amp * amp.adjoint();
    FockDensityMatrix::from_matrix(matrix).expect("outer product is Hermitian")
}

/// Decomposition of a 1-mode Gaussian state as a displaced squeezed thermal
/// state: ρ = D(α) S(ξ) ρ_th(n̄) S† D†.
#[derive(Debug, Clone, Copy)]
struct GaussianDecomposition {
    alpha: Complex64,
    xi: Complex64,
    nbar: f64,
}

fn decompose(state: &GaussianState) -> Result<GaussianDecomposition> {
    if state.num_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: state.num_modes(),
        });
    }
    let v = state.cov();
    let eig = v.clone().symmetric_eigen();
    let (mut lo, mut hi) = (eig.eigenvalues[0], eig.eigenvalues[1]);
    let mut lo_idx = 0usize;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
        lo_idx = 1;
    }
    let nu = (lo * hi).max(0.0).sqrt();
    let r = if lo > 0.0 { 0.5 * (nu / lo).ln() } else { 0.0 };
    let vec = eig.eigenvectors.column(lo_idx);
    let phi = vec[1].atan2(vec[0]);
    Ok(GaussianDecomposition {
        alpha: Complex64::new(state.mean()[0] / 2.0, state.mean()[1] / 2.0),
        xi: Complex64::from_polar(r, 2.0 * phi),
        nbar: ((nu - 1.0) / 2.0).max(0.0),
    })
}

/// Convert a 1-mode Gaussian state to a truncated Fock density matrix via the
/// displaced-squeezed-thermal decomposition. The trace deficit is recorded on
/// the result; a deficit above 5% raises the cutoff warning flag.
pub fn gaussian_to_fock(state: &GaussianState, dim: usize) -> Result<FockDensityMatrix> {
    let dec = decompose(state)?;
    let work = WORK_MULT * dim;
    let s = squeeze_operator(dec.xi, work);
    let d = displacement_operator(dec.alpha, work);
    let u = &d * &s;
    let weights = thermal_weights(dec.nbar, work);
    let mut rho: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
    for (k, &w) in weights.iter().enumerate() {
        if w < THERMAL_TAIL {
            break;
        }
        let col = u.column(k);
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += col[i] * col[j].conj() * w;
            }
        }
    }
    FockDensityMatrix::from_matrix(rho)
}

/// Normalized weighted sum of the branch conversions of a Gaussian mixture.
///
/// Branches sharing a covariance matrix (as the post-selection grid produces
/// in bulk) are grouped: the squeezed-thermal core is built once per group and
/// only the closed-form displacement varies per branch.
pub fn mixture_to_fock(mix: &GaussianMixture, dim: usize) -> Result<FockDensityMatrix> {
    let mass = mix.total_mass();
    if mix.is_empty() || mass <= 0.0 {
        return Err(Error::EmptyMixture);
    }
    let work = WORK_MULT * dim;

    // Group branch indices by bit-identical covariance.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    for (i, (_, state)) in mix.branches().iter().enumerate() {
        if state.num_modes() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: state.num_modes(),
            });
        }
        let key: Vec<u64> = state.cov().iter().map(|v| v.to_bits()).collect();
        match index.get(&key) {
            Some(&g) => groups[g].push(i),
            None => {
                index.insert(key, groups.len());
                groups.push(vec![i]);
            }
        }
    }

    let mut rho: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
    for branch_ids in &groups {
        let first = &mix.branches()[branch_ids[0]].1;
        let dec0 = decompose(first)?;
        let s = squeeze_operator(dec0.xi, work);
        let weights: Vec<f64> = thermal_weights(dec0.nbar, work)
            .into_iter()
            .take_while(|&w| w >= THERMAL_TAIL)
            .collect();
        let cols: Vec<DVector<Complex64>> = (0..weights.len())
            .map(|k| s.column(k).into_owned())
            .collect();

        // Partial sums per chunk, folded in order for bit-stable output.
        let partials: Vec<DMatrix<Complex64>> = branch_ids
            .par_chunks(512)
            .map(|chunk| {
                let mut acc: DMatrix<Complex64> = DMatrix::zeros(dim, dim);
                for &b in chunk {
                    let (w, state) = &mix.branches()[b];
                    let alpha = Complex64::new(state.mean()[0] / 2.0, state.mean()[1] / 2.0);
                    let d = displacement_matrix_closed(alpha, work);
                    for (k, &tw) in weights.iter().enumerate() {
                        let u = &d * &cols[k];
                        let scale = w * tw;
                        for i in 0..dim {
                            for j in 0..dim {
                                acc[(i, j)] += u[i] * u[j].conj() * scale;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        for p in partials {
            rho += p;
        }
    }
    rho /= Complex64::new(mass, 0.0);
    FockDensityMatrix::from_matrix(rho)
}

/// Uhlmann fidelity F = [Tr √(√ρ_a ρ_b √ρ_a)]², both inputs renormalized to
/// unit trace first. Square roots go through Hermitian eigendecompositions
/// with eigenvalues clipped at zero.
pub fn uhlmann_fidelity(a: &FockDensityMatrix, b: &FockDensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let ma = a.matrix() / Complex64::new(a.trace(), 0.0);
    let mb = b.matrix() / Complex64::new(b.trace(), 0.0);
    let eig = ma.symmetric_eigen();
    let roots = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    let sqrt_a = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint();
    let inner = &sqrt_a * mb * &sqrt_a;
    let vals = inner.symmetric_eigen().eigenvalues;
    let f: f64 = vals.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((f * f).clamp(0.0, 1.0))
}

/// Rectangular phase-space grid in SNU coordinates.
#[derive(Debug, Clone)]
pub struct PhaseSpaceGrid {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
}

impl PhaseSpaceGrid {
    /// Uniform grid over [−half, half]² with `n` points per axis.
    pub fn symmetric(half: f64, n: usize) -> Self {
        let step = 2.0 * half / (n.max(2) - 1) as f64;
        let axis: Vec<f64> = (0..n).map(|i| -half + i as f64 * step).collect();
        Self {
            xs: axis.clone(),
            ps: axis,
        }
    }
}

/// Wigner function of a truncated Fock matrix, sampled on the grid.
/// Normalized so ∫ W dx dp equals the matrix trace; the vacuum peaks at
/// 1/(2π) at the origin in these SNU coordinates.
pub fn wigner_from_fock(rho: &FockDensityMatrix, grid: &PhaseSpaceGrid) -> DMatrix<f64> {
    let dim = rho.dim();
    let m = rho.matrix();
    let rows: Vec<Vec<f64>> = grid
        .xs
        .par_iter()
        .map(|&x| {
            grid.ps
                .iter()
                .map(|&p| {
                    let beta = Complex64::new(x / 2.0, p / 2.0);
                    let y = 4.0 * beta.norm_sqr();
                    let gauss = (2.0 / std::f64::consts::PI) * (-y / 2.0).exp();
                    let two_beta_conj = beta.conj() * 2.0;
                    let mut total = 0.0;
                    for k in 0..dim {
                        let mut pref = 1.0;
                        for j in 1..=k {
                            pref /= (j as f64).sqrt();
                        }
                        let phase = two_beta_conj.powu(k as u32) * pref;
                        let (mut l_prev, mut l_cur) = (0.0f64, 1.0f64);
                        let mut scale = 1.0f64;
                        for n in 0..dim - k {
                            if n > 0 {
                                scale *= (n as f64 / (n + k) as f64).sqrt();
                                let nn = (n - 1) as f64;
                                let kk = k as f64;
                                let next = ((2.0 * nn + kk + 1.0 - y) * l_cur
                                    - (nn + kk) * l_prev)
                                    / (nn + 1.0);
                                l_prev = l_cur;
                                l_cur = next;
                            }
                            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                            let w_mn = phase * (sign * scale * l_cur * gauss);
                            if k == 0 {
                                total += (m[(n, n)] * w_mn).re;
                            } else {
                                total += 2.0 * (m[(n + k, n)] * w_mn).re;
                            }
                        }
                    }
                    // β-plane density to SNU (x, p): dβ_re dβ_im = dx dp / 4
                    total / 4.0
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(grid.xs.len(), grid.ps.len(), |i, j| rows[i][j])
}
