//! The four-mode erasure code: EPR preparation, encoding, the 16-pattern
//! erasure channel, decoding and the joint syndrome measurement.
//!
//! Circuit layout (modes 0..4, channel k = mode k):
//!
//! ```text
//!   signal1 ─┐BBS┌─ ch1          ch1 ─┐BBS⁻¹┌─ output1
//!   EPR(1) ──┘   └─ ch2          ch2 ─┘     └─ A1 ─┐BBS┌─ p-homodyne → p_m
//!   signal2 ─┐BBS┌─ ch3          ch3 ─┐BBS⁻¹┌─ output2 │
//!   EPR(2) ──┘   └─ ch4          ch4 ─┘     └─ A2 ────┘└─ x-homodyne → x_m
//! ```
//!
//! With no erasure the decoder inverts the encoder exactly and the syndrome
//! homodynes read out the EPR nullifiers (x_{A2}−x_{A1})/√2 and
//! (p_{A1}+p_{A2})/√2, squeezed to 10^(−s/10).

mod protocol;

pub use protocol::{
    deterministic_correct, feedforward_signs, mixture_fidelity_to_coherent,
    probabilistic_protocol, single_channel_baseline,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    homodyne_condition, loss_channel, replace_with_vacuum, AffineConditional, GaussianState,
    SymplecticTransform,
};

/// One squeezed-vacuum ancilla source. `squeeze_db > 0` is variance below
/// shot noise; an antisqueeze level above the squeeze level models impurity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Squeezer {
    pub squeeze_db: f64,
    pub antisqueeze_db: f64,
}

impl Squeezer {
    pub fn pure(db: f64) -> Self {
        Self {
            squeeze_db: db,
            antisqueeze_db: db,
        }
    }
}

/// Physical parameters of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    /// Coherent amplitude of signal 1 (signal 2 is vacuum).
    pub alpha: Complex64,
    pub squeezer1: Squeezer,
    pub squeezer2: Squeezer,
    /// Interference visibility of the EPR preparation, in [0, 1].
    pub visibility: f64,
    /// Homodyne detection efficiency for the syndrome measurement, in [0, 1].
    pub detection_efficiency: f64,
}

impl CodeParams {
    /// Ideal arm with two pure symmetric squeezers at `db`.
    pub fn symmetric(alpha: Complex64, db: f64) -> Self {
        Self {
            alpha,
            squeezer1: Squeezer::pure(db),
            squeezer2: Squeezer::pure(db),
            visibility: 1.0,
            detection_efficiency: 1.0,
        }
    }

    /// Entanglement-free arm: ancillas replaced by vacua.
    pub fn vacuum_ancilla(alpha: Complex64) -> Self {
        Self::symmetric(alpha, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("visibility", self.visibility),
            ("detection_efficiency", self.detection_efficiency),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::ParameterRange {
                    name,
                    value: v,
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        Ok(())
    }
}

/// Which of the four channels are blocked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErasurePattern {
    pub blocked: [bool; 4],
}

impl ErasurePattern {
    pub fn none() -> Self {
        Self {
            blocked: [false; 4],
        }
    }

    pub fn single(channel: usize) -> Self {
        let mut blocked = [false; 4];
        blocked[channel] = true;
        Self { blocked }
    }

    /// Pattern from a 4-bit index; bit k blocks channel k.
    pub fn from_index(index: usize) -> Self {
        Self {
            blocked: [
                index & 1 != 0,
                index & 2 != 0,
                index & 4 != 0,
                index & 8 != 0,
            ],
        }
    }

    pub fn index(&self) -> usize {
        self.blocked
            .iter()
            .enumerate()
            .map(|(k, &b)| (b as usize) << k)
            .sum()
    }

    pub fn count_blocked(&self) -> usize {
        self.blocked.iter().filter(|&&b| b).count()
    }

    /// All sixteen patterns in index order.
    pub fn all() -> impl Iterator<Item = ErasurePattern> {
        (0..16).map(ErasurePattern::from_index)
    }

    /// P_i = p_e^k (1−p_e)^(4−k) for k blocked channels.
    pub fn probability(&self, p_e: f64) -> f64 {
        let k = self.count_blocked() as i32;
        p_e.powi(k) * (1.0 - p_e).powi(4 - k)
    }
}

/// Joint syndrome measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Syndrome {
    pub x_m: f64,
    pub p_m: f64,
}

/// Feedforward gain G; the displacement applies √G per quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedforwardGain {
    pub g: f64,
}

impl FeedforwardGain {
    pub fn new(g: f64) -> Result<Self> {
        if g < 0.0 {
            return Err(Error::ParameterRange {
                name: "gain",
                value: g,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        Ok(Self { g })
    }
}

/// Shape of the post-selection region in the syndrome plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    /// Discard only when |x_m| > t AND |p_m| > t (the protocol's stated rule).
    CornerReject,
    /// Keep only when both |x_m| ≤ t and |p_m| ≤ t.
    BoxAccept,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRule {
    pub threshold: f64,
    pub region_kind: RegionKind,
}

impl AcceptanceRule {
    pub fn corner_reject(threshold: f64) -> Self {
        Self {
            threshold,
            region_kind: RegionKind::CornerReject,
        }
    }

    pub fn box_accept(threshold: f64) -> Self {
        Self {
            threshold,
            region_kind: RegionKind::BoxAccept,
        }
    }

    pub fn accepts(&self, x_m: f64, p_m: f64) -> bool {
        let t = self.threshold;
        match self.region_kind {
            RegionKind::CornerReject => !(x_m.abs() > t && p_m.abs() > t),
            RegionKind::BoxAccept => x_m.abs() <= t && p_m.abs() <= t,
        }
    }
}

/// Uniform midpoint grid over the syndrome plane, [−h, h]² split into
/// `cells`² cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub half_extent: f64,
    pub cells: usize,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self {
            half_extent: 6.0,
            cells: 201,
        }
    }
}

impl QuadratureGrid {
    pub fn cell_size(&self) -> f64 {
        2.0 * self.half_extent / self.cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        -self.half_extent + (i as f64 + 0.5) * self.cell_size()
    }
}

/// Gaussian distribution of the joint syndrome outcome (x_m, p_m).
#[derive(Debug, Clone)]
pub struct SyndromeDistribution {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl SyndromeDistribution {
    pub fn pdf(&self, x: f64, p: f64) -> f64 {
        let det = self.cov[(0, 0)] * self.cov[(1, 1)] - self.cov[(0, 1)] * self.cov[(1, 0)];
        let dx = x - self.mean[0];
        let dp = p - self.mean[1];
        let quad = (self.cov[(1, 1)] * dx * dx - 2.0 * self.cov[(0, 1)] * dx * dp
            + self.cov[(0, 0)] * dp * dp)
            / det;
        (-0.5 * quad).exp() / (std::f64::consts::TAU * det.sqrt())
    }
}

/// Conditional two-mode output together with the syndrome distribution.
#[derive(Debug, Clone)]
pub struct DecodedState {
    /// Mean affine in (x_m, p_m), covariance outcome-independent.
    /// Rows: (x_o1, p_o1, x_o2, p_o2); columns of `gain`: (x_m, p_m).
    pub outputs: AffineConditional,
    pub syndrome: SyndromeDistribution,
}

impl DecodedState {
    /// Marginal conditional of one output mode (0 or 1).
    pub fn output_conditional(&self, which: usize) -> AffineConditional {
        let r = 2 * which;
        AffineConditional {
            base_mean: DVector::from_vec(vec![
                self.outputs.base_mean[r],
                self.outputs.base_mean[r + 1],
            ]),
            gain: self.outputs.gain.rows(r, 2).into_owned(),
            cov: self.outputs.cov.view((r, r), (2, 2)).into_owned(),
            degenerate: self.outputs.degenerate,
        }
    }
}

/// Two-mode entangled ancilla: the two squeezers interfere with a π/2
/// relative phase on a balanced splitter. Imperfect visibility v mixes each
/// half with vacuum weight 1−v² through a loss channel.
pub fn make_epr(params: &CodeParams) -> Result<GaussianState> {
    params.validate()?;
    let sq1 = GaussianState::squeezed_vacuum(
        params.squeezer1.squeeze_db,
        params.squeezer1.antisqueeze_db,
        0.0,
    )?;
    let sq2 = GaussianState::squeezed_vacuum(
        params.squeezer2.squeeze_db,
        params.squeezer2.antisqueeze_db,
        std::f64::consts::FRAC_PI_2,
    )?;
    let bs = SymplecticTransform::balanced_beam_splitter(2, 0, 1)?;
    let mut epr = bs.apply(&GaussianState::tensor(&[sq1, sq2]))?;
    if params.visibility < 1.0 {
        let eta = params.visibility * params.visibility;
        epr = loss_channel(&epr, 0, eta)?;
        epr = loss_channel(&epr, 1, eta)?;
    }
    Ok(epr)
}

/// The two encoding beam splitters as one 4-mode transform, acting on the
/// mode order (signal1, EPR half 1, signal2, EPR half 2).
fn encode_transform() -> SymplecticTransform {
    let bs1 = SymplecticTransform::balanced_beam_splitter(4, 0, 1).expect("static indices");
    let bs2 = SymplecticTransform::balanced_beam_splitter(4, 2, 3).expect("static indices");
    bs1.compose(&bs2).expect("same size")
}

/// Encode two 1-mode signals with a 2-mode EPR ancilla into four channels.
pub fn encode(
    signal1: &GaussianState,
    signal2: &GaussianState,
    epr: &GaussianState,
) -> Result<GaussianState> {
    if signal1.num_modes() != 1 || signal2.num_modes() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: signal1.num_modes().max(signal2.num_modes()),
        });
    }
    if epr.num_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: epr.num_modes(),
        });
    }
    // Assemble (signal1, EPR1, EPR2, signal2) then swap to (s1, E1, s2, E2).
    let joint = GaussianState::tensor(&[signal1.clone(), epr.clone(), signal2.clone()]);
    let swap = SymplecticTransform::swap(4, 2, 3)?;
    let arranged = swap.apply(&joint)?;
    encode_transform().apply(&arranged)
}

/// Apply the erasure pattern: every blocked channel is replaced by vacuum.
pub fn erase(state4: &GaussianState, pattern: &ErasurePattern) -> Result<GaussianState> {
    if state4.num_modes() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state4.num_modes(),
        });
    }
    let mut s = state4.clone();
    for (ch, &blocked) in pattern.blocked.iter().enumerate() {
        if blocked {
            s = replace_with_vacuum(&s, ch)?;
        }
    }
    Ok(s)
}

/// Decode the four channels and measure the joint syndrome.
///
/// Applies the inverse encoding splitters, interferes the two recovered
/// ancilla modes on a balanced splitter, then conditions on an x-homodyne of
/// one port and a p-homodyne of the other. Detection efficiency below 1 is
/// applied as loss on the measured modes.
pub fn decode_and_syndrome(
    state4: &GaussianState,
    detection_efficiency: f64,
) -> Result<DecodedState> {
    if state4.num_modes() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state4.num_modes(),
        });
    }
    let decoded = encode_transform().inverse().apply(state4)?;
    let syn_bs = SymplecticTransform::balanced_beam_splitter(4, 1, 3)?;
    let mut s = syn_bs.apply(&decoded)?;
    if detection_efficiency < 1.0 {
        s = loss_channel(&s, 1, detection_efficiency)?;
        s = loss_channel(&s, 3, detection_efficiency)?;
    }

    // x-homodyne on mode 3. Remaining modes (0, 1, 2) keep their indices.
    let h1 = homodyne_condition(&s, 3, 0.0)?;
    let b1 = &h1.conditional.base_mean;
    let g1 = h1.conditional.gain.column(0).into_owned();
    let sigma1 = &h1.conditional.cov;

    // p-homodyne on mode 1 of the reduced state. Row 3 is p of mode 1.
    let mid = GaussianState::from_parts(b1.clone(), sigma1.clone())?;
    let h2 = homodyne_condition(&mid, 1, std::f64::consts::FRAC_PI_2)?;
    let g2 = h2.conditional.gain.column(0).into_owned();
    let coupling = g1[3]; // d p_m / d x_m through the first conditioning

    // Outputs are modes 0 and 2 of the reduced state: rows (0, 1, 4, 5).
    let keep = [0usize, 1, 4, 5];
    let g1_rest = DVector::from_iterator(4, keep.iter().map(|&r| g1[r]));

    let mut gain = DMatrix::zeros(4, 2);
    gain.set_column(0, &(&g1_rest - &g2 * coupling));
    gain.set_column(1, &g2);

    let syn_mean = DVector::from_vec(vec![h1.outcome_mean, h2.outcome_mean]);
    let mut syn_cov = DMatrix::zeros(2, 2);
    syn_cov[(0, 0)] = h1.outcome_var;
    syn_cov[(0, 1)] = h1.outcome_var * coupling;
    syn_cov[(1, 0)] = syn_cov[(0, 1)];
    syn_cov[(1, 1)] = h2.outcome_var + coupling * coupling * h1.outcome_var;

    Ok(DecodedState {
        outputs: AffineConditional {
            base_mean: h2.conditional.base_mean,
            gain,
            cov: h2.conditional.cov,
            degenerate: h1.conditional.degenerate || h2.conditional.degenerate,
        },
        syndrome: SyndromeDistribution {
            mean: syn_mean,
            cov: syn_cov,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn alpha() -> Complex64 {
        Complex64::new(3.0, 3.0)
    }

    fn encoded(params: &CodeParams) -> GaussianState {
        let epr = make_epr(params).unwrap();
        encode(
            &GaussianState::coherent(params.alpha),
            &GaussianState::vacuum(1),
            &epr,
        )
        .unwrap()
    }

    #[test]
    fn epr_zero_db_is_vacuum() {
        let params = CodeParams::vacuum_ancilla(alpha());
        let epr = make_epr(&params).unwrap();
        let vac = GaussianState::vacuum(2);
        assert!((epr.mean() - vac.mean()).norm() < 1e-14);
        assert!((epr.cov() - vac.cov()).norm() < 1e-14);
    }

    #[test]
    fn epr_two_db_joint_variances() {
        let params = CodeParams::symmetric(alpha(), 2.0);
        let epr = make_epr(&params).unwrap();
        let c = epr.cov();
        let var_xm = (c[(0, 0)] + c[(2, 2)] - 2.0 * c[(0, 2)]) / 2.0;
        let var_pp = (c[(1, 1)] + c[(3, 3)] + 2.0 * c[(1, 3)]) / 2.0;
        assert_relative_eq!(var_xm, 10f64.powf(-0.2), epsilon = 1e-12);
        assert_relative_eq!(var_pp, 10f64.powf(-0.2), epsilon = 1e-12);
    }

    #[test]
    fn epr_infinite_squeezing_limit() {
        let params = CodeParams::symmetric(alpha(), 60.0);
        let epr = make_epr(&params).unwrap();
        let c = epr.cov();
        let var_xm = (c[(0, 0)] + c[(2, 2)] - 2.0 * c[(0, 2)]) / 2.0;
        assert!(var_xm < 1e-5);
    }

    #[test]
    fn encode_vacuum_inputs_gives_vacuum() {
        let params = CodeParams::vacuum_ancilla(Complex64::new(0.0, 0.0));
        let out = encoded(&params);
        let vac = GaussianState::vacuum(4);
        assert!((out.mean() - vac.mean()).norm() < 1e-14);
        assert!((out.cov() - vac.cov()).norm() < 1e-14);
    }

    #[test]
    fn circuit_inversion_without_erasure() {
        let params = CodeParams::symmetric(alpha(), 2.0);
        let dec = decode_and_syndrome(&encoded(&params), 1.0).unwrap();
        // output 1 mean (6,6), output 2 mean (0,0)
        assert_relative_eq!(dec.outputs.base_mean[0], 6.0, epsilon = 1e-10);
        assert_relative_eq!(dec.outputs.base_mean[1], 6.0, epsilon = 1e-10);
        assert_relative_eq!(dec.outputs.base_mean[2], 0.0, epsilon = 1e-10);
        // outputs uncorrelated with the syndrome, identity covariance
        assert!(dec.outputs.gain.iter().all(|g| g.abs() < 1e-10));
        let id = DMatrix::identity(4, 4);
        assert!((dec.outputs.cov.clone() - id).norm() < 1e-10);
        // syndrome reads the nullifiers: mean zero, squeezed variance
        assert_relative_eq!(dec.syndrome.mean[0], 0.0, epsilon = 1e-10);
        assert_relative_eq!(dec.syndrome.mean[1], 0.0, epsilon = 1e-10);
        assert_relative_eq!(dec.syndrome.cov[(0, 0)], 10f64.powf(-0.2), epsilon = 1e-10);
        assert_relative_eq!(dec.syndrome.cov[(1, 1)], 10f64.powf(-0.2), epsilon = 1e-10);
        assert_relative_eq!(dec.syndrome.cov[(0, 1)], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn syndrome_variance_vanishes_at_infinite_squeezing() {
        let params = CodeParams::symmetric(alpha(), 60.0);
        let dec = decode_and_syndrome(&encoded(&params), 1.0).unwrap();
        assert!(dec.syndrome.cov[(0, 0)] < 1e-5);
        assert!(dec.syndrome.cov[(1, 1)] < 1e-5);
    }

    #[test]
    fn erase_nothing_is_identity() {
        let params = CodeParams::symmetric(alpha(), 2.0);
        let s = encoded(&params);
        assert_eq!(erase(&s, &ErasurePattern::none()).unwrap(), s);
    }

    #[test]
    fn erase_everything_is_vacuum() {
        let params = CodeParams::symmetric(alpha(), 2.0);
        let s = encoded(&params);
        let all = ErasurePattern::from_index(15);
        assert_eq!(erase(&s, &all).unwrap(), GaussianState::vacuum(4));
    }

    #[test]
    fn channel2_erasure_halves_output_mean() {
        let params = CodeParams::symmetric(alpha(), 2.0);
        let s = erase(&encoded(&params), &ErasurePattern::single(1)).unwrap();
        let dec = decode_and_syndrome(&s, 1.0).unwrap();
        assert_relative_eq!(dec.outputs.base_mean[0], 3.0, epsilon = 1e-10);
        assert_relative_eq!(dec.outputs.base_mean[1], 3.0, epsilon = 1e-10);
        // syndrome broadened above shot noise and displaced by the signal leak
        assert!(dec.syndrome.cov[(0, 0)] > 10f64.powf(-0.2));
        let shift = 6.0 / (2.0 * 2f64.sqrt());
        assert_relative_eq!(dec.syndrome.mean[0].abs(), shift, epsilon = 1e-10);
        assert_relative_eq!(dec.syndrome.mean[1].abs(), shift, epsilon = 1e-10);
    }

    #[test]
    fn syndrome_joint_conditioning_matches_direct_schur() {
        // Sequential conditioning must agree with the one-shot two-row Schur
        // complement on the commuting pair (x of mode 3, p of mode 1).
        let params = CodeParams::symmetric(alpha(), 2.5);
        let s = erase(&encoded(&params), &ErasurePattern::single(0)).unwrap();
        let dec = decode_and_syndrome(&s, 1.0).unwrap();

        let decoded = encode_transform().inverse().apply(&s).unwrap();
        let syn_bs = SymplecticTransform::balanced_beam_splitter(4, 1, 3).unwrap();
        let full = syn_bs.apply(&decoded).unwrap();
        let rows = [6usize, 3];
        let keep = [0usize, 1, 4, 5];
        let v = full.cov();
        let sig = DMatrix::from_fn(2, 2, |i, j| v[(rows[i], rows[j])]);
        let cross = DMatrix::from_fn(4, 2, |i, j| v[(keep[i], rows[j])]);
        let vr = DMatrix::from_fn(4, 4, |i, j| v[(keep[i], keep[j])]);
        let gain = &cross * sig.clone().try_inverse().unwrap();
        let cov = &vr - &gain * &sig * gain.transpose();

        assert!((dec.outputs.gain.clone() - gain).norm() < 1e-10);
        assert!((dec.outputs.cov.clone() - cov).norm() < 1e-10);
        assert!((dec.syndrome.cov.clone() - sig).norm() < 1e-10);
        let syn_mean_direct =
            DVector::from_vec(vec![full.mean()[rows[0]], full.mean()[rows[1]]]);
        assert!((dec.syndrome.mean.clone() - syn_mean_direct).norm() < 1e-12);
    }

    #[test]
    fn pattern_roundtrip_and_weights() {
        for idx in 0..16 {
            assert_eq!(ErasurePattern::from_index(idx).index(), idx);
        }
        let total: f64 = ErasurePattern::all().map(|p| p.probability(0.3)).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            ErasurePattern::none().probability(0.25),
            0.75f64.powi(4),
            epsilon = 1e-15
        );
        assert_relative_eq!(
            ErasurePattern::from_index(15).probability(0.25),
            0.25f64.powi(4),
            epsilon = 1e-15
        );
    }

    #[test]
    fn acceptance_rules() {
        let corner = AcceptanceRule::corner_reject(0.8);
        assert!(corner.accepts(0.0, 0.0));
        assert!(corner.accepts(2.0, 0.5)); // one large coordinate is kept
        assert!(!corner.accepts(2.0, -1.0));
        let boxr = AcceptanceRule::box_accept(0.8);
        assert!(boxr.accepts(0.5, -0.5));
        assert!(!boxr.accepts(2.0, 0.5));
    }

    #[test]
    fn grid_centers_cover_extent() {
        let g = QuadratureGrid::default();
        assert_relative_eq!(g.center(0), -6.0 + 0.5 * g.cell_size());
        assert_relative_eq!(g.center(200), 6.0 - 0.5 * g.cell_size());
    }
}
