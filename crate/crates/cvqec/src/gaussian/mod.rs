//! Exact Gaussian-state engine: states, symplectic linear optics,
//! erasure/loss maps, homodyne conditioning and closed-form overlaps.

mod channels;
mod measure;
mod state;
mod transform;

pub use channels::{loss_channel, replace_with_vacuum};
pub use measure::{
    coherent_overlap, homodyne_condition, AffineConditional, HomodyneOutcome, DEGENERATE_VAR,
};
pub use state::{symplectic_eigenvalues, symplectic_form, GaussianMixture, GaussianState};
pub use transform::SymplecticTransform;
