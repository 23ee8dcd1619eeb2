//! Degradation-aware contrastive numerics over externally supplied
//! feature grids.
//!
//! Per layer: grid cells take the majority region of the pixels they cover,
//! anchors are sampled per region ([`sample_patches`]), each region gets a
//! block of similarities `exp(v_i · v⁻_j / τ)` ([`similarity_block`]), an
//! entropic transport plan with zero diagonal turns the block into negative
//! weights ([`ot_reweight`]), and [`deg_nce_loss`] sums the per-layer mean
//! weighted NCE. Negatives never cross regions.
//!
//! No gradients are computed; this module evaluates losses only.

mod features;
mod loss;
mod sampling;
mod similarity;
mod sinkhorn;

pub use features::FeatureGrid;
pub use loss::{
    adversarial_losses, deg_nce_loss, patch_nce, region_plans, run_degnce, weighted_nce,
    AdversarialLosses, DegNceConfig, DegNceLoss, DegNceRun, LayerLoss, LayerPlans, LossReport,
    NegativeMass, DEFAULT_MAX_PER_REGION,
};
pub use sampling::{cell_labels, sample_patches, PatchSampleSet, RegionSamples};
pub use similarity::{region_block, similarity_block, SimilarityBlock, DEFAULT_TAU};
pub use sinkhorn::{
    ot_reweight, CostSign, SinkhornConfig, TransportPlan, DEFAULT_EPSILON, DEFAULT_MAX_SWEEPS,
    DEFAULT_TOL,
};
