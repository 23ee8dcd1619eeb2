//! Physics-guided nighttime degradation disentanglement and the numerics of
//! degradation-aware contrastive learning.
//!
//! The crate is organized bottom-up:
//!
//! - [`photometric`]: Gaussian color model, Gaussian derivatives, the
//!   illumination invariant `N`.
//! - [`disentangle`]: illuminance clustering and light-effect extraction into
//!   a four-way [`Region`] partition.
//! - [`synth`]: a Kubelka-Munk scene renderer with ground truth, used to
//!   check the invariant and the partition.
//! - [`degnce`]: region-guided patch sampling, Sinkhorn reweighting and the
//!   weighted NCE / least-squares adversarial loss calculators.
//! - [`io`]: image, label-map, tensor and report codecs.
//!
//! Every operation is deterministic: parallel loops only write disjoint
//! outputs and all reductions run in a fixed order.

pub mod degnce;
pub mod disentangle;
pub mod error;
pub mod image;
pub mod io;
pub mod kmeans;
pub mod photometric;
pub mod synth;

pub use disentangle::{disentangle, DisentangleConfig, DisentanglementMap, Region, RegionMask};
pub use error::{Error, Result};
pub use image::{Plane, RgbImage};
pub use photometric::{invariant, InvariantMap, InvariantParams};
