//! Forward Kubelka-Munk scene synthesis with ground truth.
//!
//! A [`SceneDescription`] is parsed from text and rasterized into a
//! [`SceneSpec`] of per-pixel tables. [`render_spectral`] evaluates the
//! reflection model per wavelength and [`spectral_to_rgb`] integrates the
//! result against three Gaussian sensor bands.
//!
//! Two scenes ship with the crate: [`LAMP_SCENE`], a street lamp with all
//! four degradation regions, and [`COROLLARY_PAIR`], the scene pair used by
//! [`verify_corollary1`].

mod corollary;
mod render;
mod scene;
mod spectrum;

use thiserror::Error;

pub use corollary::{
    verify_corollary1, CorollaryConfig, CorollaryReport, CorollaryStatus, Refinement,
    RATIO_THRESHOLD, REFINE_DECREASE, REFINE_STABILITY, ROUNDING_FLOOR,
};
pub use render::{
    render_spectral, sensor_weights, spectral_to_rgb, Exposure, RenderMode, SceneSpec, SceneTables,
    SpectralStack, SENSOR_CENTERS, SENSOR_WIDTH,
};
pub use scene::{IlluminantField, Layer, SceneDescription, ScenePair, Shape, EDGE_MARGIN};
pub use spectrum::{SpectrumExpr, Wavelengths};

use crate::image::RgbImage;

pub const LAMP_SCENE: &str = include_str!("../../scenes/lamp.scene");
pub const COROLLARY_PAIR: &str = include_str!("../../scenes/corollary_pair.scene");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing required key '{0}'")]
    Missing(String),

    #[error("unknown material id {0}")]
    UnknownMaterial(usize),

    #[error("invalid scene: {0}")]
    Invalid(String),

    #[error(transparent)]
    Pipeline(#[from] crate::error::Error),
}

impl SynthError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Self::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Rasterizes, renders and integrates to RGB. `mode` falls back to the
/// scene's own mode, then to `Eq1`.
pub fn render_scene(
    desc: &SceneDescription,
    factor: usize,
    mode: Option<RenderMode>,
) -> Result<(RgbImage, SceneSpec), SynthError> {
    let spec = desc.rasterize(factor)?;
    let mode = mode.or(desc.mode).unwrap_or_default();
    let img = spectral_to_rgb(&render_spectral(&spec, mode), desc.exposure);
    Ok((img, spec))
}

pub fn lamp_scene() -> SceneDescription {
    SceneDescription::parse(LAMP_SCENE).expect("bundled lamp scene parses")
}

pub fn corollary_pair() -> ScenePair {
    ScenePair::parse(COROLLARY_PAIR).expect("bundled scene pair parses")
}
