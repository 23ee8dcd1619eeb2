use rayon::prelude::*;

use super::spectrum::Wavelengths;
use super::SynthError;
use crate::disentangle::Region;
use crate::image::RgbImage;

/// Which reflection model `render_spectral` evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RenderMode {
    /// `E = e (1 − ρ_f)² R_∞ + e ρ_f`.
    #[default]
    Eq1,
    /// `E = e R_∞` where `Ω` holds, `E = e` elsewhere.
    Eq3,
}

impl RenderMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "eq1" => Some(Self::Eq1),
            "eq3" => Some(Self::Eq3),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Eq1 => "eq1",
            Self::Eq3 => "eq3",
        }
    }
}

/// Rasterized scene: every per-pixel table the renderer needs.
///
/// Illumination is `e(λ, p) = Σ_k a[p][k] s_k(λ)` and the material term is
/// `R_∞(λ, p) = Σ_m w[p][m] R_m(λ)`, so smooth transitions are convex
/// blends of the named spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    width: usize,
    height: usize,
    wavelengths: Wavelengths,
    illuminants: Vec<Vec<f64>>,
    illumination: Vec<f64>,
    materials: Vec<Vec<f64>>,
    material_field: Vec<f64>,
    fresnel: Vec<f64>,
    omega: Vec<bool>,
    labels: Vec<Region>,
    material_edge: Vec<bool>,
    illumination_edge: Vec<bool>,
}

/// Raw tables for [`SceneSpec::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTables {
    pub width: usize,
    pub height: usize,
    pub wavelengths: Wavelengths,
    pub illuminants: Vec<Vec<f64>>,
    /// `width * height * illuminants.len()` non-negative weights.
    pub illumination: Vec<f64>,
    pub materials: Vec<Vec<f64>>,
    /// `width * height * materials.len()` non-negative weights summing to 1.
    pub material_field: Vec<f64>,
    pub fresnel: Vec<f64>,
    pub omega: Vec<bool>,
    pub labels: Vec<Region>,
    pub material_edge: Vec<bool>,
    pub illumination_edge: Vec<bool>,
}

fn bad(msg: impl Into<String>) -> SynthError {
    SynthError::Invalid(msg.into())
}

impl SceneSpec {
    pub fn new(t: SceneTables) -> Result<Self, SynthError> {
        let n = t.width * t.height;
        if n == 0 {
            return Err(bad(format!("scene is {}x{}", t.width, t.height)));
        }
        let nl = t.wavelengths.len();
        if t.illuminants.is_empty() || t.materials.is_empty() {
            return Err(bad("scene needs at least one illuminant and one material"));
        }
        for (k, s) in t.illuminants.iter().enumerate() {
            if s.len() != nl || s.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(bad(format!(
                    "illuminant {k} is not a non-negative spectrum on the grid"
                )));
            }
        }
        for (m, r) in t.materials.iter().enumerate() {
            if r.len() != nl || r.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(bad(format!("material {m} reflectance leaves [0, 1]")));
            }
        }
        let (ni, nm) = (t.illuminants.len(), t.materials.len());
        if t.illumination.len() != n * ni || t.material_field.len() != n * nm {
            return Err(bad("per-pixel weight tables have the wrong length"));
        }
        if t.illumination.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(bad("illumination weights must be finite and non-negative"));
        }
        for (p, w) in t.material_field.chunks_exact(nm).enumerate() {
            let sum: f64 = w.iter().sum();
            if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(bad(format!(
                    "material weights at pixel {p} are not a convex blend"
                )));
            }
        }
        if t.fresnel.len() != n || t.fresnel.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(bad("fresnel table must hold one value in [0, 1] per pixel"));
        }
        for len in [
            t.omega.len(),
            t.labels.len(),
            t.material_edge.len(),
            t.illumination_edge.len(),
        ] {
            if len != n {
                return Err(bad("per-pixel tables have the wrong length"));
            }
        }
        Ok(Self {
            width: t.width,
            height: t.height,
            wavelengths: t.wavelengths,
            illuminants: t.illuminants,
            illumination: t.illumination,
            materials: t.materials,
            material_field: t.material_field,
            fresnel: t.fresnel,
            omega: t.omega,
            labels: t.labels,
            material_edge: t.material_edge,
            illumination_edge: t.illumination_edge,
        })
    }

    /// Builds a scene whose pixels each use a single material, given by id.
    #[allow(clippy::too_many_arguments)]
    pub fn from_material_ids(
        width: usize,
        height: usize,
        wavelengths: Wavelengths,
        illuminants: Vec<Vec<f64>>,
        illumination: Vec<f64>,
        materials: Vec<Vec<f64>>,
        ids: &[usize],
        fresnel: Vec<f64>,
        omega: Vec<bool>,
        labels: Vec<Region>,
    ) -> Result<Self, SynthError> {
        let nm = materials.len();
        let mut field = vec![0.0; ids.len() * nm];
        for (p, &id) in ids.iter().enumerate() {
            if id >= nm {
                return Err(SynthError::UnknownMaterial(id));
            }
            field[p * nm + id] = 1.0;
        }
        let n = width * height;
        Self::new(SceneTables {
            width,
            height,
            wavelengths,
            illuminants,
            illumination,
            materials,
            material_field: field,
            fresnel,
            omega,
            labels,
            material_edge: vec![false; n],
            illumination_edge: vec![false; n],
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn wavelengths(&self) -> &Wavelengths {
        &self.wavelengths
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn fresnel(&self) -> &[f64] {
        &self.fresnel
    }

    pub fn omega(&self) -> &[bool] {
        &self.omega
    }

    /// Pixels near a material transition.
    pub fn material_edge(&self) -> &[bool] {
        &self.material_edge
    }

    /// Pixels near or inside an illumination color change.
    pub fn illumination_edge(&self) -> &[bool] {
        &self.illumination_edge
    }

    pub fn illumination_weights(&self, pixel: usize) -> &[f64] {
        let k = self.illuminants.len();
        &self.illumination[pixel * k..(pixel + 1) * k]
    }

    pub fn material_weights(&self, pixel: usize) -> &[f64] {
        let m = self.materials.len();
        &self.material_field[pixel * m..(pixel + 1) * m]
    }

    /// `e(λ)` at one pixel.
    pub fn illuminant_at(&self, pixel: usize) -> Vec<f64> {
        blend(&self.illuminants, self.illumination_weights(pixel))
    }

    /// `R_∞(λ)` at one pixel.
    pub fn reflectance_at(&self, pixel: usize) -> Vec<f64> {
        blend(&self.materials, self.material_weights(pixel))
    }

    /// True when every pixel's illuminant is a positive multiple of one
    /// spectrum, so illumination carries no color change.
    pub fn has_uniform_illuminant_color(&self) -> bool {
        let first = normalized(&self.illuminant_at(0));
        (1..self.width * self.height).all(|p| {
            normalized(&self.illuminant_at(p))
                .iter()
                .zip(&first)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
        })
    }
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter().map(|x| x / s).collect()
    } else {
        v.to_vec()
    }
}

fn blend(basis: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (s, w) in basis.iter().zip(weights) {
        if *w != 0.0 {
            for (o, v) in out.iter_mut().zip(s) {
                *o += w * v;
            }
        }
    }
    out
}

/// Per-pixel spectral radiance, pixel-major: `radiance[p * L + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralStack {
    pub width: usize,
    pub height: usize,
    pub wavelengths: Wavelengths,
    pub radiance: Vec<f64>,
}

impl SpectralStack {
    pub fn at(&self, pixel: usize) -> &[f64] {
        let l = self.wavelengths.len();
        &self.radiance[pixel * l..(pixel + 1) * l]
    }
}

pub fn render_spectral(spec: &SceneSpec, mode: RenderMode) -> SpectralStack {
    let nl = spec.wavelengths.len();
    let mut radiance = vec![0.0; spec.width * spec.height * nl];
    radiance
        .par_chunks_mut(nl)
        .enumerate()
        .for_each(|(p, out)| {
            let e = spec.illuminant_at(p);
            let r = spec.reflectance_at(p);
            let rho = spec.fresnel[p];
            for l in 0..nl {
                out[l] = match mode {
                    RenderMode::Eq1 => {
                        let body = 1.0 - rho;
                        e[l] * body * body * r[l] + e[l] * rho
                    }
                    RenderMode::Eq3 if spec.omega[p] => e[l] * r[l],
                    RenderMode::Eq3 => e[l],
                };
            }
        });
    SpectralStack {
        width: spec.width,
        height: spec.height,
        wavelengths: spec.wavelengths.clone(),
        radiance,
    }
}

/// Sensor band centres for R, G, B in nanometres.
pub const SENSOR_CENTERS: [f64; 3] = [600.0, 540.0, 450.0];
/// Shared standard deviation of the Gaussian sensor bands.
pub const SENSOR_WIDTH: f64 = 40.0;

/// Exposure applied after integration. The final scale never lets a
/// channel exceed 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exposure {
    /// Scale by `1 / max channel`.
    Auto,
    /// Scale by `min(gain, 1 / max channel)`.
    Gain(f64),
}

impl Default for Exposure {
    fn default() -> Self {
        Self::Gain(1.0)
    }
}

/// Per-band quadrature weights, normalized to unit total so that a flat
/// spectrum `v` integrates to exactly `v` in every channel.
pub fn sensor_weights(grid: &Wavelengths) -> [Vec<f64>; 3] {
    let trap = grid.trapezoid_weights();
    SENSOR_CENTERS.map(|c| {
        let raw: Vec<f64> = grid
            .samples()
            .iter()
            .zip(&trap)
            .map(|(l, t)| {
                let z = (l - c) / SENSOR_WIDTH;
                t * (-0.5 * z * z).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    })
}

pub fn spectral_to_rgb(stack: &SpectralStack, exposure: Exposure) -> RgbImage {
    let weights = sensor_weights(&stack.wavelengths);
    let nl = stack.wavelengths.len();
    let mut raw: Vec<f64> = stack
        .radiance
        .par_chunks(nl)
        .flat_map_iter(|e| {
            weights
                .iter()
                .map(move |w| w.iter().zip(e).map(|(a, b)| a * b).sum::<f64>())
        })
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 {
        match exposure {
            Exposure::Auto => 1.0 / max,
            Exposure::Gain(g) => g.min(1.0 / max),
        }
    } else {
        1.0
    };
    if scale != 1.0 {
        for v in &mut raw {
            *v = (*v * scale).min(1.0);
        }
    }
    RgbImage::new(stack.width, stack.height, raw).expect("radiance is finite and normalized")
}
