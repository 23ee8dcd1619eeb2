//! Text scene descriptions.
//!
//! A scene file is a list of `key = value` lines; `#` starts a comment.
//!
//! ```text
//! width = 128                       # required, base pixels
//! height = 64                       # required
//! wavelengths = 400 700 31          # optional: min max count (count >= 16)
//! mode = eq3                        # optional: eq1 | eq3
//! exposure = 1                      # optional: auto | gain > 0
//!
//! illuminant.warm = gaussian 620 90 1.0 0.2
//! material.paint = flat 0.5
//! material.dark = scaled paint 0.1
//!
//! layer.0.shape = all               # the lowest layer must be `all`
//! layer.0.material = paint
//! layer.0.illuminant = warm
//! layer.0.label = well_lit
//! layer.1.shape = disk 64 32 10     # all | rect x0 y0 x1 y1 | disk cx cy r
//!                                   # | ring cx cy r0 r1 | halfplane px py nx ny
//! layer.1.edge = 2                  # sigmoid width; 0 for a hard edge
//! layer.1.illuminant = radial warm cool 64 32 0 10
//! layer.1.intensity = 0.8
//! layer.1.fresnel = 1
//! layer.1.omega = false
//! layer.1.label = light_effects
//! ```
//!
//! Spectra are `flat V`, `gaussian CENTER WIDTH PEAK [FLOOR]` (the value
//! `FLOOR + PEAK·exp(−z²/2)` with `z = (λ − CENTER) / WIDTH`),
//! `table V1 .. Vn` (one value per grid sample) or `scaled NAME FACTOR`.
//! Illuminant fields are a name, `radial A B CX CY R0 R1` or
//! `linear A B X0 Y0 X1 Y1`; the blend goes from `A` to `B` along the
//! radius or segment.
//!
//! Layers are painted in ascending index. Each layer only overrides the
//! attributes it names, with coverage `1 / (1 + exp(d / edge))` for signed
//! distance `d` (negative inside). Discrete attributes (`omega`, `label`)
//! switch where coverage reaches one half. Halfplanes contain the points
//! with `(p − (px, py)) · (nx, ny) > 0`. Pixel `(i, j)` samples the point
//! `(i + 0.5, j + 0.5)`.
//!
//! Scene-pair files hold scene (a) as above; keys prefixed with
//! `variant.` override or extend it to form scene (b).

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::render::{Exposure, RenderMode, SceneSpec, SceneTables};
use super::spectrum::{SpectrumExpr, Wavelengths};
use super::SynthError;
use crate::disentangle::Region;

/// One sampled spectrum per named entry, in declaration order.
type Spectra = Vec<Vec<f64>>;

/// Extra half-width, in base pixels, of the band marked around a
/// transition on top of three sigmoid widths.
pub const EDGE_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    All,
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Disk { cx: f64, cy: f64, r: f64 },
    Ring { cx: f64, cy: f64, r0: f64, r1: f64 },
    HalfPlane { px: f64, py: f64, nx: f64, ny: f64 },
}

impl Shape {
    /// Signed distance, negative inside.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Shape::All => f64::NEG_INFINITY,
            Shape::Rect { x0, y0, x1, y1 } => {
                let dx = (x0 - x).max(x - x1);
                let dy = (y0 - y).max(y - y1);
                if dx <= 0.0 && dy <= 0.0 {
                    dx.max(dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
            Shape::Disk { cx, cy, r } => (x - cx).hypot(y - cy) - r,
            Shape::Ring { cx, cy, r0, r1 } => {
                let d = (x - cx).hypot(y - cy);
                (r0 - d).max(d - r1)
            }
            Shape::HalfPlane { px, py, nx, ny } => {
                let norm = nx.hypot(ny);
                -((x - px) * nx + (y - py) * ny) / norm
            }
        }
    }

    fn parse(text: &str) -> Result<Self, String> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let Some((&kind, args)) = toks.split_first() else {
            return Err("empty shape".into());
        };
        let nums = args
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("'{t}' is not a finite number"))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        let shape = match (kind, nums.as_slice()) {
            ("all", []) => Shape::All,
            ("rect", &[x0, y0, x1, y1]) if x1 > x0 && y1 > y0 => Shape::Rect { x0, y0, x1, y1 },
            ("disk", &[cx, cy, r]) if r > 0.0 => Shape::Disk { cx, cy, r },
            ("ring", &[cx, cy, r0, r1]) if r1 > r0 && r0 >= 0.0 => Shape::Ring { cx, cy, r0, r1 },
            ("halfplane", &[px, py, nx, ny]) if nx != 0.0 || ny != 0.0 => {
                Shape::HalfPlane { px, py, nx, ny }
            }
            ("all" | "rect" | "disk" | "ring" | "halfplane", _) => {
                return Err(format!("bad arguments for shape '{kind}'"))
            }
            _ => return Err(format!("unknown shape '{kind}'")),
        };
        Ok(shape)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IlluminantField {
    Named(String),
    Radial {
        from: String,
        to: String,
        cx: f64,
        cy: f64,
        r0: f64,
        r1: f64,
    },
    Linear {
        from: String,
        to: String,
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
}

impl IlluminantField {
    fn parse(text: &str) -> Result<Self, String> {
        let toks: Vec<&str> = text.split_whitespace().collect();
        let nums = |args: &[&str]| {
            args.iter()
                .map(|t| {
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| format!("'{t}' is not a finite number"))
                })
                .collect::<Result<Vec<f64>, String>>()
        };
        match toks.as_slice() {
            [name] => Ok(Self::Named(name.to_string())),
            ["radial", from, to, rest @ ..] if rest.len() == 4 => {
                let v = nums(rest)?;
                if v[3] <= v[2] {
                    return Err("radial blend needs r1 > r0".into());
                }
                Ok(Self::Radial {
                    from: from.to_string(),
                    to: to.to_string(),
                    cx: v[0],
                    cy: v[1],
                    r0: v[2],
                    r1: v[3],
                })
            }
            ["linear", from, to, rest @ ..] if rest.len() == 4 => {
                let v = nums(rest)?;
                if v[0] == v[2] && v[1] == v[3] {
                    return Err("linear blend needs two distinct points".into());
                }
                Ok(Self::Linear {
                    from: from.to_string(),
                    to: to.to_string(),
                    x0: v[0],
                    y0: v[1],
                    x1: v[2],
                    y1: v[3],
                })
            }
            _ => Err(format!("cannot parse illuminant field '{text}'")),
        }
    }

    fn names(&self) -> Vec<&str> {
        match self {
            Self::Named(n) => vec![n],
            Self::Radial { from, to, .. } | Self::Linear { from, to, .. } => vec![from, to],
        }
    }

    /// Blend position in `[0, 1]` toward the second illuminant.
    fn position(&self, x: f64, y: f64) -> f64 {
        match *self {
            Self::Named(_) => 0.0,
            Self::Radial { cx, cy, r0, r1, .. } => {
                (((x - cx).hypot(y - cy) - r0) / (r1 - r0)).clamp(0.0, 1.0)
            }
            Self::Linear { x0, y0, x1, y1, .. } => {
                let (dx, dy) = (x1 - x0, y1 - y0);
                (((x - x0) * dx + (y - y0) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub index: u32,
    pub shape: Shape,
    pub edge: f64,
    pub material: Option<String>,
    pub illuminant: Option<IlluminantField>,
    pub intensity: f64,
    pub fresnel: Option<f64>,
    pub omega: Option<bool>,
    pub label: Option<Region>,
    line: usize,
}

impl Layer {
    fn coverage(&self, d: f64) -> f64 {
        if self.edge > 0.0 {
            1.0 / (1.0 + (d / self.edge).exp())
        } else if d <= 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// Parametric scene, resolution independent.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub width: usize,
    pub height: usize,
    pub wavelengths: Wavelengths,
    pub mode: Option<RenderMode>,
    pub exposure: Exposure,
    pub illuminants: Vec<(String, SpectrumExpr)>,
    pub materials: Vec<(String, SpectrumExpr)>,
    pub layers: Vec<Layer>,
    lines: HashMap<String, usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    key: String,
    value: String,
    line: usize,
}

pub(crate) fn parse_entries(text: &str) -> Result<Vec<Entry>, SynthError> {
    let mut seen = HashMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| SynthError::parse(line, "expected 'key = value'"))?;
        let (key, value) = (k.trim(), v.trim());
        if key.is_empty() || value.is_empty() {
            return Err(SynthError::parse(line, "empty key or value"));
        }
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(SynthError::parse(
                line,
                format!("duplicate key '{key}' (first set on line {prev})"),
            ));
        }
        out.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    Ok(out)
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Default)]
struct LayerDraft {
    shape: Option<Shape>,
    edge: f64,
    material: Option<String>,
    illuminant: Option<IlluminantField>,
    intensity: Option<f64>,
    fresnel: Option<f64>,
    omega: Option<bool>,
    label: Option<Region>,
    line: usize,
}

fn positive_number(value: &str, line: usize, what: &str) -> Result<f64, SynthError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(SynthError::parse(
            line,
            format!("{what} must be a non-negative number, got '{value}'"),
        )),
    }
}

impl SceneDescription {
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let entries = parse_entries(text)?;
        if let Some(e) = entries.iter().find(|e| e.key.starts_with("variant.")) {
            return Err(SynthError::parse(
                e.line,
                "variant keys are only allowed in scene-pair files",
            ));
        }
        Self::from_entries(&entries)
    }

    pub(crate) fn from_entries(entries: &[Entry]) -> Result<Self, SynthError> {
        let mut width = None;
        let mut height = None;
        let mut wavelengths = None;
        let mut mode = None;
        let mut exposure = Exposure::default();
        let mut illuminants = Vec::new();
        let mut materials = Vec::new();
        let mut drafts: BTreeMap<u32, LayerDraft> = BTreeMap::new();
        let mut lines = HashMap::new();

        for Entry { key, value, line } in entries {
            let (line, value) = (*line, value.as_str());
            lines.insert(key.clone(), line);
            let err = |msg: String| SynthError::parse(line, msg);
            match key.as_str() {
                "width" | "height" => {
                    let v: usize = value
                        .parse()
                        .ok()
                        .filter(|v| *v > 0)
                        .ok_or_else(|| err(format!("{key} must be a positive integer")))?;
                    if key == "width" {
                        width = Some(v);
                    } else {
                        height = Some(v);
                    }
                }
                "wavelengths" => {
                    let t: Vec<&str> = value.split_whitespace().collect();
                    let parsed = match t.as_slice() {
                        [a, b, n] => match (a.parse::<f64>(), b.parse::<f64>(), n.parse::<usize>())
                        {
                            (Ok(a), Ok(b), Ok(n)) => Some((a, b, n)),
                            _ => None,
                        },
                        _ => None,
                    };
                    let (a, b, n) =
                        parsed.ok_or_else(|| err("wavelengths expects 'min max count'".into()))?;
                    wavelengths =
                        Some(Wavelengths::uniform(a, b, n).map_err(|e| err(e.to_string()))?);
                }
                "mode" => {
                    mode = Some(
                        RenderMode::parse(value)
                            .ok_or_else(|| err(format!("unknown mode '{value}'")))?,
                    )
                }
                "exposure" => {
                    exposure = if value == "auto" {
                        Exposure::Auto
                    } else {
                        match value.parse::<f64>() {
                            Ok(g) if g.is_finite() && g > 0.0 => Exposure::Gain(g),
                            _ => {
                                return Err(err(format!(
                                    "exposure must be 'auto' or a positive gain, got '{value}'"
                                )))
                            }
                        }
                    }
                }
                k if k.starts_with("illuminant.") || k.starts_with("material.") => {
                    let (kind, name) = k.split_once('.').expect("prefix checked");
                    if !valid_name(name) {
                        return Err(err(format!("invalid {kind} name '{name}'")));
                    }
                    let expr = SpectrumExpr::parse(value).map_err(err)?;
                    let list = if kind == "illuminant" {
                        &mut illuminants
                    } else {
                        &mut materials
                    };
                    list.push((name.to_string(), expr));
                }
                k if k.starts_with("layer.") => {
                    let rest = &k["layer.".len()..];
                    let (idx, field) = rest
                        .split_once('.')
                        .ok_or_else(|| err(format!("expected layer.N.FIELD, got '{k}'")))?;
                    let idx: u32 = idx
                        .parse()
                        .map_err(|_| err(format!("layer index '{idx}' is not an integer")))?;
                    let d = drafts.entry(idx).or_insert_with(|| LayerDraft {
                        line,
                        ..Default::default()
                    });
                    d.line = d.line.min(line);
                    match field {
                        "shape" => d.shape = Some(Shape::parse(value).map_err(err)?),
                        "edge" => d.edge = positive_number(value, line, "edge")?,
                        "material" => d.material = Some(value.to_string()),
                        "illuminant" => {
                            d.illuminant = Some(IlluminantField::parse(value).map_err(err)?)
                        }
                        "intensity" => {
                            d.intensity = Some(positive_number(value, line, "intensity")?)
                        }
                        "fresnel" => {
                            let v = positive_number(value, line, "fresnel")?;
                            if v > 1.0 {
                                return Err(err(format!("fresnel must lie in [0, 1], got {v}")));
                            }
                            d.fresnel = Some(v);
                        }
                        "omega" => {
                            d.omega = Some(match value {
                                "true" | "1" => true,
                                "false" | "0" => false,
                                _ => {
                                    return Err(err(format!(
                                        "omega must be true or false, got '{value}'"
                                    )))
                                }
                            })
                        }
                        "label" => {
                            d.label = Some(
                                Region::from_name(value)
                                    .ok_or_else(|| err(format!("unknown label '{value}'")))?,
                            )
                        }
                        _ => return Err(err(format!("unknown layer field '{field}'"))),
                    }
                }
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }

        let width = width.ok_or(SynthError::Missing("width".into()))?;
        let height = height.ok_or(SynthError::Missing("height".into()))?;
        if illuminants.is_empty() {
            return Err(SynthError::Missing("illuminant.NAME".into()));
        }
        if materials.is_empty() {
            return Err(SynthError::Missing("material.NAME".into()));
        }
        let mut layers = Vec::with_capacity(drafts.len());
        for (index, d) in drafts {
            let line = d.line;
            let shape = d
                .shape
                .ok_or_else(|| SynthError::parse(line, format!("layer {index} has no shape")))?;
            if d.intensity.is_some() && d.illuminant.is_none() {
                return Err(SynthError::parse(
                    line,
                    format!("layer {index} sets intensity without an illuminant"),
                ));
            }
            layers.push(Layer {
                index,
                shape,
                edge: d.edge,
                material: d.material,
                illuminant: d.illuminant,
                intensity: d.intensity.unwrap_or(1.0),
                fresnel: d.fresnel,
                omega: d.omega,
                label: d.label,
                line,
            });
        }
        let Some(base) = layers.first() else {
            return Err(SynthError::Missing("layer.0.shape".into()));
        };
        if base.shape != Shape::All
            || base.material.is_none()
            || base.illuminant.is_none()
            || base.label.is_none()
        {
            return Err(SynthError::parse(
                base.line,
                "the lowest layer must be 'all' and set material, illuminant and label",
            ));
        }

        let desc = Self {
            width,
            height,
            wavelengths: wavelengths.unwrap_or_default(),
            mode,
            exposure,
            illuminants,
            materials,
            layers,
            lines,
        };
        // Resolve names and spectra now so errors carry line numbers.
        desc.resolve()?;
        Ok(desc)
    }

    fn line_of(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    fn resolve_list(
        &self,
        kind: &str,
        list: &[(String, SpectrumExpr)],
    ) -> Result<Vec<Vec<f64>>, SynthError> {
        let index: HashMap<&str, usize> = list
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.as_str(), i))
            .collect();
        let mut out = Vec::with_capacity(list.len());
        for (name, _) in list {
            let line = self.line_of(&format!("{kind}.{name}"));
            let mut factor = 1.0;
            let mut current = name.as_str();
            let mut hops = 0;
            let values = loop {
                let expr = &list[index[current]].1;
                match expr {
                    SpectrumExpr::Scaled { base, factor: f } => {
                        factor *= f;
                        current = index
                            .get_key_value(base.as_str())
                            .map(|(k, _)| *k)
                            .ok_or_else(|| {
                                SynthError::parse(line, format!("unknown {kind} '{base}'"))
                            })?;
                        hops += 1;
                        if hops > list.len() {
                            return Err(SynthError::parse(
                                line,
                                format!("cyclic 'scaled' reference in {kind} '{name}'"),
                            ));
                        }
                    }
                    other => {
                        break other
                            .eval_direct(&self.wavelengths)
                            .map_err(|m| SynthError::parse(line, m))?
                    }
                }
            };
            let values: Vec<f64> = values.into_iter().map(|v| v * factor).collect();
            let ok = if kind == "material" {
                values.iter().all(|v| (0.0..=1.0).contains(v))
            } else {
                values.iter().all(|v| *v >= 0.0)
            };
            if !ok {
                let range = if kind == "material" {
                    "[0, 1]"
                } else {
                    "[0, inf)"
                };
                return Err(SynthError::parse(
                    line,
                    format!("{kind} '{name}' leaves {range} on the wavelength grid"),
                ));
            }
            out.push(values);
        }
        Ok(out)
    }

    fn resolve(&self) -> Result<(Spectra, Spectra), SynthError> {
        let ill = self.resolve_list("illuminant", &self.illuminants)?;
        let mat = self.resolve_list("material", &self.materials)?;
        for layer in &self.layers {
            if let Some(m) = &layer.material {
                if !self.materials.iter().any(|(n, _)| n == m) {
                    return Err(SynthError::parse(
                        self.line_of(&format!("layer.{}.material", layer.index)),
                        format!("unknown material '{m}'"),
                    ));
                }
            }
            if let Some(f) = &layer.illuminant {
                for n in f.names() {
                    if !self.illuminants.iter().any(|(k, _)| k == n) {
                        return Err(SynthError::parse(
                            self.line_of(&format!("layer.{}.illuminant", layer.index)),
                            format!("unknown illuminant '{n}'"),
                        ));
                    }
                }
            }
        }
        Ok((ill, mat))
    }

    /// Rasterizes at `factor` pixels per base pixel along each axis.
    pub fn rasterize(&self, factor: usize) -> Result<SceneSpec, SynthError> {
        if factor == 0 {
            return Err(SynthError::Invalid(
                "refinement factor must be at least 1".into(),
            ));
        }
        let (ill_spectra, mat_spectra) = self.resolve()?;
        let ill_index: HashMap<&str, usize> = self
            .illuminants
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.as_str(), i))
            .collect();
        let mat_index: HashMap<&str, usize> = self
            .materials
            .iter()
            .enumerate()
            .map(|(i, (n, _))| (n.as_str(), i))
            .collect();
        let (ni, nm) = (ill_spectra.len(), mat_spectra.len());
        let (w, h) = (self.width * factor, self.height * factor);
        let f = factor as f64;

        let layer_weights = |layer: &Layer, x: f64, y: f64| -> Option<(Vec<f64>, bool)> {
            let field = layer.illuminant.as_ref()?;
            let mut a = vec![0.0; ni];
            let t = field.position(x, y);
            let names = field.names();
            a[ill_index[names[0]]] += layer.intensity * (1.0 - t);
            if let Some(b) = names.get(1) {
                a[ill_index[b]] += layer.intensity * t;
            }
            Some((a, t > 0.0 && t < 1.0))
        };

        let pixels: Vec<PixelState> = (0..w * h)
            .into_par_iter()
            .map(|p| {
                let x = ((p % w) as f64 + 0.5) / f;
                let y = ((p / w) as f64 + 0.5) / f;
                let base = &self.layers[0];
                let mut st = PixelState {
                    illumination: layer_weights(base, x, y).expect("base has illuminant").0,
                    material: {
                        let mut m = vec![0.0; nm];
                        m[mat_index[base.material.as_deref().expect("base has material")]] = 1.0;
                        m
                    },
                    fresnel: base.fresnel.unwrap_or(0.0),
                    omega: base.omega.unwrap_or(true),
                    label: base.label.expect("base has label"),
                    material_edge: false,
                    illumination_edge: false,
                };
                if let Some((_, grad)) = layer_weights(base, x, y) {
                    st.illumination_edge = grad;
                }
                for layer in &self.layers[1..] {
                    let d = layer.shape.distance(x, y);
                    let alpha = layer.coverage(d);
                    let band =
                        layer.shape != Shape::All && d.abs() <= 3.0 * layer.edge + EDGE_MARGIN;
                    let full = alpha >= 1.0 - 1e-12;
                    if let Some(m) = &layer.material {
                        let id = mat_index[m.as_str()];
                        for (k, v) in st.material.iter_mut().enumerate() {
                            let target = if k == id { 1.0 } else { 0.0 };
                            *v = alpha * target + (1.0 - alpha) * *v;
                        }
                        if full {
                            st.material_edge = false;
                        }
                        st.material_edge |= band;
                    }
                    if let Some((a, grad)) = layer_weights(layer, x, y) {
                        for (v, t) in st.illumination.iter_mut().zip(&a) {
                            *v = alpha * t + (1.0 - alpha) * *v;
                        }
                        if full {
                            st.illumination_edge = false;
                        }
                        st.illumination_edge |= band || (grad && alpha >= 0.5);
                    }
                    if let Some(r) = layer.fresnel {
                        st.fresnel = alpha * r + (1.0 - alpha) * st.fresnel;
                    }
                    if alpha >= 0.5 {
                        if let Some(o) = layer.omega {
                            st.omega = o;
                        }
                        if let Some(l) = layer.label {
                            st.label = l;
                        }
                    }
                }
                // Blends are convex; renormalize away accumulated rounding.
                let s: f64 = st.material.iter().sum();
                st.material.iter_mut().for_each(|v| *v /= s);
                st.fresnel = st.fresnel.clamp(0.0, 1.0);
                st
            })
            .collect();

        let n = w * h;
        let mut t = SceneTables {
            width: w,
            height: h,
            wavelengths: self.wavelengths.clone(),
            illuminants: ill_spectra,
            illumination: Vec::with_capacity(n * ni),
            materials: mat_spectra,
            material_field: Vec::with_capacity(n * nm),
            fresnel: Vec::with_capacity(n),
            omega: Vec::with_capacity(n),
            labels: Vec::with_capacity(n),
            material_edge: Vec::with_capacity(n),
            illumination_edge: Vec::with_capacity(n),
        };
        for st in pixels {
            t.illumination.extend(st.illumination);
            t.material_field.extend(st.material);
            t.fresnel.push(st.fresnel);
            t.omega.push(st.omega);
            t.labels.push(st.label);
            t.material_edge.push(st.material_edge);
            t.illumination_edge.push(st.illumination_edge);
        }
        SceneSpec::new(t)
    }
}

struct PixelState {
    illumination: Vec<f64>,
    material: Vec<f64>,
    fresnel: f64,
    omega: bool,
    label: Region,
    material_edge: bool,
    illumination_edge: bool,
}

/// Scene (a) plus an optional variant (b).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePair {
    pub a: SceneDescription,
    pub b: Option<SceneDescription>,
}

impl ScenePair {
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let entries = parse_entries(text)?;
        let (variant, base): (Vec<Entry>, Vec<Entry>) = entries
            .into_iter()
            .partition(|e| e.key.starts_with("variant."));
        let a = SceneDescription::from_entries(&base)?;
        if variant.is_empty() {
            return Ok(Self { a, b: None });
        }
        let mut merged = base;
        for v in variant {
            let key = v.key["variant.".len()..].to_string();
            let entry = Entry { key, ..v };
            match merged.iter_mut().find(|e| e.key == entry.key) {
                Some(slot) => *slot = entry,
                None => merged.push(entry),
            }
        }
        let b = SceneDescription::from_entries(&merged)?;
        Ok(Self { a, b: Some(b) })
    }
}
