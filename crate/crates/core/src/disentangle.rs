//! Four-way degradation partition of a nighttime image.
//!
//! 1. Illuminance `L = max(R, G, B)` is clustered into three groups
//!    (darkness, well-lit, high-light) by ascending centroid.
//! 2. The invariant `N` is standardized over the whole image; well-lit pixels
//!    with `N > mean(N)` become light effects and leave the well-lit mask.

use crate::error::{Error, Result};
use crate::image::{Plane, RgbImage};
use crate::kmeans::kmeans_1d;
use crate::photometric::{invariant, InvariantMap, InvariantParams};

/// Number of illuminance clusters.
pub const CLUSTERS: usize = 3;
pub const DEFAULT_MAX_ITERS: usize = 300;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Region {
    Darkness = 0,
    WellLit = 1,
    LightEffects = 2,
    HighLight = 3,
}

impl Region {
    pub const ALL: [Region; 4] = [
        Region::Darkness,
        Region::WellLit,
        Region::LightEffects,
        Region::HighLight,
    ];

    pub fn from_u8(v: u8) -> Option<Region> {
        Self::ALL.get(v as usize).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Region::Darkness => "darkness",
            Region::WellLit => "well_lit",
            Region::LightEffects => "light_effects",
            Region::HighLight => "high_light",
        }
    }

    pub fn from_name(name: &str) -> Option<Region> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Display color: blue, light blue, green, yellow.
    pub fn palette(self) -> [u8; 3] {
        match self {
            Region::Darkness => [0, 0, 255],
            Region::WellLit => [128, 170, 255],
            Region::LightEffects => [0, 200, 0],
            Region::HighLight => [255, 230, 0],
        }
    }
}

/// Per-pixel maximum RGB channel.
#[derive(Debug, Clone, PartialEq)]
pub struct IlluminanceMap {
    plane: Plane,
}

impl IlluminanceMap {
    pub fn width(&self) -> usize {
        self.plane.width()
    }

    pub fn height(&self) -> usize {
        self.plane.height()
    }

    pub fn values(&self) -> &[f64] {
        self.plane.data()
    }

    /// Wraps raw luminances; values must lie in `[0, 1]`.
    pub fn from_plane(plane: Plane) -> Result<Self> {
        if let Some((index, &value)) = plane
            .data()
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::ChannelOutOfRange { index, value });
        }
        Ok(Self { plane })
    }
}

pub fn illuminance(img: &RgbImage) -> IlluminanceMap {
    let data = img.pixels().map(|[r, g, b]| r.max(g).max(b)).collect();
    IlluminanceMap {
        plane: Plane::new(img.width(), img.height(), data).expect("valid dims"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    width: usize,
    height: usize,
    label: Region,
    bits: Vec<bool>,
}

impl RegionMask {
    pub fn new(width: usize, height: usize, label: Region, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} bits for a {width}x{height} image",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            label,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize, label: Region) -> Self {
        Self {
            width,
            height,
            label,
            bits: vec![false; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn label(&self) -> Region {
        self.label
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_subset_of(&self, other: &RegionMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }
}

/// Output of the illuminance clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansPartition {
    pub darkness: RegionMask,
    pub well_lit: RegionMask,
    pub high_light: RegionMask,
    /// Ascending centroids of darkness, well-lit and high-light; `None` for
    /// clusters left empty by degenerate inputs.
    pub centroids: [Option<f64>; CLUSTERS],
    pub iterations: usize,
    pub objective_history: Vec<f64>,
}

pub fn kmeans_partition(
    l: &IlluminanceMap,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<KMeansPartition> {
    let (w, h) = (l.width(), l.height());
    let km = kmeans_1d(l.values(), CLUSTERS, seed, max_iters, tol)?;
    let mut centroids = [None; CLUSTERS];
    for (slot, c) in centroids.iter_mut().zip(&km.centroids) {
        *slot = Some(*c);
    }
    let mask = |cluster: u8, label| {
        RegionMask::new(
            w,
            h,
            label,
            km.assignments.iter().map(|a| *a == cluster).collect(),
        )
        .expect("assignments cover the image")
    };
    Ok(KMeansPartition {
        darkness: mask(0, Region::Darkness),
        well_lit: mask(1, Region::WellLit),
        high_light: mask(2, Region::HighLight),
        centroids,
        iterations: km.iterations,
        objective_history: km.objective_history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LightEffects {
    pub mask: RegionMask,
    pub well_lit_refined: RegionMask,
    /// `max((N − mean) / std, 0)` over the whole image.
    pub soft: Plane,
    pub mean: f64,
    pub std_dev: f64,
}

/// Carves light effects out of the well-lit mask. Statistics use every
/// pixel; a flat invariant yields no light effects.
pub fn extract_light_effects(n: &InvariantMap, well_lit: &RegionMask) -> Result<LightEffects> {
    let (w, h) = (n.width(), n.height());
    if well_lit.width() != w || well_lit.height() != h {
        return Err(Error::DimensionMismatch(format!(
            "invariant is {w}x{h}, well-lit mask is {}x{}",
            well_lit.width(),
            well_lit.height()
        )));
    }
    let values = n.values();
    let count = values.len() as f64;
    let (mean, std_dev) = if values.iter().all(|v| *v == values[0]) {
        // Summation rounding would otherwise leave a spurious ulp-sized std.
        (values[0], 0.0)
    } else {
        let mean = values.iter().sum::<f64>() / count;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
        (mean, var.sqrt())
    };

    let soft: Vec<f64> = if std_dev > 0.0 {
        values
            .iter()
            .map(|v| ((v - mean) / std_dev).max(0.0))
            .collect()
    } else {
        vec![0.0; values.len()]
    };
    let le_bits: Vec<bool> = soft
        .iter()
        .zip(well_lit.bits())
        .map(|(r, m)| *r > 0.0 && *m)
        .collect();
    let refined: Vec<bool> = well_lit
        .bits()
        .iter()
        .zip(&le_bits)
        .map(|(m, le)| *m && !le)
        .collect();
    Ok(LightEffects {
        mask: RegionMask::new(w, h, Region::LightEffects, le_bits)?,
        well_lit_refined: RegionMask::new(w, h, Region::WellLit, refined)?,
        soft: Plane::new(w, h, soft)?,
        mean,
        std_dev,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisentangleConfig {
    pub sigma: f64,
    pub eps: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for DisentangleConfig {
    fn default() -> Self {
        let inv = InvariantParams::default();
        Self {
            sigma: inv.sigma,
            eps: inv.eps,
            seed: 0,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }
}

/// Exhaustive per-pixel partition into the four degradation regions.
#[derive(Debug, Clone, PartialEq)]
pub struct DisentanglementMap {
    width: usize,
    height: usize,
    labels: Vec<Region>,
    masks: [RegionMask; 4],
    pub centroids: [Option<f64>; CLUSTERS],
    /// Soft light-effect response, when computed by [`disentangle`].
    pub soft_response: Option<Plane>,
}

impl DisentanglementMap {
    pub fn from_labels(width: usize, height: usize, labels: Vec<Region>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        if labels.len() != width * height {
            return Err(Error::DataLength {
                width,
                height,
                expected: width * height,
                actual: labels.len(),
            });
        }
        let masks = Region::ALL.map(|r| RegionMask {
            width,
            height,
            label: r,
            bits: labels.iter().map(|l| *l == r).collect(),
        });
        Ok(Self {
            width,
            height,
            labels,
            masks,
            centroids: [None; CLUSTERS],
            soft_response: None,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Region] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> Region {
        self.labels[y * self.width + x]
    }

    pub fn mask(&self, region: Region) -> &RegionMask {
        &self.masks[region.index()]
    }

    pub fn masks(&self) -> &[RegionMask; 4] {
        &self.masks
    }

    pub fn counts(&self) -> [usize; 4] {
        let mut c = [0; 4];
        for l in &self.labels {
            c[l.index()] += 1;
        }
        c
    }
}

/// Full pipeline: illuminance clustering, invariant, light-effect carving.
pub fn disentangle(img: &RgbImage, cfg: &DisentangleConfig) -> Result<DisentanglementMap> {
    let l = illuminance(img);
    let parts = kmeans_partition(&l, cfg.seed, cfg.max_iters, cfg.tol)?;
    let n = invariant(
        img,
        InvariantParams {
            sigma: cfg.sigma,
            eps: cfg.eps,
        },
    )?;
    let le = extract_light_effects(&n, &parts.well_lit)?;

    let labels: Vec<Region> = (0..img.len())
        .map(|i| {
            if parts.darkness.contains(i) {
                Region::Darkness
            } else if parts.high_light.contains(i) {
                Region::HighLight
            } else if le.mask.contains(i) {
                Region::LightEffects
            } else {
                Region::WellLit
            }
        })
        .collect();
    let mut map = DisentanglementMap::from_labels(img.width(), img.height(), labels)?;
    map.centroids = parts.centroids;
    map.soft_response = Some(le.soft);
    Ok(map)
}
