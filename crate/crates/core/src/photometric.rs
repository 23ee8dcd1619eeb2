//! Gaussian color model, scale-space derivatives and the illumination
//! invariant `N`.
//!
//! The invariant is built from the spectral measurements `(E, E_λ, E_λλ)`:
//!
//! ```text
//! N_λx  = (E_λx E − E_λ E_x) / E²
//! N_λλx = (E_λλx E² − E_λλ E_x E − 2 E_λx E_λ E + 2 E_λ² E_x) / E³
//! N     = sqrt(N_λx² + N_λλx² + N_λy² + N_λλy²)
//! ```
//!
//! Spatial derivatives are Gaussian derivative convolutions with mirror
//! padding. For a spatially uniform illuminant and a reflectance that
//! factors as `R(λ)·C(x)`, every component cancels exactly, so `N` only
//! responds to changes in illumination color.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{Plane, RgbImage};

/// Rows map `(R, G, B)` to `(E, E_λ, E_λλ)`.
pub const GAUSSIAN_COLOR_MODEL: [[f64; 3]; 3] =
    [[0.06, 0.63, 0.27], [0.3, 0.04, -0.35], [0.34, -0.6, 0.17]];

pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_GUARD: f64 = 1e-4;

/// Kernels are truncated at `±ceil(TRUNCATION * sigma)` taps.
pub const TRUNCATION: f64 = 4.0;

/// Applies the Gaussian color model to a single pixel.
#[inline]
pub fn gaussian_color(rgb: [f64; 3]) -> [f64; 3] {
    let m = &GAUSSIAN_COLOR_MODEL;
    [
        m[0][0] * rgb[0] + m[0][1] * rgb[1] + m[0][2] * rgb[2],
        m[1][0] * rgb[0] + m[1][1] * rgb[1] + m[1][2] * rgb[2],
        m[2][0] * rgb[0] + m[2][1] * rgb[1] + m[2][2] * rgb[2],
    ]
}

/// Per-pixel `(E, E_λ, E_λλ)` planes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralImage {
    pub e: Plane,
    pub e_lambda: Plane,
    pub e_lambda2: Plane,
}

impl SpectralImage {
    pub fn width(&self) -> usize {
        self.e.width()
    }

    pub fn height(&self) -> usize {
        self.e.height()
    }
}

pub fn rgb_to_gaussian(img: &RgbImage) -> SpectralImage {
    let (w, h) = (img.width(), img.height());
    let mut planes = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in img.pixels() {
        let g = gaussian_color(px);
        for (plane, v) in planes.iter_mut().zip(g) {
            plane.push(v);
        }
    }
    let [e, el, ell] = planes;
    // Dimensions come from a validated RgbImage.
    SpectralImage {
        e: Plane::new(w, h, e).expect("valid dims"),
        e_lambda: Plane::new(w, h, el).expect("valid dims"),
        e_lambda2: Plane::new(w, h, ell).expect("valid dims"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Sampled Gaussian and first-derivative-of-Gaussian taps.
///
/// Only the non-negative half is stored; both kernels are evaluated as
/// symmetric (smoothing) or antisymmetric (derivative) pair sums so that
/// mirroring the input mirrors the output bit for bit.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    pub sigma: f64,
    pub radius: usize,
    /// `smooth[k]` for `k = 0..=radius`, normalized so the full kernel sums to 1.
    pub smooth: Vec<f64>,
    /// `deriv[k]` for `k = 0..=radius` (`deriv[0] == 0`), normalized to unit
    /// first moment so a unit ramp differentiates to exactly 1.
    pub deriv: Vec<f64>,
}

impl GaussianKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        let radius = ((TRUNCATION * sigma).ceil() as usize).max(1);
        let s2 = sigma * sigma;
        let raw: Vec<f64> = (0..=radius)
            .map(|k| {
                let x = k as f64;
                (-x * x / (2.0 * s2)).exp()
            })
            .collect();

        let total = raw[0] + 2.0 * raw[1..].iter().sum::<f64>();
        let smooth: Vec<f64> = raw.iter().map(|g| g / total).collect();

        // response(x) = Σ_k deriv[k] (f(x + k) − f(x − k)); ramp ⇒ 2 Σ k deriv[k]
        let mut deriv: Vec<f64> = raw
            .iter()
            .enumerate()
            .map(|(k, g)| k as f64 / s2 * g)
            .collect();
        let moment = 2.0
            * deriv
                .iter()
                .enumerate()
                .map(|(k, d)| k as f64 * d)
                .sum::<f64>();
        for d in &mut deriv {
            *d /= moment;
        }

        Ok(Self {
            sigma,
            radius,
            smooth,
            deriv,
        })
    }
}

/// Reflect-without-repeat index: `-1 → 1`, `n → n − 2`.
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m >= n as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Maps padded positions `0..n + 2r` onto source indices.
fn padded_lookup(n: usize, radius: usize) -> Vec<usize> {
    (0..n + 2 * radius)
        .map(|p| reflect(p as isize - radius as isize, n))
        .collect()
}

#[derive(Clone, Copy)]
enum Pass {
    Smooth,
    Derive,
}

fn filter_rows(src: &[f64], width: usize, kernel: &GaussianKernel, pass: Pass) -> Vec<f64> {
    let r = kernel.radius;
    let lut = padded_lookup(width, r);
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(width)
        .zip(src.par_chunks(width))
        .for_each(|(dst, row)| {
            for (x, o) in dst.iter_mut().enumerate() {
                let c = x + r;
                *o = match pass {
                    Pass::Smooth => {
                        let mut acc = kernel.smooth[0] * row[x];
                        for k in 1..=r {
                            acc += kernel.smooth[k] * (row[lut[c - k]] + row[lut[c + k]]);
                        }
                        acc
                    }
                    Pass::Derive => {
                        let mut acc = 0.0;
                        for k in 1..=r {
                            acc += kernel.deriv[k] * (row[lut[c + k]] - row[lut[c - k]]);
                        }
                        acc
                    }
                };
            }
        });
    out
}

fn filter_cols(
    src: &[f64],
    width: usize,
    height: usize,
    kernel: &GaussianKernel,
    pass: Pass,
) -> Vec<f64> {
    let r = kernel.radius;
    let lut = padded_lookup(height, r);
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, dst)| {
        let c = y + r;
        let row = |yy: usize| &src[yy * width..(yy + 1) * width];
        match pass {
            Pass::Smooth => {
                let g0 = kernel.smooth[0];
                for (o, v) in dst.iter_mut().zip(row(y)) {
                    *o = g0 * v;
                }
                for k in 1..=r {
                    let (above, below) = (row(lut[c - k]), row(lut[c + k]));
                    let g = kernel.smooth[k];
                    for x in 0..width {
                        dst[x] += g * (above[x] + below[x]);
                    }
                }
            }
            Pass::Derive => {
                for k in 1..=r {
                    let (above, below) = (row(lut[c - k]), row(lut[c + k]));
                    let d = kernel.deriv[k];
                    for x in 0..width {
                        dst[x] += d * (below[x] - above[x]);
                    }
                }
            }
        }
    });
    out
}

/// A spatial derivative of a plane at scale `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativePlane {
    pub axis: Axis,
    pub sigma: f64,
    pub plane: Plane,
}

/// First-order Gaussian derivative along `axis`, Gaussian smoothing of the
/// same scale along the other axis. Positive x points right, positive y down.
pub fn gaussian_derivative(plane: &Plane, sigma: f64, axis: Axis) -> Result<DerivativePlane> {
    let kernel = GaussianKernel::new(sigma)?;
    plane.check_finite("input plane")?;
    Ok(DerivativePlane {
        axis,
        sigma,
        plane: derivative_with(plane, &kernel, axis),
    })
}

fn derivative_with(plane: &Plane, kernel: &GaussianKernel, axis: Axis) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    let data = match axis {
        Axis::Horizontal => {
            let d = filter_rows(plane.data(), w, kernel, Pass::Derive);
            filter_cols(&d, w, h, kernel, Pass::Smooth)
        }
        Axis::Vertical => {
            let d = filter_cols(plane.data(), w, h, kernel, Pass::Derive);
            filter_rows(&d, w, kernel, Pass::Smooth)
        }
    };
    Plane::new(w, h, data).expect("shape preserved")
}

/// The four components that make up `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantComponents {
    pub lambda_x: Plane,
    pub lambda2_x: Plane,
    pub lambda_y: Plane,
    pub lambda2_y: Plane,
}

impl InvariantComponents {
    pub fn planes(&self) -> [&Plane; 4] {
        [
            &self.lambda_x,
            &self.lambda2_x,
            &self.lambda_y,
            &self.lambda2_y,
        ]
    }
}

/// Evaluates the first- and second-order spectral components of the
/// invariant in both spatial directions. `E` is replaced by `max(E, eps)`
/// in every denominator.
pub fn invariant_components(
    spec: &SpectralImage,
    sigma: f64,
    eps: f64,
) -> Result<InvariantComponents> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidGuard(eps));
    }
    if !(spec.e.same_shape(&spec.e_lambda) && spec.e.same_shape(&spec.e_lambda2)) {
        return Err(Error::DimensionMismatch(
            "spectral planes differ in size".into(),
        ));
    }
    spec.e.check_finite("E plane")?;
    spec.e_lambda.check_finite("E_lambda plane")?;
    spec.e_lambda2.check_finite("E_lambda_lambda plane")?;
    let kernel = GaussianKernel::new(sigma)?;

    let along = |axis: Axis| -> (Plane, Plane) {
        let e_d = derivative_with(&spec.e, &kernel, axis);
        let el_d = derivative_with(&spec.e_lambda, &kernel, axis);
        let ell_d = derivative_with(&spec.e_lambda2, &kernel, axis);
        let n = spec.e.len();
        let mut first = vec![0.0; n];
        let mut second = vec![0.0; n];
        first
            .par_iter_mut()
            .zip(second.par_iter_mut())
            .enumerate()
            .for_each(|(i, (n1, n2))| {
                let e = spec.e.data()[i];
                let el = spec.e_lambda.data()[i];
                let ell = spec.e_lambda2.data()[i];
                let ex = e_d.data()[i];
                let elx = el_d.data()[i];
                let ellx = ell_d.data()[i];
                let g = e.max(eps);
                *n1 = (elx * e - el * ex) / (g * g);
                *n2 = (ellx * e * e - ell * ex * e - 2.0 * elx * el * e + 2.0 * el * el * ex)
                    / (g * g * g);
            });
        let (w, h) = (spec.width(), spec.height());
        (
            Plane::new(w, h, first).expect("shape"),
            Plane::new(w, h, second).expect("shape"),
        )
    };

    let (lambda_x, lambda2_x) = along(Axis::Horizontal);
    let (lambda_y, lambda2_y) = along(Axis::Vertical);
    Ok(InvariantComponents {
        lambda_x,
        lambda2_x,
        lambda_y,
        lambda2_y,
    })
}

/// Non-negative invariant map `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMap {
    plane: Plane,
}

impl InvariantMap {
    /// Wraps precomputed values; they must be finite and non-negative.
    pub fn from_plane(plane: Plane) -> Result<Self> {
        plane.check_finite("invariant")?;
        if let Some(v) = plane.data().iter().find(|v| **v < 0.0) {
            return Err(Error::DimensionMismatch(format!(
                "invariant values must be non-negative, found {v}"
            )));
        }
        Ok(Self { plane })
    }

    pub fn width(&self) -> usize {
        self.plane.width()
    }

    pub fn height(&self) -> usize {
        self.plane.height()
    }

    pub fn values(&self) -> &[f64] {
        self.plane.data()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.plane.get(x, y)
    }

    pub fn as_plane(&self) -> &Plane {
        &self.plane
    }

    pub fn into_plane(self) -> Plane {
        self.plane
    }
}

/// Pointwise Euclidean norm of four component planes.
pub fn combine_invariant(components: [&Plane; 4]) -> Result<InvariantMap> {
    let first = components[0];
    if components.iter().any(|p| !p.same_shape(first)) {
        return Err(Error::DimensionMismatch(
            "invariant components differ in size".into(),
        ));
    }
    let data: Vec<f64> = (0..first.len())
        .into_par_iter()
        .map(|i| {
            let [a, b, c, d] = components.map(|p| p.data()[i]);
            (a * a + b * b + c * c + d * d).sqrt()
        })
        .collect();
    let plane = Plane::new(first.width(), first.height(), data)?;
    plane.check_finite("invariant")?;
    Ok(InvariantMap { plane })
}

/// Scale and guard for the invariant pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantParams {
    pub sigma: f64,
    pub eps: f64,
}

impl Default for InvariantParams {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            eps: DEFAULT_GUARD,
        }
    }
}

/// RGB image to invariant map in one call.
pub fn invariant(img: &RgbImage, params: InvariantParams) -> Result<InvariantMap> {
    let spec = rgb_to_gaussian(img);
    let comps = invariant_components(&spec, params.sigma, params.eps)?;
    combine_invariant(comps.planes())
}
