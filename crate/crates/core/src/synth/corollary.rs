use super::render::{render_spectral, spectral_to_rgb, RenderMode};
use super::scene::{SceneDescription, ScenePair};
use super::SynthError;
use crate::io::Report;
use crate::photometric::{invariant, InvariantParams, DEFAULT_GUARD, DEFAULT_SIGMA, TRUNCATION};

/// Largest accepted material/illumination response ratio.
pub const RATIO_THRESHOLD: f64 = 1e-2;
/// Required shrink factor of the material-edge response under refinement.
pub const REFINE_DECREASE: f64 = 2.0;
/// Largest accepted relative change of the illumination-edge response
/// under refinement.
pub const REFINE_STABILITY: f64 = 0.1;
/// Material responses at or below this fraction of the illumination
/// response are floating-point rounding; there is nothing left to shrink.
pub const ROUNDING_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryConfig {
    pub sigma: f64,
    pub eps: f64,
    /// Overrides the scene's own `mode`; `Eq3` when neither is set.
    pub mode: Option<RenderMode>,
    /// Also evaluate both scenes at this many pixels per base pixel.
    pub refine: Option<usize>,
}

impl Default for CorollaryConfig {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            eps: DEFAULT_GUARD,
            mode: None,
            refine: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorollaryStatus {
    Pass,
    /// Scene (b) has no illumination color change; the ratio is undefined.
    PassDegenerate,
    Fail,
}

impl CorollaryStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::PassDegenerate => "PASS-degenerate",
            Self::Fail => "FAIL",
        }
    }

    pub fn passed(self) -> bool {
        self != Self::Fail
    }
}

/// Responses at the refined resolution, in base-pixel units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refinement {
    pub factor: usize,
    pub material_edge_response: f64,
    pub illumination_edge_response: Option<f64>,
    /// Base over refined material response.
    pub material_decrease: f64,
    /// `|refined − base| / base` of the illumination response.
    pub illumination_change: Option<f64>,
    pub at_rounding_floor: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryReport {
    pub sigma: f64,
    pub eps: f64,
    pub mode: RenderMode,
    pub material_edge_response: f64,
    pub illumination_edge_response: Option<f64>,
    pub ratio: Option<f64>,
    pub refinement: Option<Refinement>,
    pub status: CorollaryStatus,
}

impl CorollaryReport {
    pub fn to_report(&self) -> Report {
        let mut r = Report::new();
        r.push_f64("sigma", self.sigma)
            .push_f64("eps", self.eps)
            .push("mode", self.mode.name())
            .push_f64("threshold", RATIO_THRESHOLD)
            .push_f64("material_edge_response", self.material_edge_response);
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:?}"));
        r.push(
            "illumination_edge_response",
            opt(self.illumination_edge_response),
        )
        .push("ratio", opt(self.ratio));
        if let Some(f) = &self.refinement {
            r.push("refine_factor", f.factor)
                .push_f64("refined_material_edge_response", f.material_edge_response)
                .push(
                    "refined_illumination_edge_response",
                    opt(f.illumination_edge_response),
                )
                .push_f64("material_decrease", f.material_decrease)
                .push("illumination_change", opt(f.illumination_change))
                .push("material_at_rounding_floor", f.at_rounding_floor)
                .push("refinement", if f.pass { "PASS" } else { "FAIL" });
        }
        r.push("status", self.status.name());
        r
    }
}

/// Max of `N`, in base-pixel units, over masked pixels at least the kernel
/// radius away from the border. `None` when no pixel qualifies.
fn edge_response(
    desc: &SceneDescription,
    factor: usize,
    mode: RenderMode,
    params: InvariantParams,
    use_illumination_edges: bool,
) -> Result<Option<f64>, SynthError> {
    let spec = desc.rasterize(factor)?;
    let rgb = spectral_to_rgb(&render_spectral(&spec, mode), desc.exposure);
    let n = invariant(&rgb, params)?;
    let margin = (TRUNCATION * params.sigma).ceil() as usize;
    let (w, h) = (spec.width(), spec.height());
    let mask = if use_illumination_edges {
        spec.illumination_edge()
    } else {
        spec.material_edge()
    };
    let mut best: Option<f64> = None;
    for y in margin..h.saturating_sub(margin) {
        for x in margin..w.saturating_sub(margin) {
            let p = y * w + x;
            if mask[p] {
                let v = n.values()[p];
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
    }
    Ok(best.map(|b| b * factor as f64))
}

fn illumination_is_degenerate(b: &SceneDescription) -> Result<bool, SynthError> {
    let spec = b.rasterize(1)?;
    Ok(spec.has_uniform_illuminant_color() || !spec.illumination_edge().iter().any(|e| *e))
}

/// Compares the invariant over material edges of scene (a) with the
/// invariant over illumination-color edges of scene (b).
pub fn verify_corollary1(
    pair: &ScenePair,
    cfg: &CorollaryConfig,
) -> Result<CorollaryReport, SynthError> {
    let params = InvariantParams {
        sigma: cfg.sigma,
        eps: cfg.eps,
    };
    let mode = cfg.mode.or(pair.a.mode).unwrap_or(RenderMode::Eq3);
    let material = edge_response(&pair.a, 1, mode, params, false)?.unwrap_or(0.0);

    let b = match &pair.b {
        Some(b) if !illumination_is_degenerate(b)? => Some(b),
        _ => None,
    };
    let illumination = match b {
        Some(b) => edge_response(b, 1, mode, params, true)?,
        None => None,
    };
    let ratio = illumination.map(|i| if i > 0.0 { material / i } else { f64::INFINITY });

    let refinement = match cfg.refine {
        Some(f) if f >= 2 => {
            let mat_f = edge_response(&pair.a, f, mode, params, false)?.unwrap_or(0.0);
            let ill_f = match b {
                Some(b) => edge_response(b, f, mode, params, true)?,
                None => None,
            };
            let floor = ROUNDING_FLOOR * illumination.unwrap_or(1.0);
            let at_floor = material <= floor && mat_f <= floor;
            let decrease = if mat_f > 0.0 {
                material / mat_f
            } else {
                f64::INFINITY
            };
            let change = match (illumination, ill_f) {
                (Some(a), Some(b)) if a > 0.0 => Some((b - a).abs() / a),
                _ => None,
            };
            let pass = (decrease >= REFINE_DECREASE || at_floor)
                && change.is_none_or(|c| c < REFINE_STABILITY);
            Some(Refinement {
                factor: f,
                material_edge_response: mat_f,
                illumination_edge_response: ill_f,
                material_decrease: decrease,
                illumination_change: change,
                at_rounding_floor: at_floor,
                pass,
            })
        }
        Some(f) => {
            return Err(SynthError::Invalid(format!(
                "refinement factor must be at least 2, got {f}"
            )))
        }
        None => None,
    };

    let base_ok = ratio.is_none_or(|r| r <= RATIO_THRESHOLD);
    let refine_ok = refinement.is_none_or(|r| r.pass);
    let status = match (base_ok && refine_ok, ratio) {
        (false, _) => CorollaryStatus::Fail,
        (true, None) => CorollaryStatus::PassDegenerate,
        (true, Some(_)) => CorollaryStatus::Pass,
    };
    Ok(CorollaryReport {
        sigma: cfg.sigma,
        eps: cfg.eps,
        mode,
        material_edge_response: material,
        illumination_edge_response: illumination,
        ratio,
        refinement,
        status,
    })
}
