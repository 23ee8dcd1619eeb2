use super::features::{dot, FeatureGrid};
use super::sampling::{sample_patches, PatchSampleSet};
use super::similarity::{check_tau, region_block};
use super::sinkhorn::{ot_reweight, SinkhornConfig, TransportPlan};
use crate::disentangle::{DisentanglementMap, Region};
use crate::error::{Error, Result};
use crate::io::Report;

/// Default cap on anchors per region and layer.
pub const DEFAULT_MAX_PER_REGION: usize = 64;

fn check_lengths(v: &[f64], v_pos: &[f64], negatives: &[&[f64]]) -> Result<()> {
    if v.len() != v_pos.len() || negatives.iter().any(|n| n.len() != v.len()) {
        return Err(Error::DimensionMismatch(
            "anchor, positive and negatives differ in length".into(),
        ));
    }
    Ok(())
}

/// `−log[e^{v·v⁺/τ} / (e^{v·v⁺/τ} + Σ_n w_n e^{v·v⁻_n/τ})]`, evaluated as
/// a log-sum-exp over `v·v⁻_n/τ + ln w_n`. Zero weights drop their term.
pub fn weighted_nce(
    v: &[f64],
    v_pos: &[f64],
    negatives: &[&[f64]],
    weights: &[f64],
    tau: f64,
) -> Result<f64> {
    check_tau(tau)?;
    check_lengths(v, v_pos, negatives)?;
    if weights.len() != negatives.len() {
        return Err(Error::WeightCount {
            weights: weights.len(),
            negatives: negatives.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::NegativeWeight(*w));
    }
    let pos = dot(v, v_pos) / tau;
    let terms: Vec<f64> = negatives
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(n, w)| dot(v, n) / tau + w.ln())
        .collect();
    let m = terms.iter().copied().fold(pos, f64::max);
    let sum = (pos - m).exp() + terms.iter().map(|t| (t - m).exp()).sum::<f64>();
    Ok(m + sum.ln() - pos)
}

/// Unweighted patch NCE, `log(1 + Σ_n e^{(v·v⁻_n − v·v⁺)/τ})`.
pub fn patch_nce(v: &[f64], v_pos: &[f64], negatives: &[&[f64]], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    check_lengths(v, v_pos, negatives)?;
    let pos = dot(v, v_pos) / tau;
    let gaps: Vec<f64> = negatives.iter().map(|n| dot(v, n) / tau - pos).collect();
    let m = gaps.iter().copied().fold(0.0, f64::max);
    if m == 0.0 {
        Ok(gaps.iter().map(|g| g.exp()).sum::<f64>().ln_1p())
    } else {
        Ok(m + ((-m).exp() + gaps.iter().map(|g| (g - m).exp()).sum::<f64>()).ln())
    }
}

/// How plan rows become per-negative weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NegativeMass {
    /// Use plan rows as-is: each anchor's negatives share a total weight of 1.
    #[default]
    PlanRows,
    /// Scale rows by `K_s − 1`, so uniform plans reproduce unit weights.
    Count,
}

impl NegativeMass {
    pub fn name(self) -> &'static str {
        match self {
            Self::PlanRows => "plan_rows",
            Self::Count => "count",
        }
    }
}

/// Transport plans for the four regions of one layer; `None` where the
/// region has fewer than two anchors.
pub type LayerPlans = [Option<TransportPlan>; 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerLoss {
    pub layer_id: usize,
    pub anchors: usize,
    /// Mean weighted NCE over the layer's anchors; 0 without anchors.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegNceLoss {
    pub layers: Vec<LayerLoss>,
    /// Sum of the per-layer means.
    pub total: f64,
}

/// Sums per-layer mean weighted NCE. Anchor `i` of a region uses plan row
/// `i` as the weights of its negatives `j ≠ i`.
pub fn deg_nce_loss(
    samples: &[PatchSampleSet],
    plans: &[LayerPlans],
    tau: f64,
    mass: NegativeMass,
) -> Result<DegNceLoss> {
    check_tau(tau)?;
    if samples.len() != plans.len() {
        return Err(Error::RegionMismatch(format!(
            "{} sampled layers but {} sets of plans",
            samples.len(),
            plans.len()
        )));
    }
    let mut layers = Vec::with_capacity(samples.len());
    for (set, layer_plans) in samples.iter().zip(plans) {
        let mut sum = 0.0;
        let mut anchors = 0;
        for region in Region::ALL {
            let rs = set.region(region);
            let k = rs.k();
            let plan = &layer_plans[region.index()];
            match (k, plan) {
                (0 | 1, None) => {}
                (_, Some(p)) if p.k() == k && k >= 2 => {}
                _ => {
                    return Err(Error::RegionMismatch(format!(
                        "layer {} region {} has {k} anchors but plan size {:?}",
                        set.layer_id(),
                        region.name(),
                        plan.as_ref().map(TransportPlan::k)
                    )))
                }
            }
            let scale = match mass {
                NegativeMass::PlanRows => 1.0,
                NegativeMass::Count => k.saturating_sub(1) as f64,
            };
            for i in 0..k {
                let (idx, negs): (Vec<usize>, Vec<&[f64]>) = rs.negatives(i).unzip();
                let loss = match plan {
                    // A lone anchor has no negatives: −log(1) = 0.
                    None => 0.0,
                    Some(p) => {
                        let w: Vec<f64> = idx.iter().map(|&j| p.get(i, j) * scale).collect();
                        weighted_nce(rs.anchor(i), rs.positive(i), &negs, &w, tau)?
                    }
                };
                sum += loss;
                anchors += 1;
            }
        }
        let value = if anchors > 0 {
            sum / anchors as f64
        } else {
            0.0
        };
        layers.push(LayerLoss {
            layer_id: set.layer_id(),
            anchors,
            value,
        });
    }
    let total = layers.iter().map(|l| l.value).sum();
    Ok(DegNceLoss { layers, total })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversarialLosses {
    /// `mean (d_fake − 1)²`.
    pub generator: f64,
    /// `mean (d_real − 1)² + mean d_fake²`.
    pub discriminator: f64,
}

/// Least-squares adversarial terms, averaged over discriminator outputs.
pub fn adversarial_losses(d_real: &[f64], d_fake: &[f64]) -> Result<AdversarialLosses> {
    for (what, v) in [
        ("real discriminator output", d_real),
        ("fake discriminator output", d_fake),
    ] {
        if v.is_empty() {
            return Err(Error::DimensionMismatch(format!("{what} is empty")));
        }
        if let Some(index) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what, index });
        }
    }
    let mean =
        |v: &[f64], f: &dyn Fn(f64) -> f64| v.iter().map(|x| f(*x)).sum::<f64>() / v.len() as f64;
    let generator = mean(d_fake, &|x| (x - 1.0) * (x - 1.0));
    let discriminator = mean(d_real, &|x| (x - 1.0) * (x - 1.0)) + mean(d_fake, &|x| x * x);
    Ok(AdversarialLosses {
        generator,
        discriminator,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegNceConfig {
    pub tau: f64,
    pub seed: u64,
    pub max_per_region: usize,
    pub sinkhorn: SinkhornConfig,
    pub mass: NegativeMass,
}

impl Default for DegNceConfig {
    fn default() -> Self {
        Self {
            tau: super::similarity::DEFAULT_TAU,
            seed: 0,
            max_per_region: DEFAULT_MAX_PER_REGION,
            sinkhorn: SinkhornConfig::default(),
            mass: NegativeMass::default(),
        }
    }
}

/// Solves one plan per region with at least two anchors.
pub fn region_plans(set: &PatchSampleSet, tau: f64, cfg: &SinkhornConfig) -> Result<LayerPlans> {
    let mut plans: LayerPlans = Default::default();
    for region in Region::ALL {
        let rs = set.region(region);
        if rs.k() >= 2 {
            let block = region_block(rs, tau)?;
            plans[region.index()] = Some(ot_reweight(&block.costs(), block.k(), cfg)?);
        }
    }
    Ok(plans)
}

/// Everything computed by [`run_degnce`].
#[derive(Debug, Clone, PartialEq)]
pub struct DegNceRun {
    pub samples: Vec<PatchSampleSet>,
    pub plans: Vec<LayerPlans>,
    pub loss: DegNceLoss,
}

impl DegNceRun {
    /// False if any plan stopped before reaching the tolerance.
    pub fn converged(&self) -> bool {
        self.plans.iter().flatten().flatten().all(|p| p.converged)
    }
}

/// Sampling, similarity, transport and loss over paired layer grids.
pub fn run_degnce(
    src: &[FeatureGrid],
    gen: &[FeatureGrid],
    dmap: &DisentanglementMap,
    cfg: &DegNceConfig,
) -> Result<DegNceRun> {
    if src.len() != gen.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} source layers but {} generated layers",
            src.len(),
            gen.len()
        )));
    }
    let mut samples = Vec::with_capacity(src.len());
    let mut plans = Vec::with_capacity(src.len());
    for (s, g) in src.iter().zip(gen) {
        let set = sample_patches(s, g, dmap, cfg.seed, cfg.max_per_region)?;
        plans.push(region_plans(&set, cfg.tau, &cfg.sinkhorn)?);
        samples.push(set);
    }
    let loss = deg_nce_loss(&samples, &plans, cfg.tau, cfg.mass)?;
    Ok(DegNceRun {
        samples,
        plans,
        loss,
    })
}

/// Flat summary of a run: configuration, per-region statistics for every
/// region that received anchors, per-layer losses and totals.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub config: DegNceConfig,
    pub run: DegNceRun,
    pub adversarial: Option<AdversarialLosses>,
}

impl LossReport {
    pub fn deg_nce(&self) -> f64 {
        self.run.loss.total
    }

    /// `L(F) = L_adv(F) + L_DegNCE`, or `L_DegNCE` alone without
    /// discriminator outputs.
    pub fn total_generator(&self) -> f64 {
        self.adversarial.map_or(0.0, |a| a.generator) + self.deg_nce()
    }

    pub fn to_report(&self) -> Report {
        let c = &self.config;
        let mut r = Report::new();
        r.push_f64("tau", c.tau)
            .push_f64("epsilon", c.sinkhorn.epsilon)
            .push("max_sweeps", c.sinkhorn.max_sweeps)
            .push_f64("tol", c.sinkhorn.tol)
            .push("cost_sign", c.sinkhorn.sign.name())
            .push("anneal", c.sinkhorn.anneal)
            .push("negative_mass", c.mass.name())
            .push("seed", c.seed)
            .push("max_per_region", c.max_per_region)
            .push("layers", self.run.samples.len());
        for ((set, plans), layer) in self
            .run
            .samples
            .iter()
            .zip(&self.run.plans)
            .zip(&self.run.loss.layers)
        {
            let l = set.layer_id();
            for region in Region::ALL {
                let k = set.region(region).k();
                if k == 0 {
                    continue;
                }
                let prefix = format!("layer{l}.{}", region.name());
                r.push(format!("{prefix}.anchors"), k);
                if let Some(p) = &plans[region.index()] {
                    r.push(format!("{prefix}.plan_sweeps"), p.iterations)
                        .push_f64(format!("{prefix}.plan_residual"), p.residual)
                        .push(format!("{prefix}.plan_converged"), p.converged);
                }
            }
            r.push(format!("layer{l}.anchors"), layer.anchors)
                .push_f64(format!("layer{l}.deg_nce"), layer.value);
        }
        r.push_f64("deg_nce", self.deg_nce());
        if let Some(a) = self.adversarial {
            r.push_f64("adv_generator", a.generator)
                .push_f64("adv_discriminator", a.discriminator)
                .push_f64("total_generator", self.total_generator())
                .push_f64("total_discriminator", a.discriminator);
        }
        r
    }
}
