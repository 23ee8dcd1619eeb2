use super::features::dot;
use super::sampling::RegionSamples;
use crate::disentangle::Region;
use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.07;

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(tau))
    }
}

/// `exp(v_i · v⁻_j / τ)` for the anchors and negatives of one region.
/// The diagonal pairs an anchor with its own positive and is excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityBlock {
    region: Region,
    k: usize,
    tau: f64,
    logits: Vec<f64>,
}

impl SimilarityBlock {
    pub fn region(&self) -> Region {
        self.region
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `v_i · v⁻_j / τ`, or `None` on the diagonal.
    pub fn logit(&self, i: usize, j: usize) -> Option<f64> {
        (i != j).then(|| self.logits[i * self.k + j])
    }

    /// `exp(v_i · v⁻_j / τ)`, or `None` on the diagonal.
    pub fn entry(&self, i: usize, j: usize) -> Option<f64> {
        self.logit(i, j).map(f64::exp)
    }

    /// Row-major entries with the diagonal set to zero; the transport
    /// solver ignores it.
    pub fn costs(&self) -> Vec<f64> {
        let k = self.k;
        (0..k * k)
            .map(|idx| self.entry(idx / k, idx % k).unwrap_or(0.0))
            .collect()
    }
}

/// Builds the block from row-major anchor and negative matrices of `k`
/// vectors each.
pub fn similarity_block(
    region: Region,
    anchors: &[f64],
    negatives: &[f64],
    dim: usize,
    tau: f64,
) -> Result<SimilarityBlock> {
    check_tau(tau)?;
    if dim == 0 || anchors.len() != negatives.len() || !anchors.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch(format!(
            "{} anchor values and {} negative values do not form matching {dim}-vectors",
            anchors.len(),
            negatives.len()
        )));
    }
    let k = anchors.len() / dim;
    let mut logits = vec![0.0; k * k];
    for i in 0..k {
        let v = &anchors[i * dim..(i + 1) * dim];
        for j in (0..k).filter(|&j| j != i) {
            logits[i * k + j] = dot(v, &negatives[j * dim..(j + 1) * dim]) / tau;
        }
    }
    Ok(SimilarityBlock {
        region,
        k,
        tau,
        logits,
    })
}

/// The block for one region's samples.
pub fn region_block(samples: &RegionSamples, tau: f64) -> Result<SimilarityBlock> {
    similarity_block(
        samples.region(),
        samples.anchor_matrix(),
        samples.positive_matrix(),
        samples.dim(),
        tau,
    )
}
