use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::FeatureGrid;
use crate::disentangle::{DisentanglementMap, Region};
use crate::error::{Error, Result};

/// Samples drawn from one degradation region of one layer.
///
/// Anchor `i` pairs with the source feature at its own location (the
/// positive) and with the source features at every other sampled location
/// of the same region (the negatives). Other regions are unreachable from
/// here, which makes the similarity structure block-diagonal by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSamples {
    region: Region,
    dim: usize,
    locations: Vec<usize>,
    anchors: Vec<f64>,
    positives: Vec<f64>,
}

impl RegionSamples {
    fn empty(region: Region, dim: usize) -> Self {
        Self {
            region,
            dim,
            locations: Vec::new(),
            anchors: Vec::new(),
            positives: Vec::new(),
        }
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// Number of sampled anchors, `K_s`.
    pub fn k(&self) -> usize {
        self.locations.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Grid cell index (`row * grid_w + col`) of each anchor.
    pub fn locations(&self) -> &[usize] {
        &self.locations
    }

    pub fn anchor(&self, i: usize) -> &[f64] {
        &self.anchors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn positive(&self, i: usize) -> &[f64] {
        &self.positives[i * self.dim..(i + 1) * self.dim]
    }

    /// Negatives of anchor `i` as `(j, v⁻_j)` with `j ≠ i`, in order.
    pub fn negatives(&self, i: usize) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        (0..self.k())
            .filter(move |&j| j != i)
            .map(move |j| (j, self.positive(j)))
    }

    /// Row-major anchor features.
    pub fn anchor_matrix(&self) -> &[f64] {
        &self.anchors
    }

    /// Row-major source features at the anchor locations.
    pub fn positive_matrix(&self) -> &[f64] {
        &self.positives
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchSampleSet {
    layer_id: usize,
    grid_h: usize,
    grid_w: usize,
    cell_labels: Vec<Region>,
    regions: [RegionSamples; 4],
}

impl PatchSampleSet {
    pub fn layer_id(&self) -> usize {
        self.layer_id
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.grid_h, self.grid_w)
    }

    pub fn cell_labels(&self) -> &[Region] {
        &self.cell_labels
    }

    pub fn region(&self, r: Region) -> &RegionSamples {
        &self.regions[r.index()]
    }

    /// All four regions in label order.
    pub fn regions(&self) -> &[RegionSamples; 4] {
        &self.regions
    }

    pub fn anchor_count(&self) -> usize {
        self.regions.iter().map(RegionSamples::k).sum()
    }
}

/// Majority label of the pixels under each grid cell. Cell `(r, c)` covers
/// rows `r·H/gh .. (r+1)·H/gh` and the matching columns. Ties go to the
/// region with fewer pixels in the whole map, then to the lower label.
pub fn cell_labels(dmap: &DisentanglementMap, grid_h: usize, grid_w: usize) -> Result<Vec<Region>> {
    let (w, h) = (dmap.width(), dmap.height());
    if grid_h == 0 || grid_w == 0 || grid_h > h || grid_w > w {
        return Err(Error::GridMismatch(format!(
            "a {grid_h}x{grid_w} patch grid cannot tile a {w}x{h} label map"
        )));
    }
    let global = dmap.counts();
    let labels = dmap.labels();
    let mut out = Vec::with_capacity(grid_h * grid_w);
    for r in 0..grid_h {
        let (y0, y1) = (r * h / grid_h, (r + 1) * h / grid_h);
        for c in 0..grid_w {
            let (x0, x1) = (c * w / grid_w, (c + 1) * w / grid_w);
            let mut votes = [0usize; 4];
            for y in y0..y1 {
                for l in &labels[y * w + x0..y * w + x1] {
                    votes[l.index()] += 1;
                }
            }
            let best = Region::ALL
                .into_iter()
                .max_by(|a, b| {
                    votes[a.index()]
                        .cmp(&votes[b.index()])
                        .then(global[b.index()].cmp(&global[a.index()]))
                        .then(b.index().cmp(&a.index()))
                })
                .expect("four regions");
            out.push(best);
        }
    }
    Ok(out)
}

/// Draws up to `max_per_region` anchors per region without replacement.
/// The generator is ChaCha8 seeded with `seed` on stream `layer_id`;
/// regions are drawn in label order.
pub fn sample_patches(
    src: &FeatureGrid,
    gen: &FeatureGrid,
    dmap: &DisentanglementMap,
    seed: u64,
    max_per_region: usize,
) -> Result<PatchSampleSet> {
    if (src.grid_h(), src.grid_w(), src.dim()) != (gen.grid_h(), gen.grid_w(), gen.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "source grid is {}x{}x{}, generated grid is {}x{}x{}",
            src.grid_h(),
            src.grid_w(),
            src.dim(),
            gen.grid_h(),
            gen.grid_w(),
            gen.dim()
        )));
    }
    let labels = cell_labels(dmap, src.grid_h(), src.grid_w())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(src.layer_id() as u64);
    let dim = src.dim();

    let regions = Region::ALL.map(|region| {
        let cells: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == region).collect();
        let k = cells.len().min(max_per_region);
        if k == 0 {
            return RegionSamples::empty(region, dim);
        }
        let mut picked: Vec<usize> = sample(&mut rng, cells.len(), k)
            .into_iter()
            .map(|i| cells[i])
            .collect();
        picked.sort_unstable();
        let anchors = picked
            .iter()
            .flat_map(|&c| gen.cell(c).iter().copied())
            .collect();
        let positives = picked
            .iter()
            .flat_map(|&c| src.cell(c).iter().copied())
            .collect();
        RegionSamples {
            region,
            dim,
            locations: picked,
            anchors,
            positives,
        }
    });

    Ok(PatchSampleSet {
        layer_id: src.layer_id(),
        grid_h: src.grid_h(),
        grid_w: src.grid_w(),
        cell_labels: labels,
        regions,
    })
}
