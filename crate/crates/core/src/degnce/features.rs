use crate::error::{Error, Result};
use crate::io::Tensor;

/// Patch features of one extractor layer on a `grid_h × grid_w` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    layer_id: usize,
    grid_h: usize,
    grid_w: usize,
    dim: usize,
    vectors: Vec<f64>,
}

impl FeatureGrid {
    /// `vectors` is row-major over cells, `dim` values per cell.
    pub fn new(
        layer_id: usize,
        grid_h: usize,
        grid_w: usize,
        dim: usize,
        vectors: Vec<f64>,
    ) -> Result<Self> {
        if grid_h == 0 || grid_w == 0 || dim == 0 {
            return Err(Error::DimensionMismatch(format!(
                "feature grid {grid_h}x{grid_w} with dim {dim} is empty"
            )));
        }
        let expected = grid_h * grid_w * dim;
        if vectors.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "feature grid {grid_h}x{grid_w}x{dim} needs {expected} values, got {}",
                vectors.len()
            )));
        }
        if let Some(index) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "feature grid",
                index,
            });
        }
        Ok(Self {
            layer_id,
            grid_h,
            grid_w,
            dim,
            vectors,
        })
    }

    /// Reads a rank-3 `[grid_h, grid_w, dim]` tensor.
    pub fn from_tensor(layer_id: usize, t: &Tensor) -> Result<Self> {
        match *t.dims() {
            [h, w, d] => Self::new(layer_id, h, w, d, t.to_f64()),
            _ => Err(Error::DimensionMismatch(format!(
                "feature tensor must have dims [grid_h, grid_w, dim], got {:?}",
                t.dims()
            ))),
        }
    }

    pub fn layer_id(&self) -> usize {
        self.layer_id
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.grid_h * self.grid_w
    }

    pub fn cell(&self, index: usize) -> &[f64] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
