use std::path::Path;

use super::{read_bytes, write_bytes, FormatError};

pub const TENSOR_MAGIC: [u8; 8] = *b"N2D3TENS";
pub const TENSOR_VERSION: u32 = 1;
const MAX_RANK: usize = 4;

/// Dense row-major `f32` tensor of rank 1 to 4.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: Vec<f32>) -> Result<Self, FormatError> {
        if dims.is_empty() || dims.len() > MAX_RANK {
            return Err(FormatError::BadRank(dims.len()));
        }
        if dims.iter().any(|d| *d > u32::MAX as usize) {
            return Err(FormatError::DimOverflow(
                dims.iter().map(|d| *d as u64).collect(),
            ));
        }
        let expected = dims
            .iter()
            .try_fold(1usize, |acc, d| acc.checked_mul(*d))
            .ok_or_else(|| FormatError::DimOverflow(dims.iter().map(|d| *d as u64).collect()))?;
        if expected != data.len() {
            return Err(FormatError::ShapeMismatch {
                dims,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { dims, data })
    }

    /// Converts `f64` values to `f32` with round-to-nearest.
    pub fn from_f64(dims: Vec<usize>, data: &[f64]) -> Result<Self, FormatError> {
        Self::new(dims, data.iter().map(|v| *v as f32).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|v| *v as f64).collect()
    }
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * t.dims.len() + 4 * t.data.len());
    out.extend_from_slice(&TENSOR_MAGIC);
    out.extend_from_slice(&TENSOR_VERSION.to_le_bytes());
    out.extend_from_slice(&(t.dims.len() as u32).to_le_bytes());
    for d in &t.dims {
        out.extend_from_slice(&(*d as u32).to_le_bytes());
    }
    for v in &t.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8], FormatError> {
    let end = pos.saturating_add(n);
    if end > bytes.len() {
        return Err(FormatError::Truncated {
            expected: end,
            actual: bytes.len(),
        });
    }
    let s = &bytes[*pos..end];
    *pos = end;
    Ok(s)
}

fn u32_at(bytes: &[u8], pos: &mut usize) -> Result<u32, FormatError> {
    let s = take(bytes, pos, 4)?;
    Ok(u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
}

pub fn decode_tensor(bytes: &[u8]) -> Result<Tensor, FormatError> {
    let mut pos = 0;
    let magic = take(bytes, &mut pos, 8)?;
    if magic != TENSOR_MAGIC {
        let mut m = [0u8; 8];
        m.copy_from_slice(magic);
        return Err(FormatError::BadMagic(m));
    }
    let version = u32_at(bytes, &mut pos)?;
    if version != TENSOR_VERSION {
        return Err(FormatError::BadVersion(version));
    }
    let rank = u32_at(bytes, &mut pos)? as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(FormatError::BadRank(rank));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(u32_at(bytes, &mut pos)? as u64);
    }
    let count = dims
        .iter()
        .try_fold(1u64, |acc, d| acc.checked_mul(*d))
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| FormatError::DimOverflow(dims.clone()))?;
    let payload = take(bytes, &mut pos, count)?;
    if pos != bytes.len() {
        return Err(FormatError::TrailingBytes {
            extra: bytes.len() - pos,
        });
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Tensor::new(dims.into_iter().map(|d| d as usize).collect(), data)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor, FormatError> {
    decode_tensor(&read_bytes(path.as_ref())?)
}

pub fn write_tensor(t: &Tensor, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_bytes(path.as_ref(), &encode_tensor(t))
}
