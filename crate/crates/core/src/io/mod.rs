//! File formats shared by the CLI and library users.
//!
//! | Artifact     | Encoding                                                   |
//! |--------------|------------------------------------------------------------|
//! | RGB image    | 8-bit RGB PNG or binary PPM (`P6`, maxval 255)             |
//! | Label map    | 8-bit grayscale PNG or PGM (`P5`), values `0..=3`          |
//! | Palette      | 8-bit RGB PNG or PPM                                       |
//! | Tensor       | `N2D3TENS`, u32 LE version 1, u32 LE rank, u32 LE dims, f32 LE payload |
//! | Report       | `key=value` lines                                          |
//!
//! Image containers are chosen by file extension on write (`.png`, or
//! `.ppm`/`.pgm`/`.pnm`) and sniffed from the leading bytes on read.

mod image;
mod labels;
mod report;
mod tensor;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use self::image::{
    decode_gray8, decode_image, encode_gray8, encode_rgb8, read_gray8, read_image, to_rgb8,
    write_gray8, write_image, write_rgb8, ImageFormat,
};
pub use self::labels::{
    decode_label_map, palette_rgb8, read_label_map, write_disentanglement, write_label_map,
};
pub use self::report::Report;
pub use self::tensor::{
    decode_tensor, encode_tensor, read_tensor, write_tensor, Tensor, TENSOR_MAGIC, TENSOR_VERSION,
};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported container: {0}")]
    UnsupportedFormat(String),

    #[error("unsupported bit depth: {0}")]
    UnsupportedBitDepth(String),

    #[error("unsupported color type: {0}")]
    UnsupportedColor(String),

    #[error("malformed header: {0}")]
    BadHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("PNG decoding failed: {0}")]
    Png(String),

    #[error("bad tensor magic {0:?}")]
    BadMagic([u8; 8]),

    #[error("unsupported tensor version {0}")]
    BadVersion(u32),

    #[error("tensor rank {0} outside 1..=4")]
    BadRank(usize),

    #[error("tensor dimensions {0:?} overflow the addressable size")]
    DimOverflow(Vec<u64>),

    #[error("tensor holds {actual} values but dimensions {dims:?} need {expected}")]
    ShapeMismatch {
        dims: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("{extra} unexpected trailing bytes")]
    TrailingBytes { extra: usize },

    #[error("label value {value} at pixel {index} is not a region label")]
    LabelOutOfRange { index: usize, value: u8 },

    #[error(transparent)]
    Pipeline(#[from] crate::error::Error),
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            FormatError::MissingFile(path.to_path_buf())
        } else {
            FormatError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    std::fs::write(path, bytes).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}
