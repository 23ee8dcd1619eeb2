use std::path::Path;

use super::image::{decode_gray8, read_gray8, write_gray8, write_rgb8};
use super::FormatError;
use crate::disentangle::{DisentanglementMap, Region};

pub fn palette_rgb8(dmap: &DisentanglementMap) -> Vec<u8> {
    dmap.labels().iter().flat_map(|l| l.palette()).collect()
}

pub fn write_label_map(
    dmap: &DisentanglementMap,
    path: impl AsRef<Path>,
) -> Result<(), FormatError> {
    let bytes: Vec<u8> = dmap.labels().iter().map(|l| *l as u8).collect();
    write_gray8(dmap.width(), dmap.height(), &bytes, path)
}

/// Writes the raw label map and its palette rendering.
pub fn write_disentanglement(
    dmap: &DisentanglementMap,
    path_labels: impl AsRef<Path>,
    path_palette: impl AsRef<Path>,
) -> Result<(), FormatError> {
    write_label_map(dmap, path_labels)?;
    write_rgb8(
        dmap.width(),
        dmap.height(),
        &palette_rgb8(dmap),
        path_palette,
    )
}

pub fn decode_label_map(bytes: &[u8]) -> Result<DisentanglementMap, FormatError> {
    labels_from_gray(decode_gray8(bytes)?)
}

pub fn read_label_map(path: impl AsRef<Path>) -> Result<DisentanglementMap, FormatError> {
    labels_from_gray(read_gray8(path)?)
}

fn labels_from_gray(
    (width, height, raw): (usize, usize, Vec<u8>),
) -> Result<DisentanglementMap, FormatError> {
    let labels = raw
        .iter()
        .enumerate()
        .map(|(index, &value)| {
            Region::from_u8(value).ok_or(FormatError::LabelOutOfRange { index, value })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(DisentanglementMap::from_labels(width, height, labels)?)
}
