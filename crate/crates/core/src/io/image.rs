use std::io::Cursor;
use std::path::Path;

use super::{read_bytes, write_bytes, FormatError};
use crate::image::RgbImage;

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0d, 0x0a, 0x1a, 0x0a];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    /// Binary netpbm: `P6` for RGB, `P5` for grayscale.
    Pnm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self, FormatError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("png") => Ok(ImageFormat::Png),
            Some("ppm" | "pgm" | "pnm") => Ok(ImageFormat::Pnm),
            _ => Err(FormatError::UnsupportedFormat(format!(
                "cannot infer image format from {}",
                path.display()
            ))),
        }
    }
}

struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    bytes: Vec<u8>,
}

fn decode_png(bytes: &[u8]) -> Result<Raster, FormatError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| FormatError::Png(e.to_string()))?;
    let (color, depth) = {
        let info = reader.info();
        (info.color_type, info.bit_depth)
    };
    if depth != png::BitDepth::Eight {
        return Err(FormatError::UnsupportedBitDepth(format!(
            "PNG with {depth:?} bits per sample"
        )));
    }
    let channels = match color {
        png::ColorType::Rgb => 3,
        png::ColorType::Grayscale => 1,
        other => {
            return Err(FormatError::UnsupportedColor(format!("PNG {other:?}")));
        }
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| FormatError::BadHeader("PNG dimensions too large".into()))?;
    let mut buf = vec![0; size];
    let frame = reader
        .next_frame(&mut buf)
        .map_err(|e| FormatError::Png(e.to_string()))?;
    buf.truncate(frame.buffer_size());
    Ok(Raster {
        width: frame.width as usize,
        height: frame.height as usize,
        channels,
        bytes: buf,
    })
}

/// Netpbm header token reader: skips whitespace and `#` comments.
struct PnmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PnmHeader<'_> {
    fn token(&mut self) -> Result<&[u8], FormatError> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b'#') => {
                    while let Some(&b) = self.bytes.get(self.pos) {
                        self.pos += 1;
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                    }
                }
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(_) => break,
                None => return Err(FormatError::BadHeader("unexpected end of header".into())),
            }
        }
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#')
        {
            self.pos += 1;
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize, FormatError> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| {
                FormatError::BadHeader(format!("invalid {what} {:?}", String::from_utf8_lossy(tok)))
            })
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<Raster, FormatError> {
    let mut hdr = PnmHeader { bytes, pos: 0 };
    let channels = match hdr.token()? {
        b"P6" => 3,
        b"P5" => 1,
        other => {
            return Err(FormatError::UnsupportedFormat(format!(
                "netpbm variant {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = hdr.number("width")?;
    let height = hdr.number("height")?;
    let maxval = hdr.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(FormatError::BadHeader(format!(
            "empty image {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(FormatError::UnsupportedBitDepth(format!(
            "netpbm maxval {maxval} (only 255 is supported)"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(hdr.pos) {
        Some(b) if b.is_ascii_whitespace() => hdr.pos += 1,
        _ => return Err(FormatError::BadHeader("missing raster separator".into())),
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| FormatError::BadHeader(format!("dimensions {width}x{height} overflow")))?;
    let raster = &bytes[hdr.pos..];
    if raster.len() < expected {
        return Err(FormatError::Truncated {
            expected,
            actual: raster.len(),
        });
    }
    Ok(Raster {
        width,
        height,
        channels,
        bytes: raster[..expected].to_vec(),
    })
}

fn decode_raster(bytes: &[u8]) -> Result<Raster, FormatError> {
    if bytes.starts_with(&PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.first() == Some(&b'P') {
        decode_pnm(bytes)
    } else {
        Err(FormatError::UnsupportedFormat(
            "neither PNG nor binary netpbm".into(),
        ))
    }
}

/// Decodes an 8-bit RGB PNG or `P6` PPM into `[0, 1]` channels.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage, FormatError> {
    let r = decode_raster(bytes)?;
    if r.channels != 3 {
        return Err(FormatError::UnsupportedColor(
            "expected RGB, found grayscale".into(),
        ));
    }
    let data = r.bytes.iter().map(|b| *b as f64 / 255.0).collect();
    Ok(RgbImage::new(r.width, r.height, data)?)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<RgbImage, FormatError> {
    decode_image(&read_bytes(path.as_ref())?)
}

/// Decodes an 8-bit grayscale PNG or `P5` PGM.
pub fn decode_gray8(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), FormatError> {
    let r = decode_raster(bytes)?;
    if r.channels != 1 {
        return Err(FormatError::UnsupportedColor(
            "expected grayscale, found RGB".into(),
        ));
    }
    Ok((r.width, r.height, r.bytes))
}

pub fn read_gray8(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u8>), FormatError> {
    decode_gray8(&read_bytes(path.as_ref())?)
}

fn encode(
    width: usize,
    height: usize,
    channels: usize,
    data: &[u8],
    format: ImageFormat,
) -> Result<Vec<u8>, FormatError> {
    assert_eq!(data.len(), width * height * channels, "raster size");
    match format {
        ImageFormat::Pnm => {
            let magic = if channels == 3 { "P6" } else { "P5" };
            let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
            out.extend_from_slice(data);
            Ok(out)
        }
        ImageFormat::Png => {
            let (w, h) = match (u32::try_from(width), u32::try_from(height)) {
                (Ok(w), Ok(h)) => (w, h),
                _ => return Err(FormatError::BadHeader("image too large for PNG".into())),
            };
            let mut out = Vec::new();
            let mut enc = png::Encoder::new(&mut out, w, h);
            enc.set_color(if channels == 3 {
                png::ColorType::Rgb
            } else {
                png::ColorType::Grayscale
            });
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc
                .write_header()
                .map_err(|e| FormatError::Png(e.to_string()))?;
            writer
                .write_image_data(data)
                .map_err(|e| FormatError::Png(e.to_string()))?;
            writer
                .finish()
                .map_err(|e| FormatError::Png(e.to_string()))?;
            Ok(out)
        }
    }
}

pub fn encode_rgb8(
    width: usize,
    height: usize,
    data: &[u8],
    format: ImageFormat,
) -> Result<Vec<u8>, FormatError> {
    encode(width, height, 3, data, format)
}

pub fn encode_gray8(
    width: usize,
    height: usize,
    data: &[u8],
    format: ImageFormat,
) -> Result<Vec<u8>, FormatError> {
    encode(width, height, 1, data, format)
}

/// Quantizes `[0, 1]` channels to bytes with round-half-away-from-zero.
pub fn to_rgb8(img: &RgbImage) -> Vec<u8> {
    img.data()
        .iter()
        .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect()
}

pub fn write_rgb8(
    width: usize,
    height: usize,
    data: &[u8],
    path: impl AsRef<Path>,
) -> Result<(), FormatError> {
    let path = path.as_ref();
    let bytes = encode_rgb8(width, height, data, ImageFormat::from_path(path)?)?;
    write_bytes(path, &bytes)
}

pub fn write_image(img: &RgbImage, path: impl AsRef<Path>) -> Result<(), FormatError> {
    write_rgb8(img.width(), img.height(), &to_rgb8(img), path)
}

pub fn write_gray8(
    width: usize,
    height: usize,
    data: &[u8],
    path: impl AsRef<Path>,
) -> Result<(), FormatError> {
    let path = path.as_ref();
    let bytes = encode_gray8(width, height, data, ImageFormat::from_path(path)?)?;
    write_bytes(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_examples() {
        let img = decode_image(b"P6\n1 1\n255\n\xff\xff\xff").unwrap();
        assert_eq!(img.pixel(0, 0), [1.0, 1.0, 1.0]);
        let img = decode_image(b"P6 1 1 255 \x00\x00\x00").unwrap();
        assert_eq!(img.pixel(0, 0), [0.0, 0.0, 0.0]);
        let img = decode_image(b"P6\n# comment\n2 1\n255\n\xff\x00\x00\x00\xff\x00").unwrap();
        assert_eq!(img.pixel(0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(img.pixel(1, 0), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn ppm_errors_are_typed() {
        assert!(matches!(
            decode_image(b"P6\n2 2\n255\n\x00\x00\x00"),
            Err(FormatError::Truncated {
                expected: 12,
                actual: 3
            })
        ));
        assert!(matches!(
            decode_image(b"P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00"),
            Err(FormatError::UnsupportedBitDepth(_))
        ));
        assert!(matches!(
            decode_image(b"P3\n1 1\n255\n0 0 0"),
            Err(FormatError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_image(b"P6\n1 x\n255\n"),
            Err(FormatError::BadHeader(_))
        ));
        assert!(matches!(
            decode_image(b"P6\n1"),
            Err(FormatError::BadHeader(_))
        ));
        assert!(matches!(
            decode_image(b"P5\n1 1\n255\n\x10"),
            Err(FormatError::UnsupportedColor(_))
        ));
        assert!(matches!(
            decode_image(b""),
            Err(FormatError::UnsupportedFormat(_))
        ));
        assert!(matches!(
            decode_image(b"P6\n0 1\n255\n"),
            Err(FormatError::BadHeader(_))
        ));
    }

    #[test]
    fn png_round_trip_and_rejections() {
        let data: Vec<u8> = (0..2 * 3 * 3).map(|i| (i * 13) as u8).collect();
        let bytes = encode_rgb8(2, 3, &data, ImageFormat::Png).unwrap();
        let img = decode_image(&bytes).unwrap();
        assert_eq!(to_rgb8(&img), data);

        let gray = encode_gray8(2, 3, &data[..6], ImageFormat::Png).unwrap();
        assert_eq!(decode_gray8(&gray).unwrap(), (2, 3, data[..6].to_vec()));
        assert!(matches!(
            decode_image(&gray),
            Err(FormatError::UnsupportedColor(_))
        ));

        let mut rgba = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut rgba, 1, 1);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[1, 2, 3, 4]).unwrap();
        }
        assert!(matches!(
            decode_image(&rgba),
            Err(FormatError::UnsupportedColor(_))
        ));

        let mut deep = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut deep, 1, 1);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Sixteen);
            let mut w = enc.write_header().unwrap();
            w.write_image_data(&[0; 6]).unwrap();
        }
        assert!(matches!(
            decode_image(&deep),
            Err(FormatError::UnsupportedBitDepth(_))
        ));

        let cut = &bytes[..bytes.len() - 20];
        assert!(matches!(decode_image(cut), Err(FormatError::Png(_))));
    }

    #[test]
    fn quantization_rounds() {
        let img = RgbImage::new(1, 1, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(to_rgb8(&img), vec![0, 128, 255]);
    }
}
