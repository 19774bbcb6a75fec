//! PNG (8-bit gray/RGB) and PFM image files.
//!
//! PFM files use the usual header (`PF` for RGB, `Pf` for gray, then
//! `width height`, then a scale whose sign gives the byte order) with rows
//! stored bottom-to-top. Besides the standard 32-bit payload, a 64-bit payload
//! under the same header is read and written so that `f64` images round-trip
//! exactly; the reader tells them apart by payload size.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use defilter_core::Image;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", .path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image: {0}")]
    Unsupported(String),
    #[error("malformed image: {0}")]
    Malformed(String),
}

impl IoError {
    fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PfmPrecision {
    Single,
    /// Same header, little/big-endian `f64` payload.
    #[default]
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    Pfm(PfmPrecision),
}

impl ImageFormat {
    /// Picks the format from the file extension. `.pfm` maps to
    /// double-precision PFM.
    pub fn from_path(path: &Path) -> Result<Self, IoError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("png") => Ok(ImageFormat::Png),
            Some("pfm") => Ok(ImageFormat::Pfm(PfmPrecision::Double)),
            _ => Err(IoError::Unsupported(format!(
                "cannot tell the format of {} (expected .png or .pfm)",
                path.display()
            ))),
        }
    }
}

/// Loads a PNG or PFM file, detected from its magic bytes.
pub fn load_image(path: &Path) -> Result<Image, IoError> {
    load_image_with_format(path).map(|(img, _)| img)
}

pub fn load_image_with_format(path: &Path) -> Result<(Image, ImageFormat), IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::file(path, e))?;
    decode_image(&bytes)
}

pub fn decode_image(bytes: &[u8]) -> Result<(Image, ImageFormat), IoError> {
    if bytes.starts_with(b"\x89PNG") {
        Ok((decode_png(bytes)?, ImageFormat::Png))
    } else if bytes.starts_with(b"PF") || bytes.starts_with(b"Pf") {
        let (img, p) = decode_pfm(bytes)?;
        Ok((img, ImageFormat::Pfm(p)))
    } else {
        Err(IoError::Unsupported("neither PNG nor PFM".into()))
    }
}

pub fn save_image(image: &Image, path: &Path, format: ImageFormat) -> Result<(), IoError> {
    let bytes = match format {
        ImageFormat::Png => encode_png(image)?,
        ImageFormat::Pfm(p) => encode_pfm(image, p),
    };
    fs::write(path, bytes).map_err(|e| IoError::file(path, e))
}

pub fn encode_pfm(image: &Image, precision: PfmPrecision) -> Vec<u8> {
    let (h, w, c) = image.dims();
    let tag = if c == 3 { "PF" } else { "Pf" };
    let mut out = format!("{tag}\n{w} {h}\n-1.0\n").into_bytes();
    let row_len = w * c;
    for y in (0..h).rev() {
        for &v in &image.data()[y * row_len..(y + 1) * row_len] {
            match precision {
                PfmPrecision::Single => out.extend_from_slice(&(v as f32).to_le_bytes()),
                PfmPrecision::Double => out.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    out
}

/// Splits off the next whitespace-delimited header token.
fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str, IoError> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(IoError::Malformed("truncated PFM header".into()));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .map_err(|_| IoError::Malformed("non-ASCII PFM header".into()))
}

pub fn decode_pfm(bytes: &[u8]) -> Result<(Image, PfmPrecision), IoError> {
    let mut pos = 0;
    let channels = match header_token(bytes, &mut pos)? {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(IoError::Malformed(format!("bad PFM tag {other:?}"))),
    };
    let dim = |tok: &str| {
        tok.parse::<usize>()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| IoError::Malformed(format!("bad PFM dimension {tok:?}")))
    };
    let width = dim(header_token(bytes, &mut pos)?)?;
    let height = dim(header_token(bytes, &mut pos)?)?;
    let scale_tok = header_token(bytes, &mut pos)?;
    let scale: f64 = scale_tok
        .parse()
        .ok()
        .filter(|s: &f64| *s != 0.0 && s.is_finite())
        .ok_or_else(|| IoError::Malformed(format!("bad PFM scale {scale_tok:?}")))?;
    // exactly one whitespace byte separates the header from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(IoError::Malformed("missing PFM payload".into()));
    }
    let payload = &bytes[pos + 1..];
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| IoError::Malformed("PFM dimensions overflow".into()))?;
    let little = scale < 0.0;
    let (precision, values): (PfmPrecision, Vec<f64>) = if payload.len() == count * 4 {
        let vals = payload
            .chunks_exact(4)
            .map(|b| {
                let b = [b[0], b[1], b[2], b[3]];
                (if little {
                    f32::from_le_bytes(b)
                } else {
                    f32::from_be_bytes(b)
                }) as f64
            })
            .collect();
        (PfmPrecision::Single, vals)
    } else if payload.len() == count * 8 {
        let vals = payload
            .chunks_exact(8)
            .map(|b| {
                let b: [u8; 8] = b.try_into().expect("chunk of 8");
                if little {
                    f64::from_le_bytes(b)
                } else {
                    f64::from_be_bytes(b)
                }
            })
            .collect();
        (PfmPrecision::Double, vals)
    } else {
        return Err(IoError::Malformed(format!(
            "PFM payload is {} bytes, expected {} or {}",
            payload.len(),
            count * 4,
            count * 8
        )));
    };
    let row_len = width * channels;
    let mut data = Vec::with_capacity(count);
    for y in (0..height).rev() {
        data.extend_from_slice(&values[y * row_len..(y + 1) * row_len]);
    }
    let img =
        Image::new(height, width, channels, data).map_err(|e| IoError::Malformed(e.to_string()))?;
    Ok((img, precision))
}

/// Encodes as 8-bit PNG via `round(clamp(v, 0, 1) * 255)`.
pub fn encode_png(image: &Image) -> Result<Vec<u8>, IoError> {
    let (h, w, c) = image.dims();
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
        enc.set_color(if c == 3 {
            png::ColorType::Rgb
        } else {
            png::ColorType::Grayscale
        });
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| IoError::Unsupported(format!("PNG encoder: {e}")))?;
        let bytes: Vec<u8> = image
            .data()
            .iter()
            .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        writer
            .write_image_data(&bytes)
            .map_err(|e| IoError::Unsupported(format!("PNG encoder: {e}")))?;
        writer
            .finish()
            .map_err(|e| IoError::Unsupported(format!("PNG encoder: {e}")))?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<Image, IoError> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| IoError::Malformed(format!("PNG: {e}")))?;
    let (color, depth) = reader.output_color_type();
    if depth != png::BitDepth::Eight {
        return Err(IoError::Unsupported(format!(
            "{}-bit PNG (only 8-bit is supported)",
            depth as u8
        )));
    }
    let channels = match color {
        png::ColorType::Grayscale => 1,
        png::ColorType::Rgb => 3,
        other => {
            return Err(IoError::Unsupported(format!(
                "PNG color type {other:?} (only gray or RGB)"
            )))
        }
    };
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| IoError::Malformed("PNG too large".into()))?;
    let mut buf = vec![0u8; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| IoError::Malformed(format!("PNG: {e}")))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let mut data = Vec::with_capacity(w * h * channels);
    for row in buf.chunks(info.line_size).take(h) {
        data.extend(row[..w * channels].iter().map(|&b| b as f64 / 255.0));
    }
    Image::new(h, w, channels, data).map_err(|e| IoError::Malformed(e.to_string()))
}
