//! Integer-factor resampling for the super-resolution degradation model
//! `resize(resize(I, 1/s), s)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DownMethod {
    /// Average of each `s x s` block.
    #[default]
    Box,
    /// Top-left sample of each block.
    Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpMethod {
    /// Keys cubic convolution (a = -0.5) with replicated edges.
    #[default]
    Bicubic,
    Bilinear,
    Nearest,
}

impl DownMethod {
    pub fn name(self) -> &'static str {
        match self {
            DownMethod::Box => "box",
            DownMethod::Point => "point",
        }
    }
}

impl UpMethod {
    pub fn name(self) -> &'static str {
        match self {
            UpMethod::Bicubic => "bicubic",
            UpMethod::Bilinear => "bilinear",
            UpMethod::Nearest => "nearest",
        }
    }
}

/// Downsamples by `scale` then upsamples back to the input size. Both sides
/// must be divisible by `scale`.
pub fn down_up(input: &Image, scale: usize, down: DownMethod, up: UpMethod) -> Result<Image> {
    let low = downsample(input, scale, down)?;
    upsample(&low, scale, up)
}

pub fn downsample(input: &Image, scale: usize, method: DownMethod) -> Result<Image> {
    let (h, w, c) = input.dims();
    if scale < 2 {
        return Err(Error::param(format!("scale must be >= 2, got {scale}")));
    }
    if h % scale != 0 || w % scale != 0 {
        return Err(Error::param(format!(
            "{h}x{w} is not divisible by scale {scale}; crop first"
        )));
    }
    let (lh, lw) = (h / scale, w / scale);
    let mut out = vec![0.0; lh * lw * c];
    let inv = 1.0 / (scale * scale) as f64;
    for y in 0..lh {
        for x in 0..lw {
            for ch in 0..c {
                out[(y * lw + x) * c + ch] = match method {
                    DownMethod::Point => input.get(y * scale, x * scale, ch),
                    DownMethod::Box => {
                        let mut s = 0.0;
                        for dy in 0..scale {
                            for dx in 0..scale {
                                s += input.get(y * scale + dy, x * scale + dx, ch);
                            }
                        }
                        s * inv
                    }
                };
            }
        }
    }
    Ok(Image::from_raw(lh, lw, c, out))
}

fn cubic(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source taps `(index, weight)` for every output coordinate along one axis.
/// Output sample `i` sits at source coordinate `(i + 0.5) / scale - 0.5`.
fn axis_taps(len: usize, scale: usize, method: UpMethod) -> Vec<Vec<(usize, f64)>> {
    let clamp = |i: isize| i.clamp(0, len as isize - 1) as usize;
    (0..len * scale)
        .map(|i| {
            if method == UpMethod::Nearest {
                return vec![(i / scale, 1.0)];
            }
            let src = (i as f64 + 0.5) / scale as f64 - 0.5;
            let base = libm::floor(src);
            let frac = src - base;
            let base = base as isize;
            let mut taps: Vec<(usize, f64)> = match method {
                UpMethod::Bicubic => (-1..=2)
                    .map(|k| (clamp(base + k), cubic(frac - k as f64)))
                    .collect(),
                _ => vec![(clamp(base), 1.0 - frac), (clamp(base + 1), frac)],
            };
            let total: f64 = taps.iter().map(|t| t.1).sum();
            for t in taps.iter_mut() {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

pub fn upsample(input: &Image, scale: usize, method: UpMethod) -> Result<Image> {
    let (h, w, c) = input.dims();
    let (oh, ow) = (h * scale, w * scale);
    let xt = axis_taps(w, scale, method);
    let yt = axis_taps(h, scale, method);
    let src = input.data();
    let mut tmp = vec![0.0; h * ow * c];
    for y in 0..h {
        for (x, taps) in xt.iter().enumerate() {
            for ch in 0..c {
                tmp[(y * ow + x) * c + ch] = taps
                    .iter()
                    .map(|&(sx, wt)| wt * src[(y * w + sx) * c + ch])
                    .sum();
            }
        }
    }
    let mut out = vec![0.0; oh * ow * c];
    for (y, taps) in yt.iter().enumerate() {
        for x in 0..ow {
            for ch in 0..c {
                out[(y * ow + x) * c + ch] = taps
                    .iter()
                    .map(|&(sy, wt)| wt * tmp[(sy * ow + x) * c + ch])
                    .sum();
            }
        }
    }
    Ok(Image::from_raw(oh, ow, c, out))
}
