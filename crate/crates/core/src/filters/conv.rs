use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Boundary;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernel::Kernel;

/// 2-D convolution, applied to each channel:
/// `out(y, x) = sum_{dy,dx} k(dy, dx) in(y - dy, x - dx)` with `(dy, dx)`
/// measured from the kernel anchor. With [`Boundary::Periodic`] this is
/// exactly circular convolution.
///
/// Summation runs over the kernel's nonzero taps in row-major order, so the
/// result is bit-reproducible.
pub fn convolve(input: &Image, kernel: &Kernel, boundary: Boundary) -> Result<Image> {
    let (h, w, c) = input.dims();
    if kernel.height() > h || kernel.width() > w {
        return Err(Error::param(format!(
            "{}x{} kernel is larger than {h}x{w} image",
            kernel.height(),
            kernel.width()
        )));
    }
    let src = input.data();
    let mut out = vec![0.0; src.len()];
    let mut cols: Vec<usize> = vec![0; w];
    for (dy, dx, weight) in kernel.taps() {
        for (x, col) in cols.iter_mut().enumerate() {
            *col = boundary.index(x as isize - dx, w);
        }
        for y in 0..h {
            let sy = boundary.index(y as isize - dy, h);
            let src_row = &src[sy * w * c..(sy + 1) * w * c];
            let dst_row = &mut out[y * w * c..(y + 1) * w * c];
            for (x, &sx) in cols.iter().enumerate() {
                for ch in 0..c {
                    dst_row[x * c + ch] += weight * src_row[sx * c + ch];
                }
            }
        }
    }
    Ok(Image::from_raw(h, w, c, out))
}

/// Separable convolution with centred odd-length taps: `row_taps` along x,
/// then `col_taps` along y.
pub fn convolve_separable(
    input: &Image,
    col_taps: &[f64],
    row_taps: &[f64],
    boundary: Boundary,
) -> Result<Image> {
    let (h, w, c) = input.dims();
    if col_taps.len().is_multiple_of(2) || row_taps.len().is_multiple_of(2) {
        return Err(Error::param("separable taps must have odd length"));
    }
    if col_taps.len() > h || row_taps.len() > w {
        return Err(Error::param(format!(
            "{}x{} kernel is larger than {h}x{w} image",
            col_taps.len(),
            row_taps.len()
        )));
    }
    let src = input.data();
    let rh = (row_taps.len() / 2) as isize;
    let mut tmp = vec![0.0; src.len()];
    for (i, &weight) in row_taps.iter().enumerate() {
        let d = i as isize - rh;
        for x in 0..w {
            let sx = boundary.index(x as isize - d, w);
            for y in 0..h {
                let base = y * w * c;
                for ch in 0..c {
                    tmp[base + x * c + ch] += weight * src[base + sx * c + ch];
                }
            }
        }
    }
    let ch_ = (col_taps.len() / 2) as isize;
    let mut out = vec![0.0; src.len()];
    let row_len = w * c;
    for (i, &weight) in col_taps.iter().enumerate() {
        let d = i as isize - ch_;
        for y in 0..h {
            let sy = boundary.index(y as isize - d, h);
            let s = &tmp[sy * row_len..(sy + 1) * row_len];
            let o = &mut out[y * row_len..(y + 1) * row_len];
            for (ov, sv) in o.iter_mut().zip(s) {
                *ov += weight * sv;
            }
        }
    }
    Ok(Image::from_raw(h, w, c, out))
}
