use alloc::vec;
use alloc::vec::Vec;

use super::Boundary;
use crate::error::Result;
use crate::image::Image;

/// Self-guided bilateral filter over a `(2 radius + 1)^2` window with
/// symmetric padding. The range term uses the Euclidean distance between
/// colour vectors, so all channels share one set of weights per pixel.
pub fn bilateral(input: &Image, sigma_s: f64, sigma_r: f64, radius: usize) -> Result<Image> {
    let (h, w, c) = input.dims();
    let r = radius as isize;
    let side = 2 * radius + 1;
    let mut spatial = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            spatial.push(libm::exp(
                -((dy * dy + dx * dx) as f64) / (2.0 * sigma_s * sigma_s),
            ));
        }
    }
    let range_scale = -1.0 / (2.0 * sigma_r * sigma_r);
    let src = input.data();
    let mut out = vec![0.0; src.len()];
    let mut acc = vec![0.0; c];
    for y in 0..h {
        for x in 0..w {
            let center = &src[(y * w + x) * c..(y * w + x + 1) * c];
            let mut norm = 0.0;
            acc.iter_mut().for_each(|a| *a = 0.0);
            let mut k = 0;
            for dy in -r..=r {
                let sy = Boundary::Symmetric.index(y as isize + dy, h);
                for dx in -r..=r {
                    let sx = Boundary::Symmetric.index(x as isize + dx, w);
                    let q = &src[(sy * w + sx) * c..(sy * w + sx + 1) * c];
                    let d2: f64 = q.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    let wt = spatial[k] * libm::exp(d2 * range_scale);
                    k += 1;
                    norm += wt;
                    for (a, v) in acc.iter_mut().zip(q) {
                        *a += wt * v;
                    }
                }
            }
            let dst = &mut out[(y * w + x) * c..(y * w + x + 1) * c];
            for (d, a) in dst.iter_mut().zip(&acc) {
                *d = a / norm;
            }
        }
    }
    Ok(Image::from_raw(h, w, c, out))
}
