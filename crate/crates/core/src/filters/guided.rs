use alloc::vec;

use super::{convolve_separable, Boundary};
use crate::error::Result;
use crate::image::Image;

/// Mean over a `(2 radius + 1)^2` window with symmetric padding.
pub fn box_mean(input: &Image, radius: usize) -> Result<Image> {
    let side = 2 * radius + 1;
    let taps = vec![1.0 / side as f64; side];
    convolve_separable(input, &taps, &taps, Boundary::Symmetric)
}

/// Self-guided filter, per channel:
/// `a = var / (var + eps)`, `b = mean - a mean`, `out = mean(a) I + mean(b)`.
pub fn guided(input: &Image, radius: usize, eps: f64) -> Result<Image> {
    let mean = box_mean(input, radius)?;
    let mean_sq = box_mean(&input.map(|v| v * v), radius)?;
    let var = mean_sq.zip_map(&mean, |m2, m| m2 - m * m)?;
    let a = var.map(|v| v / (v + eps));
    let b = mean.zip_map(&a, |m, a| m - a * m)?;
    let mean_a = box_mean(&a, radius)?;
    let mean_b = box_mean(&b, radius)?;
    let ai = mean_a.zip_map(input, |a, i| a * i)?;
    ai.add(&mean_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::vec::Vec;

    #[test]
    fn constant_is_unchanged() {
        let img = Image::filled(5, 6, 3, 0.6).unwrap();
        let out = guided(&img, 2, 0.01).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.6).abs() < 1e-12));
    }

    #[test]
    fn huge_eps_is_double_box_mean() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let img = Image::from_fn(9, 9, 1, |_, _, _| rng.random::<f64>()).unwrap();
        let out = guided(&img, 1, 1e6).unwrap();
        let twice = box_mean(&box_mean(&img, 1).unwrap(), 1).unwrap();
        for (a, b) in out.data().iter().zip(twice.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    /// Window statistics computed by explicit enumeration of each window.
    fn naive(img: &Image, r: isize, eps: f64) -> Vec<f64> {
        let (h, w, _) = img.dims();
        let (hi, wi) = (h as isize, w as isize);
        let m = |i: isize, n: isize| -> usize {
            if i < 0 {
                (-i - 1) as usize
            } else if i >= n {
                (2 * n - 1 - i) as usize
            } else {
                i as usize
            }
        };
        let win = |f: &dyn Fn(usize, usize) -> f64, y: isize, x: isize| -> f64 {
            let mut s = 0.0;
            for j in -r..=r {
                for i in -r..=r {
                    s += f(m(y + j, hi), m(x + i, wi));
                }
            }
            s / ((2 * r + 1) * (2 * r + 1)) as f64
        };
        let px = |y: usize, x: usize| img.get(y, x, 0);
        let mut a = vec![0.0; h * w];
        let mut b = vec![0.0; h * w];
        for y in 0..hi {
            for x in 0..wi {
                let mu = win(&px, y, x);
                let e2 = win(&|yy, xx| px(yy, xx) * px(yy, xx), y, x);
                let var = e2 - mu * mu;
                let ak = var / (var + eps);
                a[(y * wi + x) as usize] = ak;
                b[(y * wi + x) as usize] = mu - ak * mu;
            }
        }
        let mut out = Vec::new();
        for y in 0..hi {
            for x in 0..wi {
                let ma = win(&|yy, xx| a[yy * w + xx], y, x);
                let mb = win(&|yy, xx| b[yy * w + xx], y, x);
                out.push(ma * px(y as usize, x as usize) + mb);
            }
        }
        out
    }

    #[test]
    fn matches_windowed_statistics() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(12);
        let img = Image::from_fn(8, 8, 1, |_, _, _| rng.random::<f64>()).unwrap();
        let out = guided(&img, 2, 0.01).unwrap();
        let expect = naive(&img, 2, 0.01);
        for (a, b) in out.data().iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
