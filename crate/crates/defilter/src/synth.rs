//! Deterministic synthetic test images with natural-image statistics: smooth
//! shading, a few sharp-edged objects and 1/f texture, lightly anti-aliased.

use defilter_core::fft::{Complex64, Fft2};
use defilter_core::filters::convolve;
use defilter_core::{Boundary, Image, Kernel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const DISKS: usize = 6;
const DISK_CONTRAST: f64 = 0.3;
const TEXTURE: f64 = 0.05;
const EDGE_SIGMA: f64 = 0.8;

/// 1/f noise with unit standard deviation.
fn pink_noise(h: usize, w: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let white: Vec<f64> = (0..h * w).map(|_| StandardNormal.sample(rng)).collect();
    let plan = Fft2::new(h, w);
    let mut spec = plan.forward_real(&white);
    for u in 0..h {
        let fu = u.min(h - u) as f64 / h as f64;
        for v in 0..w {
            let fv = v.min(w - v) as f64 / w as f64;
            let f = (fu * fu + fv * fv).sqrt();
            spec[u * w + v] = if f == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                spec[u * w + v] / f
            };
        }
    }
    let mut noise = plan.inverse_real(spec);
    let mean = noise.iter().sum::<f64>() / noise.len() as f64;
    let sd = (noise.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / noise.len() as f64).sqrt();
    for v in noise.iter_mut() {
        *v = (*v - mean) / sd.max(f64::MIN_POSITIVE);
    }
    noise
}

/// A `height x width` image with 1 or 3 channels; identical seeds give
/// identical images.
pub fn natural_image(height: usize, width: usize, channels: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = height.min(width) as f64;

    let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let wavelength: f64 = rng.random_range(0.25..0.6) * size;
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (ky, kx) = (
        angle.sin() * std::f64::consts::TAU / wavelength,
        angle.cos() * std::f64::consts::TAU / wavelength,
    );
    let disks: Vec<(f64, f64, f64, f64)> = (0..DISKS)
        .map(|_| {
            let cy = rng.random_range(0.0..height as f64);
            let cx = rng.random_range(0.0..width as f64);
            let r = rng.random_range(size / 12.0..size / 4.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (cy, cx, r, sign * DISK_CONTRAST * rng.random_range(0.5..1.0))
        })
        .collect();
    let gains: Vec<f64> = (0..channels).map(|_| rng.random_range(0.8..1.2)).collect();
    let textures: Vec<Vec<f64>> = (0..channels)
        .map(|_| pink_noise(height, width, &mut rng))
        .collect();

    let raw = Image::from_fn(height, width, channels, |y, x, c| {
        let (yf, xf) = (y as f64, x as f64);
        let mut v = 0.5 + 0.12 * (ky * yf + kx * xf + phase).sin();
        for &(cy, cx, r, a) in &disks {
            if (yf - cy).powi(2) + (xf - cx).powi(2) <= r * r {
                v += a;
            }
        }
        0.5 + gains[c] * (v - 0.5) + TEXTURE * textures[c][y * width + x]
    })
    .expect("finite by construction");

    let smooth = Kernel::gaussian(EDGE_SIGMA, 9).expect("valid kernel");
    convolve(&raw, &smooth, Boundary::Symmetric)
        .expect("image larger than the smoothing kernel")
        .map(|v| v.clamp(0.0, 1.0))
}

/// `count` images with consecutive seeds starting at `seed`.
pub fn desk_set(
    count: usize,
    height: usize,
    width: usize,
    channels: usize,
    seed: u64,
) -> Vec<Image> {
    (0..count as u64)
        .map(|i| natural_image(height, width, channels, seed + i))
        .collect()
}
