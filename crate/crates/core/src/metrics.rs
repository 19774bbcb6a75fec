//! Euclidean metric and PSNR on [`Image`]s.
//!
//! PSNR uses peak 1.0 and averages the squared error over every sample of
//! every channel, giving one number per image pair.

use crate::error::Result;
use crate::image::Image;

/// PSNR reported for identical (or numerically indistinguishable) images.
pub const PSNR_CAP_DB: f64 = 99.0;

fn sum_sq_diff(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_compatible(b)?;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum())
}

/// `sqrt(sum_i (a_i - b_i)^2)`.
pub fn distance(a: &Image, b: &Image) -> Result<f64> {
    Ok(libm::sqrt(sum_sq_diff(a, b)?))
}

/// Euclidean norm of an image viewed as a vector.
pub fn norm(a: &Image) -> f64 {
    libm::sqrt(a.data().iter().map(|v| v * v).sum())
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    Ok(sum_sq_diff(a, b)? / a.len() as f64)
}

/// Converts an MSE to PSNR in dB with unit peak, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP_DB;
    }
    let db = -10.0 * libm::log10(mse);
    if db.is_nan() {
        0.0
    } else {
        db.min(PSNR_CAP_DB)
    }
}

pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, test)?))
}
