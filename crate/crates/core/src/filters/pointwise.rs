use super::{convolve_separable, Boundary};
use crate::error::Result;
use crate::image::Image;
use crate::kernel::{default_gaussian_support, Kernel};

/// Inputs are clamped below to this value before gamma correction; `v^gamma`
/// has an unbounded derivative at zero for `gamma < 1`.
pub const GAMMA_FLOOR: f64 = 1e-4;

/// Elementwise `max(v, GAMMA_FLOOR)^gamma`.
pub fn gamma(input: &Image, gamma: f64) -> Result<Image> {
    Ok(input.map(|v| libm::pow(v.max(GAMMA_FLOOR), gamma)))
}

/// Unsharp masking `I + lambda (I - G_sigma * I)`.
pub fn unsharp(
    input: &Image,
    lambda: f64,
    sigma: f64,
    support: Option<usize>,
    boundary: Boundary,
) -> Result<Image> {
    let (h, w, _) = input.dims();
    let s = support.unwrap_or_else(|| default_gaussian_support(sigma, h.min(w)));
    let taps = Kernel::gaussian_taps(sigma, s)?;
    let blurred = convolve_separable(input, &taps, &taps, boundary)?;
    input.zip_map(&blurred, |i, b| i + lambda * (i - b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_lambda_is_identity() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(6);
        let img = Image::from_fn(9, 9, 3, |_, _, _| rng.random::<f64>()).unwrap();
        assert_eq!(
            unsharp(&img, 0.0, 2.0, None, Boundary::Periodic).unwrap(),
            img
        );
    }

    #[test]
    fn gamma_clamps_below_floor() {
        let img = Image::new(1, 3, 1, std::vec![-1.0, 0.0, 0.5]).unwrap();
        let out = gamma(&img, 2.0).unwrap();
        assert_eq!(out.data(), &[1e-8, 1e-8, 0.25]);
    }
}
