//! 2-D convolution kernels.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense convolution kernel with an anchor tap.
///
/// Kernels built by the named constructors have odd sides and a centred
/// anchor. [`Kernel::with_anchor`] accepts any side and an explicit anchor,
/// which is how even-length kernels such as `[0.5, 0.5]` are expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    height: usize,
    width: usize,
    anchor: (usize, usize),
    weights: Vec<f64>,
}

impl Kernel {
    /// Odd-sided kernel anchored at its centre. `weights` are row-major.
    pub fn new(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if height.is_multiple_of(2) || width.is_multiple_of(2) {
            return Err(Error::param(format!(
                "kernel sides must be odd, got {height}x{width}"
            )));
        }
        Self::with_anchor(height, width, (height / 2, width / 2), weights)
    }

    pub fn with_anchor(
        height: usize,
        width: usize,
        anchor: (usize, usize),
        weights: Vec<f64>,
    ) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::param("empty kernel"));
        }
        if weights.len() != height * width {
            return Err(Error::param(format!(
                "{} weights for a {height}x{width} kernel",
                weights.len()
            )));
        }
        if anchor.0 >= height || anchor.1 >= width {
            return Err(Error::param(format!(
                "anchor {anchor:?} outside {height}x{width} kernel"
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::param("non-finite kernel weight"));
        }
        Ok(Kernel {
            height,
            width,
            anchor,
            weights,
        })
    }

    /// The 1x1 unit impulse.
    pub fn delta() -> Self {
        Kernel {
            height: 1,
            width: 1,
            anchor: (0, 0),
            weights: vec![1.0],
        }
    }

    /// Sampled `exp(-(x^2 + y^2) / (2 sigma^2))` on a `support x support`
    /// grid, normalized to unit sum.
    pub fn gaussian(sigma: f64, support: usize) -> Result<Self> {
        check_support(support)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!(
                "gaussian sigma must be > 0, got {sigma}"
            )));
        }
        let half = (support / 2) as isize;
        let mut w = Vec::with_capacity(support * support);
        for y in -half..=half {
            for x in -half..=half {
                let r2 = (x * x + y * y) as f64;
                w.push(libm::exp(-r2 / (2.0 * sigma * sigma)));
            }
        }
        normalize(&mut w);
        Self::new(support, support, w)
    }

    /// Normalized 1-D Gaussian taps; the outer product of this vector with
    /// itself is [`Kernel::gaussian`] up to rounding.
    pub fn gaussian_taps(sigma: f64, support: usize) -> Result<Vec<f64>> {
        check_support(support)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param(format!(
                "gaussian sigma must be > 0, got {sigma}"
            )));
        }
        let half = (support / 2) as isize;
        let mut w: Vec<f64> = (-half..=half)
            .map(|x| libm::exp(-((x * x) as f64) / (2.0 * sigma * sigma)))
            .collect();
        normalize(&mut w);
        Ok(w)
    }

    /// Hard indicator of the disk `x^2 + y^2 <= r^2`, normalized to unit sum.
    /// No anti-aliasing of edge taps.
    pub fn disk(radius: f64, support: usize) -> Result<Self> {
        check_support(support)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param(format!(
                "disk radius must be > 0, got {radius}"
            )));
        }
        let half = (support / 2) as isize;
        let mut w = Vec::with_capacity(support * support);
        for y in -half..=half {
            for x in -half..=half {
                let inside = ((x * x + y * y) as f64) <= radius * radius;
                w.push(if inside { 1.0 } else { 0.0 });
            }
        }
        normalize(&mut w);
        Self::new(support, support, w)
    }

    /// Uniform `(2r+1) x (2r+1)` average.
    pub fn boxed(radius: usize) -> Result<Self> {
        let side = 2 * radius + 1;
        let n = (side * side) as f64;
        Self::new(side, side, vec![1.0 / n; side * side])
    }

    /// `a * self + b * other`, both anchored at their centres. The result
    /// takes the larger extent in each direction.
    pub fn combine(&self, a: f64, other: &Kernel, b: f64) -> Result<Self> {
        let up = self.anchor.0.max(other.anchor.0);
        let left = self.anchor.1.max(other.anchor.1);
        let down = (self.height - 1 - self.anchor.0).max(other.height - 1 - other.anchor.0);
        let right = (self.width - 1 - self.anchor.1).max(other.width - 1 - other.anchor.1);
        let (h, w) = (up + down + 1, left + right + 1);
        let mut out = vec![0.0; h * w];
        for (k, s) in [(self, a), (other, b)] {
            for (dy, dx, v) in k.taps() {
                let y = (up as isize + dy) as usize;
                let x = (left as isize + dx) as usize;
                out[y * w + x] += s * v;
            }
        }
        Self::with_anchor(h, w, (up, left), out)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn anchor(&self) -> (usize, usize) {
        self.anchor
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, y: usize, x: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Nonzero taps as `(dy, dx, weight)` offsets from the anchor, in
    /// row-major order.
    pub fn taps(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let (ay, ax) = (self.anchor.0 as isize, self.anchor.1 as isize);
        let w = self.width;
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(move |(i, &v)| ((i / w) as isize - ay, (i % w) as isize - ax, v))
    }
}

fn check_support(support: usize) -> Result<()> {
    if support < 3 || support.is_multiple_of(2) {
        return Err(Error::param(format!(
            "kernel support must be odd and >= 3, got {support}"
        )));
    }
    Ok(())
}

fn normalize(w: &mut [f64]) {
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
}

/// Default Gaussian support: the odd number nearest above `6 sigma + 1`,
/// capped at the largest odd side that fits `limit`.
pub fn default_gaussian_support(sigma: f64, limit: usize) -> usize {
    let mut s = libm::ceil(6.0 * sigma + 1.0) as usize;
    if s.is_multiple_of(2) {
        s += 1;
    }
    let cap = if limit.is_multiple_of(2) {
        limit.saturating_sub(1)
    } else {
        limit
    };
    s.min(cap).max(3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_normalization_and_limit() {
        let k = Kernel::gaussian(2.0, 21).unwrap();
        assert!((k.sum() - 1.0).abs() < 1e-12);
        let tiny = Kernel::gaussian(1e-6, 3).unwrap();
        assert!(tiny.weight(1, 1) >= 1.0 - 1e-9);
    }

    #[test]
    fn gaussian_center_matches_separable_product() {
        // independent 1-D sampling: center weight = (1 / Z1)^2
        let z1: f64 = (-10..=10).map(|x: i32| (-(x * x) as f64 / 8.0).exp()).sum();
        let k = Kernel::gaussian(2.0, 21).unwrap();
        assert!((k.weight(10, 10) - 1.0 / (z1 * z1)).abs() < 1e-15);
        let taps = Kernel::gaussian_taps(2.0, 21).unwrap();
        assert!((taps[3] * taps[17] - k.weight(3, 17)).abs() < 1e-16);
    }

    #[test]
    fn support_validation() {
        assert!(matches!(Kernel::gaussian(2.0, 20), Err(Error::Param(_))));
        assert!(matches!(Kernel::disk(2.0, 1), Err(Error::Param(_))));
        assert!(Kernel::new(2, 3, vec![0.0; 6]).is_err());
        assert!(Kernel::with_anchor(1, 2, (0, 0), vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn disk_examples() {
        let k = Kernel::disk(0.5, 3).unwrap();
        assert_eq!(k.weights(), &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let k = Kernel::disk(3.0, 21).unwrap();
        let inside: Vec<f64> = k.weights().iter().copied().filter(|&w| w > 0.0).collect();
        assert_eq!(inside.len(), 29);
        assert!(inside.iter().all(|&w| w == inside[0]));
        assert!((k.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn combine_builds_unsharp_kernel() {
        let g = Kernel::gaussian(1.0, 5).unwrap();
        let k = Kernel::delta().combine(1.5, &g, -0.5).unwrap();
        assert_eq!((k.height(), k.width(), k.anchor()), (5, 5, (2, 2)));
        assert!((k.sum() - 1.0).abs() < 1e-12);
        assert!((k.weight(2, 2) - (1.5 - 0.5 * g.weight(2, 2))).abs() < 1e-15);
    }

    #[test]
    fn default_support() {
        assert_eq!(default_gaussian_support(2.0, 1000), 13);
        assert_eq!(default_gaussian_support(2.0, 8), 7);
        assert_eq!(default_gaussian_support(0.1, 100), 3);
    }
}
