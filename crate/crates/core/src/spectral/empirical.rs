use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::filters::Filter;
use crate::image::Image;
use crate::metrics::distance;

/// Sampled contraction ratios of `g(X) = X + J - f(X)` (the `J` term cancels).
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionStats {
    pub ratios: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    /// Share of ratios strictly below one.
    pub fraction_below_one: f64,
    /// Pairs skipped because the two images coincide.
    pub skipped: usize,
}

/// `||(a - f(a)) - (b - f(b))|| / ||a - b||` for each pair.
pub fn empirical_contraction<F: Filter + ?Sized>(
    f: &F,
    pairs: &[(Image, Image)],
) -> Result<ContractionStats> {
    let mut ratios = Vec::with_capacity(pairs.len());
    let mut skipped = 0;
    for (a, b) in pairs {
        a.ensure_compatible(b)?;
        let gap = distance(a, b)?;
        if gap == 0.0 {
            skipped += 1;
            continue;
        }
        let ra = a.sub(&f.apply(a)?)?;
        let rb = b.sub(&f.apply(b)?)?;
        let ratio = distance(&ra, &rb)? / gap;
        if !ratio.is_finite() {
            return Err(Error::Numerics("non-finite contraction ratio".into()));
        }
        ratios.push(ratio);
    }
    if ratios.is_empty() {
        return Err(Error::param("no pair of distinct images to sample"));
    }
    let n = ratios.len() as f64;
    Ok(ContractionStats {
        max: ratios.iter().copied().fold(0.0, f64::max),
        mean: ratios.iter().sum::<f64>() / n,
        fraction_below_one: ratios.iter().filter(|&&r| r < 1.0).count() as f64 / n,
        skipped,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_pairs(n: usize, seed: u64) -> Vec<(Image, Image)> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let a = Image::from_fn(6, 5, 1, |_, _, _| rng.random::<f64>()).unwrap();
                let b = Image::from_fn(6, 5, 1, |_, _, _| rng.random::<f64>()).unwrap();
                (a, b)
            })
            .collect()
    }

    #[test]
    fn identity_has_zero_ratio() {
        let id = |x: &Image| Ok(x.clone());
        let s = empirical_contraction(&id, &random_pairs(4, 1)).unwrap();
        assert!(s.ratios.iter().all(|&r| r == 0.0));
        assert_eq!(s.fraction_below_one, 1.0);
    }

    #[test]
    fn half_scaling_has_half_ratio() {
        let half = |x: &Image| Ok(x.scale(0.5));
        let s = empirical_contraction(&half, &random_pairs(5, 2)).unwrap();
        for r in &s.ratios {
            assert!((r - 0.5).abs() < 1e-12);
        }
        assert!((s.max - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_pairs_are_skipped() {
        let half = |x: &Image| Ok(x.scale(0.5));
        let a = Image::filled(3, 3, 1, 0.2).unwrap();
        let mut pairs = random_pairs(1, 3);
        pairs.push((a.clone(), a.clone()));
        let s = empirical_contraction(&half, &pairs).unwrap();
        assert_eq!((s.ratios.len(), s.skipped), (1, 1));
        assert!(matches!(
            empirical_contraction(&half, &[(a.clone(), a)]),
            Err(Error::Param(_))
        ));
    }
}
