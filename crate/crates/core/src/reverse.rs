//! The fixed-point reverse filtering engine.
//!
//! Starting from `X^0 = J*`, each step evaluates the filter once and adds the
//! residual back: `X^{t+1} = X^t + (J* - f(X^t))`. This is fixed-point
//! iteration on `g(X) = X + J* - f(X)`; whenever `X - f(X)` is a contraction
//! with constant `c < 1`, the iterates converge geometrically to the unique
//! `X*` with `f(X*) = J*`.
//!
//! The engine records data-term (DT) quality `PSNR(J*, f(X^t))` for every
//! iterate, and ground-truth (GT) quality `PSNR(I*, X^t)` when a reference is
//! supplied. The reference never feeds back into the update.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::filters::Filter;
use crate::image::Image;
use crate::metrics::{distance, norm, psnr, psnr_from_mse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopPolicy {
    /// Run exactly `max_iters` updates.
    #[default]
    FixedCount,
    /// Stop once the DT residual has risen for `patience` consecutive
    /// iterations.
    EarlyStopOnDtRise { patience: usize },
}

/// Criterion used to pick the best iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BestCriterion {
    /// Smallest `||J* - f(X^t)||`, i.e. highest DT PSNR.
    #[default]
    DtError,
    /// Highest GT PSNR. Falls back to [`BestCriterion::DtError`] when no
    /// ground truth is tracked.
    GtError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseConfig {
    pub max_iters: usize,
    pub ground_truth: Option<Image>,
    pub stop_policy: StopPolicy,
    pub keep_best_by: BestCriterion,
    /// Starting iterate. `None` means `X^0 = J*`.
    pub init: Option<Image>,
}

impl Default for ReverseConfig {
    fn default() -> Self {
        ReverseConfig {
            max_iters: 50,
            ground_truth: None,
            stop_policy: StopPolicy::FixedCount,
            keep_best_by: BestCriterion::DtError,
            init: None,
        }
    }
}

impl ReverseConfig {
    pub fn new(max_iters: usize) -> Self {
        ReverseConfig {
            max_iters,
            ..Default::default()
        }
    }

    pub fn with_ground_truth(mut self, gt: Image) -> Self {
        self.ground_truth = Some(gt);
        self
    }

    pub fn with_stop_policy(mut self, policy: StopPolicy) -> Self {
        self.stop_policy = policy;
        self
    }

    pub fn best_by(mut self, criterion: BestCriterion) -> Self {
        self.keep_best_by = criterion;
        self
    }

    pub fn with_init(mut self, init: Image) -> Self {
        self.init = Some(init);
        self
    }

    fn validate(&self, j_star: &Image) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters must be >= 1"));
        }
        if let StopPolicy::EarlyStopOnDtRise { patience: 0 } = self.stop_policy {
            return Err(Error::param("patience must be >= 1"));
        }
        if let Some(gt) = &self.ground_truth {
            j_star.ensure_compatible(gt)?;
        }
        if let Some(init) = &self.init {
            j_star.ensure_compatible(init)?;
        }
        Ok(())
    }
}

/// Measurements of one iterate `X^t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `PSNR(J*, f(X^t))`.
    pub dt_psnr: f64,
    /// `||J* - f(X^t)||`.
    pub dt_distance: f64,
    /// `PSNR(I*, X^t)` when ground truth is tracked.
    pub gt_psnr: Option<f64>,
    /// `||I* - X^t||` when ground truth is tracked.
    pub gt_distance: Option<f64>,
    /// Step length `||X^{t+1} - X^t||`, which equals the DT residual norm.
    pub residual_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    DtRise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseTrace {
    /// One record per iterate, starting with the initialization at index 0.
    pub records: Vec<IterationRecord>,
    pub best_index: usize,
    /// Criterion actually used for `best_index`.
    pub best_by: BestCriterion,
    /// The final residual fell below `CONVERGENCE_RTOL * ||J*||`.
    pub converged: bool,
    pub stop_reason: StopReason,
}

/// Relative residual below which a run is flagged as converged.
pub const CONVERGENCE_RTOL: f64 = 1e-9;

impl ReverseTrace {
    pub fn final_record(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("trace holds at least one record")
    }

    pub fn best_record(&self) -> &IterationRecord {
        &self.records[self.best_index]
    }

    pub fn init_record(&self) -> &IterationRecord {
        &self.records[0]
    }

    /// Index of the iterate with the highest GT PSNR, if tracked.
    pub fn best_gt_index(&self) -> Option<usize> {
        best_index_by(&self.records, BestCriterion::GtError)
    }

    /// Index of the iterate with the smallest DT residual.
    pub fn best_dt_index(&self) -> usize {
        best_index_by(&self.records, BestCriterion::DtError).expect("non-empty trace")
    }
}

fn score(r: &IterationRecord, by: BestCriterion) -> Option<f64> {
    match by {
        BestCriterion::DtError => Some(-r.dt_distance),
        BestCriterion::GtError => r.gt_distance.map(|d| -d),
    }
}

fn best_index_by(records: &[IterationRecord], by: BestCriterion) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for r in records {
        let s = score(r, by)?;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((r.iter, s));
        }
    }
    best.map(|b| b.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseResult {
    pub final_image: Image,
    pub best_image: Image,
    pub trace: ReverseTrace,
}

fn evaluate<F: Filter + ?Sized>(
    f: &F,
    x: &Image,
    iteration: usize,
) -> core::result::Result<Image, Error> {
    match f.apply(x) {
        Ok(out) => {
            if !out.is_compatible(x) {
                return Err(Error::Filter {
                    iteration: Some(iteration),
                    message: format!(
                        "filter changed dimensions {:?} -> {:?}",
                        x.dims(),
                        out.dims()
                    ),
                });
            }
            Ok(out)
        }
        Err(Error::Filter { message, .. }) => Err(Error::Filter {
            iteration: Some(iteration),
            message,
        }),
        Err(e @ (Error::Numerics(_) | Error::Divergence { .. })) => Err(e),
        Err(e) => Err(Error::Filter {
            iteration: Some(iteration),
            message: format!("{e}"),
        }),
    }
}

/// Runs fixed-point reverse filtering of `j_star` through `f`.
///
/// Performs `config.max_iters` updates (fewer under early stopping) and one
/// extra filter evaluation on the last iterate so that its DT error is
/// recorded.
pub fn reverse_filter<F: Filter + ?Sized>(
    f: &F,
    j_star: &Image,
    config: &ReverseConfig,
) -> Result<ReverseResult> {
    config.validate(j_star)?;
    let best_by = match (config.keep_best_by, &config.ground_truth) {
        (BestCriterion::GtError, Some(_)) => BestCriterion::GtError,
        _ => BestCriterion::DtError,
    };
    let j_norm = norm(j_star);
    let mut x = config.init.clone().unwrap_or_else(|| j_star.clone());
    let mut records: Vec<IterationRecord> = Vec::with_capacity(config.max_iters + 1);
    let mut best_image = x.clone();
    let mut best: Option<(usize, f64)> = None;
    let mut rising = 0usize;
    let mut stop_reason = StopReason::Completed;

    let diverged = |iteration: usize, records: &[IterationRecord], best: Option<(usize, f64)>| {
        Error::Divergence {
            iteration,
            trace: Box::new(ReverseTrace {
                records: records.to_vec(),
                best_index: best.map_or(0, |b| b.0),
                best_by,
                converged: false,
                stop_reason: StopReason::Completed,
            }),
        }
    };

    for t in 0..=config.max_iters {
        let fx = match evaluate(f, &x, t) {
            Ok(fx) if fx.is_finite() => fx,
            Ok(_) | Err(Error::Numerics(_)) => return Err(diverged(t, &records, best)),
            Err(e) => return Err(e),
        };
        let residual = j_star.sub(&fx)?;
        let dt_distance = norm(&residual);
        let (gt_psnr, gt_distance) = match &config.ground_truth {
            Some(gt) => (Some(psnr(gt, &x)?), Some(distance(gt, &x)?)),
            None => (None, None),
        };
        let record = IterationRecord {
            iter: t,
            dt_psnr: psnr_from_mse(dt_distance * dt_distance / j_star.len() as f64),
            dt_distance,
            gt_psnr,
            gt_distance,
            residual_norm: dt_distance,
        };
        let s = score(&record, best_by).expect("criterion available");
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((t, s));
            best_image = x.clone();
        }
        if let Some(prev) = records.last() {
            if dt_distance > prev.dt_distance {
                rising += 1;
            } else {
                rising = 0;
            }
        }
        records.push(record);

        if let StopPolicy::EarlyStopOnDtRise { patience } = config.stop_policy {
            if rising >= patience {
                stop_reason = StopReason::DtRise;
                break;
            }
        }
        if t == config.max_iters {
            break;
        }
        let next = x.add(&residual)?;
        if !next.is_finite() {
            return Err(diverged(t + 1, &records, best));
        }
        x = next;
    }

    let last = records.last().expect("at least one record");
    let converged = last.residual_norm <= CONVERGENCE_RTOL * j_norm;
    let best_index = best.map_or(0, |b| b.0);
    Ok(ReverseResult {
        final_image: x,
        best_image,
        trace: ReverseTrace {
            records,
            best_index,
            best_by,
            converged,
            stop_reason,
        },
    })
}

/// `||g(x) - x|| = ||J* - f(x)||`, zero exactly when `x` is a fixed point.
pub fn fixed_point_residual<F: Filter + ?Sized>(f: &F, x: &Image, j_star: &Image) -> Result<f64> {
    x.ensure_compatible(j_star)?;
    let fx = evaluate(f, x, 0)?;
    distance(j_star, &fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::{apply_filter, Boundary, FilterSpec};
    use crate::kernel::Kernel;
    use core::cell::Cell;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn half(x: &Image) -> Result<Image> {
        Ok(x.scale(0.5))
    }

    fn random_image(seed: u64, h: usize, w: usize, c: usize) -> Image {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        Image::from_fn(h, w, c, |_, _, _| rng.random::<f64>()).unwrap()
    }

    #[test]
    fn identity_filter_is_stationary() {
        let j = random_image(1, 6, 6, 3);
        let res = reverse_filter(&FilterSpec::Identity, &j, &ReverseConfig::new(5)).unwrap();
        assert_eq!(res.final_image, j);
        assert_eq!(res.trace.records.len(), 6);
        assert!(res.trace.records.iter().all(|r| r.residual_norm == 0.0));
        assert!(res.trace.converged);
    }

    #[test]
    fn scalar_half_map_closed_form() {
        let j = Image::filled(4, 4, 1, 0.5).unwrap();
        let gt = Image::filled(4, 4, 1, 1.0).unwrap();
        let cfg = ReverseConfig::new(20).with_ground_truth(gt.clone());
        let mut x = j.clone();
        for (t, expect) in [0.5, 0.75, 0.875].into_iter().enumerate() {
            assert!(x.data().iter().all(|&v| v == expect), "t={t}");
            x = x.add(&j.sub(&half(&x).unwrap()).unwrap()).unwrap();
        }
        let res = reverse_filter(&half, &j, &cfg).unwrap();
        for r in &res.trace.records {
            let err = 0.5f64.powi(r.iter as i32 + 1);
            assert!((r.gt_distance.unwrap() - err * 4.0).abs() < 1e-12);
        }
        let v = res.final_image.get(0, 0, 0);
        assert!((v - (1.0 - 0.5f64.powi(21))).abs() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let img = random_image(2, 8, 8, 1);
        let spec = FilterSpec::gaussian(1.0);
        let j = apply_filter(&spec, &img).unwrap();
        assert_eq!(fixed_point_residual(&spec, &img, &j).unwrap(), 0.0);

        let other = random_image(3, 8, 8, 1);
        assert_eq!(
            fixed_point_residual(&FilterSpec::Identity, &other, &j).unwrap(),
            distance(&j, &other).unwrap()
        );

        let c = Image::filled(4, 4, 1, 0.5).unwrap();
        // |0.5 - 0.25| * sqrt(16)
        assert_eq!(fixed_point_residual(&half, &c, &c).unwrap(), 1.0);
    }

    #[test]
    fn true_input_is_a_fixed_point() {
        let img = random_image(4, 10, 10, 3);
        for spec in [
            FilterSpec::gaussian(1.5),
            FilterSpec::Bilateral {
                sigma_s: 2.0,
                sigma_r: 0.2,
                radius: 3,
            },
            FilterSpec::Median { radius: 1 },
            FilterSpec::down_up(2),
        ] {
            let j = apply_filter(&spec, &img).unwrap();
            let cfg = ReverseConfig::new(1).with_init(img.clone());
            let res = reverse_filter(&spec, &j, &cfg).unwrap();
            assert_eq!(res.final_image, img, "{spec:?}");
        }
    }

    #[test]
    fn divergence_carries_trace() {
        let j = Image::filled(3, 3, 1, 0.5).unwrap();
        let blow_up = |x: &Image| Ok(x.scale(1e200));
        match reverse_filter(&blow_up, &j, &ReverseConfig::new(10)) {
            Err(Error::Divergence { iteration, trace }) => {
                assert!(iteration >= 1);
                assert_eq!(trace.records.len(), iteration);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn filter_error_reports_iteration() {
        let calls = Cell::new(0usize);
        let flaky = |x: &Image| {
            calls.set(calls.get() + 1);
            if calls.get() > 3 {
                Err(Error::filter("boom"))
            } else {
                Ok(x.scale(0.9))
            }
        };
        let j = Image::filled(2, 2, 1, 0.5).unwrap();
        match reverse_filter(&flaky, &j, &ReverseConfig::new(10)) {
            Err(Error::Filter { iteration, .. }) => assert_eq!(iteration, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let j = Image::filled(2, 2, 1, 0.5).unwrap();
        assert!(reverse_filter(&half, &j, &ReverseConfig::new(0)).is_err());
        let bad =
            ReverseConfig::new(3).with_stop_policy(StopPolicy::EarlyStopOnDtRise { patience: 0 });
        assert!(reverse_filter(&half, &j, &bad).is_err());
        let gt = Image::filled(3, 2, 1, 0.5).unwrap();
        assert!(matches!(
            reverse_filter(&half, &j, &ReverseConfig::new(3).with_ground_truth(gt)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn early_stop_on_rising_dt() {
        // expanding map: residual grows every step after the first
        let j = Image::filled(3, 3, 1, 0.5).unwrap();
        let expand = |x: &Image| Ok(x.scale(2.5));
        let cfg =
            ReverseConfig::new(50).with_stop_policy(StopPolicy::EarlyStopOnDtRise { patience: 3 });
        let res = reverse_filter(&expand, &j, &cfg).unwrap();
        assert_eq!(res.trace.stop_reason, StopReason::DtRise);
        assert!(res.trace.records.len() < 51);
        assert_eq!(res.trace.best_index, 0);
        assert_eq!(res.best_image, j);
    }

    #[test]
    fn gt_criterion_falls_back_without_reference() {
        let j = Image::filled(2, 2, 1, 0.5).unwrap();
        let res = reverse_filter(
            &half,
            &j,
            &ReverseConfig::new(3).best_by(BestCriterion::GtError),
        )
        .unwrap();
        assert_eq!(res.trace.best_by, BestCriterion::DtError);
    }

    #[test]
    fn gamma_two_recovers_square_root() {
        let img = random_image(7, 8, 8, 1).map(|v| 0.1 + 0.9 * v);
        let spec = FilterSpec::Gamma { gamma: 2.0 };
        let j = img.map(|v| v * v);
        let res = reverse_filter(
            &spec,
            &j,
            &ReverseConfig::new(50).with_ground_truth(img.clone()),
        )
        .unwrap();
        let oracle = j.map(|v| v.sqrt());
        assert!(psnr(&oracle, &res.final_image).unwrap() >= 60.0);
    }

    fn strict_kernel(rng: &mut impl Rng) -> Kernel {
        let mut w: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        w[4] = 0.0;
        let s: f64 = w.iter().sum();
        for v in w.iter_mut() {
            *v *= 0.4 / s;
        }
        w[4] = 0.6;
        Kernel::new(3, 3, w).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn geometric_convergence_and_monotone_residual(seed in any::<u64>()) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let kernel = strict_kernel(&mut rng);
            // |1 - K(w)| <= (1 - 0.6) + sum of off-centre weights = 0.8
            let c: f64 = 0.8;
            let spec = FilterSpec::Conv { kernel, boundary: Boundary::Periodic };
            let gt = random_image(seed, 16, 16, 1);
            let j = apply_filter(&spec, &gt).unwrap();
            let res = reverse_filter(&spec, &j, &ReverseConfig::new(20).with_ground_truth(gt)).unwrap();
            let e0 = res.trace.records[0].gt_distance.unwrap();
            for r in &res.trace.records {
                let bound = c.powi(r.iter as i32) * e0;
                prop_assert!(r.gt_distance.unwrap() <= bound * (1.0 + 1e-6) + 1e-15);
            }
            for w in res.trace.records.windows(2) {
                prop_assert!(w[1].residual_norm <= w[0].residual_norm + 1e-9);
            }
        }

        #[test]
        fn trace_is_reproducible_and_best_is_argmax(seed in any::<u64>()) {
            let gt = random_image(seed, 12, 12, 1);
            let spec = FilterSpec::Disk { radius: 2.0, support: None, boundary: Boundary::Periodic };
            let j = apply_filter(&spec, &gt).unwrap();
            for by in [BestCriterion::DtError, BestCriterion::GtError] {
                let cfg = ReverseConfig::new(15).with_ground_truth(gt.clone()).best_by(by);
                let a = reverse_filter(&spec, &j, &cfg).unwrap();
                let b = reverse_filter(&spec, &j, &cfg).unwrap();
                prop_assert_eq!(&a, &b);
                let best = score(a.trace.best_record(), by).unwrap();
                prop_assert!(a.trace.records.iter().all(|r| score(r, by).unwrap() <= best));
                prop_assert!(score(a.trace.final_record(), by).unwrap() <= best);
            }
        }
    }
}
