//! Presets wiring [`reverse_filter`] to common restoration tasks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::filters::{Boundary, DownMethod, FilterSpec, UpMethod};
use crate::image::Image;
use crate::kernel::Kernel;
use crate::reverse::{reverse_filter, BestCriterion, ReverseConfig, ReverseResult};
use crate::spectral::{kernel_spectrum, SpectralReport};

/// Starting point for super-resolution.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SrInit {
    /// Start from the upsampled input itself.
    #[default]
    Bicubic,
    /// Start from the output of another method (same high-res size).
    Provided(Image),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrConfig {
    pub scale: usize,
    pub iterations: usize,
    pub init: SrInit,
    pub down: DownMethod,
    pub up: UpMethod,
    pub ground_truth: Option<Image>,
}

impl Default for SrConfig {
    fn default() -> Self {
        SrConfig {
            scale: 2,
            iterations: 10,
            init: SrInit::Bicubic,
            down: DownMethod::Box,
            up: UpMethod::Bicubic,
            ground_truth: None,
        }
    }
}

/// Reverses `resize(resize(., 1/s), s)`. The input is the low-resolution
/// image already upsampled to the target size.
pub fn super_resolve(low_res_upsampled: &Image, config: &SrConfig) -> Result<ReverseResult> {
    let (h, w, _) = low_res_upsampled.dims();
    if config.scale < 2 {
        return Err(Error::param(format!(
            "scale must be >= 2, got {}",
            config.scale
        )));
    }
    if h % config.scale != 0 || w % config.scale != 0 {
        return Err(Error::param(format!(
            "{h}x{w} is not divisible by scale {}; crop first",
            config.scale
        )));
    }
    let spec = FilterSpec::DownUp {
        scale: config.scale,
        down: config.down,
        up: config.up,
    };
    let mut rc = ReverseConfig::new(config.iterations).best_by(BestCriterion::DtError);
    if let SrInit::Provided(init) = &config.init {
        rc = rc.with_init(init.clone());
    }
    if let Some(gt) = &config.ground_truth {
        rc = rc.with_ground_truth(gt.clone());
    }
    reverse_filter(&spec, low_res_upsampled, &rc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeconvConfig {
    pub kernel: Kernel,
    pub iterations: usize,
    pub boundary: Boundary,
    pub ground_truth: Option<Image>,
}

impl DeconvConfig {
    pub fn new(kernel: Kernel) -> Self {
        DeconvConfig {
            kernel,
            iterations: 30,
            boundary: Boundary::Periodic,
            ground_truth: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeconvResult {
    pub result: ReverseResult,
    /// Spectrum of the kernel on the image grid, computed before iterating.
    pub report: SpectralReport,
    pub warnings: Vec<String>,
}

/// Nonblind deconvolution with a known kernel. No spectral regularization is
/// applied; the attached report tells whether the kernel is reversible.
pub fn deconvolve(blurred: &Image, config: &DeconvConfig) -> Result<DeconvResult> {
    let report = kernel_spectrum(&config.kernel, (blurred.height(), blurred.width()))?;
    let mut warnings = report.warnings.clone();
    let sum = config.kernel.sum();
    if libm::fabs(sum - 1.0) > 1e-9 {
        warnings.push(format!(
            "kernel sums to {sum}, not 1; brightness will shift"
        ));
    }
    let spec = FilterSpec::Conv {
        kernel: config.kernel.clone(),
        boundary: config.boundary,
    };
    let mut rc = ReverseConfig::new(config.iterations);
    if let Some(gt) = &config.ground_truth {
        rc = rc.with_ground_truth(gt.clone());
    }
    let result = reverse_filter(&spec, blurred, &rc)?;
    Ok(DeconvResult {
        result,
        report,
        warnings,
    })
}

/// Reverses gamma correction or unsharp masking. Other specs are rejected.
pub fn reverse_pointwise(
    filtered: &Image,
    spec: &FilterSpec,
    iterations: usize,
) -> Result<(ReverseResult, Vec<String>)> {
    let mut warnings = Vec::new();
    match spec {
        FilterSpec::Gamma { .. } => {
            if filtered.data().iter().any(|&v| v < 0.0) {
                return Err(Error::param("gamma reversal needs non-negative samples"));
            }
        }
        FilterSpec::Unsharp { lambda, .. } => {
            if *lambda >= 1.0 {
                warnings.push(format!(
                    "unsharp lambda {lambda} >= 1: contraction is not guaranteed"
                ));
            }
        }
        other => {
            return Err(Error::param(format!(
                "reverse_pointwise takes gamma or unsharp, got {}",
                other.name()
            )))
        }
    }
    spec.validate()?;
    let result = reverse_filter(spec, filtered, &ReverseConfig::new(iterations))?;
    Ok((result, warnings))
}
