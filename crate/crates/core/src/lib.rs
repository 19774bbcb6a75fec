//! Fixed-point reverse filtering.
//!
//! Given a filtered image `J* = f(I*)` and the ability to evaluate `f`, the
//! fixed-point update `X <- X + (J* - f(X))` recovers `I*` whenever the map
//! `I - f(I)` is a contraction. This crate carries the pure, allocation-only
//! pieces: the image type and metrics, a set of built-in filters, the reverse
//! engine with full iteration tracing, spectral/SVD reversibility analysis and
//! application presets (super-resolution, nonblind deconvolution, pointwise
//! operator reversal).
//!
//! File formats, external black-box filters and the command-line tool live in
//! the `defilter` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod applications;
pub mod error;
pub mod fft;
pub mod filters;
pub mod image;
pub mod kernel;
pub mod metrics;
pub mod reverse;
pub mod spectral;

pub use error::{Error, Result};
pub use filters::{apply_filter, Boundary, Filter, FilterSpec};
pub use image::Image;
pub use kernel::Kernel;
pub use metrics::{distance, mse, psnr, PSNR_CAP_DB};
pub use reverse::{
    fixed_point_residual, reverse_filter, BestCriterion, IterationRecord, ReverseConfig,
    ReverseResult, ReverseTrace, StopPolicy,
};
pub use spectral::{
    analyze_linear_operator, empirical_contraction, kernel_spectrum, matrix_from_conv,
    project_omega, ContractionClass, ContractionStats, LinearOperatorReport, OmegaSide,
    SpectralReport,
};
