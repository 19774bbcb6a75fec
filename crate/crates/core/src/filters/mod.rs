//! Built-in filters. Every filter is a pure, deterministic `Image -> Image`
//! map that preserves dimensions.

mod bilateral;
mod conv;
mod guided;
mod median;
mod pointwise;
mod resample;

use alloc::format;
use alloc::string::String;

pub use bilateral::bilateral;
pub use conv::{convolve, convolve_separable};
pub use guided::{box_mean, guided};
pub use median::median;
pub use pointwise::{gamma, unsharp, GAMMA_FLOOR};
pub use resample::{down_up, DownMethod, UpMethod};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernel::{default_gaussian_support, Kernel};

/// How convolution reads samples outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Circular wrap-around; makes convolution exactly diagonal in the DFT
    /// basis.
    #[default]
    Periodic,
    /// Mirror with the edge sample repeated (`c b a | a b c | c b a`).
    Symmetric,
}

impl Boundary {
    #[inline]
    pub(crate) fn index(self, i: isize, n: usize) -> usize {
        let n = n as isize;
        match self {
            Boundary::Periodic => i.rem_euclid(n) as usize,
            Boundary::Symmetric => {
                let m = i.rem_euclid(2 * n);
                (if m < n { m } else { 2 * n - 1 - m }) as usize
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Symmetric => "symmetric",
        }
    }
}

/// Anything that can stand in for `f` in the reverse iteration.
pub trait Filter {
    fn apply(&self, input: &Image) -> Result<Image>;
}

impl<F> Filter for F
where
    F: Fn(&Image) -> Result<Image>,
{
    fn apply(&self, input: &Image) -> Result<Image> {
        self(input)
    }
}

/// A built-in parametric filter.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterSpec {
    Identity,
    /// Gaussian blur. `support: None` picks `odd(6 sigma + 1)` capped to the
    /// image size.
    Gaussian {
        sigma: f64,
        support: Option<usize>,
        boundary: Boundary,
    },
    Box {
        radius: usize,
        boundary: Boundary,
    },
    /// Hard-edged disk blur. `support: None` picks `2 ceil(r) + 1`.
    Disk {
        radius: f64,
        support: Option<usize>,
        boundary: Boundary,
    },
    Conv {
        kernel: Kernel,
        boundary: Boundary,
    },
    Bilateral {
        sigma_s: f64,
        sigma_r: f64,
        radius: usize,
    },
    Guided {
        radius: usize,
        eps: f64,
    },
    Median {
        radius: usize,
    },
    Gamma {
        gamma: f64,
    },
    /// `I + lambda (I - G_sigma * I)`.
    Unsharp {
        lambda: f64,
        sigma: f64,
        support: Option<usize>,
        boundary: Boundary,
    },
    /// Downsample by an integer factor, then upsample back.
    DownUp {
        scale: usize,
        down: DownMethod,
        up: UpMethod,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("{name} must be > 0, got {v}")))
    }
}

impl FilterSpec {
    pub fn gaussian(sigma: f64) -> Self {
        FilterSpec::Gaussian {
            sigma,
            support: None,
            boundary: Boundary::Periodic,
        }
    }

    pub fn down_up(scale: usize) -> Self {
        FilterSpec::DownUp {
            scale,
            down: DownMethod::Box,
            up: UpMethod::Bicubic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FilterSpec::Identity | FilterSpec::Conv { .. } | FilterSpec::Box { .. } => Ok(()),
            FilterSpec::Gaussian { sigma, support, .. } => {
                positive("sigma", *sigma)?;
                if let Some(s) = support {
                    Kernel::gaussian_taps(*sigma, *s)?;
                }
                Ok(())
            }
            FilterSpec::Disk {
                radius, support, ..
            } => {
                positive("radius", *radius)?;
                if let Some(s) = support {
                    Kernel::disk(*radius, *s)?;
                }
                Ok(())
            }
            FilterSpec::Bilateral {
                sigma_s,
                sigma_r,
                radius,
            } => {
                positive("sigma_s", *sigma_s)?;
                positive("sigma_r", *sigma_r)?;
                if *radius == 0 {
                    return Err(Error::param("bilateral radius must be >= 1"));
                }
                Ok(())
            }
            FilterSpec::Guided { radius, eps } => {
                positive("eps", *eps)?;
                if *radius == 0 {
                    return Err(Error::param("guided radius must be >= 1"));
                }
                Ok(())
            }
            FilterSpec::Median { radius } => {
                if *radius == 0 {
                    return Err(Error::param("median radius must be >= 1"));
                }
                Ok(())
            }
            FilterSpec::Gamma { gamma } => positive("gamma", *gamma),
            FilterSpec::Unsharp {
                lambda,
                sigma,
                support,
                ..
            } => {
                if !(*lambda >= 0.0 && lambda.is_finite()) {
                    return Err(Error::param(format!("lambda must be >= 0, got {lambda}")));
                }
                positive("sigma", *sigma)?;
                if let Some(s) = support {
                    Kernel::gaussian_taps(*sigma, *s)?;
                }
                Ok(())
            }
            FilterSpec::DownUp { scale, .. } => {
                if *scale < 2 {
                    return Err(Error::param(format!("scale must be >= 2, got {scale}")));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FilterSpec::Identity => "identity",
            FilterSpec::Gaussian { .. } => "gaussian",
            FilterSpec::Box { .. } => "box",
            FilterSpec::Disk { .. } => "disk",
            FilterSpec::Conv { .. } => "conv",
            FilterSpec::Bilateral { .. } => "bilateral",
            FilterSpec::Guided { .. } => "guided",
            FilterSpec::Median { .. } => "median",
            FilterSpec::Gamma { .. } => "gamma",
            FilterSpec::Unsharp { .. } => "unsharp",
            FilterSpec::DownUp { .. } => "downup",
        }
    }

    /// The convolution kernel and boundary of a linear shift-invariant
    /// filter, as it would be applied to an image of `height x width`.
    /// `None` for nonlinear or shift-variant filters.
    pub fn linear_kernel(&self, height: usize, width: usize) -> Result<Option<(Kernel, Boundary)>> {
        self.validate()?;
        let limit = height.min(width);
        Ok(match self {
            FilterSpec::Identity => Some((Kernel::delta(), Boundary::Periodic)),
            FilterSpec::Gaussian {
                sigma,
                support,
                boundary,
            } => {
                let s = support.unwrap_or_else(|| default_gaussian_support(*sigma, limit));
                Some((Kernel::gaussian(*sigma, s)?, *boundary))
            }
            FilterSpec::Box { radius, boundary } => Some((Kernel::boxed(*radius)?, *boundary)),
            FilterSpec::Disk {
                radius,
                support,
                boundary,
            } => {
                let s = support.unwrap_or_else(|| disk_support(*radius));
                Some((Kernel::disk(*radius, s)?, *boundary))
            }
            FilterSpec::Conv { kernel, boundary } => Some((kernel.clone(), *boundary)),
            FilterSpec::Unsharp {
                lambda,
                sigma,
                support,
                boundary,
            } => {
                let s = support.unwrap_or_else(|| default_gaussian_support(*sigma, limit));
                let g = Kernel::gaussian(*sigma, s)?;
                Some((
                    Kernel::delta().combine(1.0 + lambda, &g, -lambda)?,
                    *boundary,
                ))
            }
            _ => None,
        })
    }

    /// Warnings about this filter that do not prevent its use.
    pub fn warnings(&self, height: usize, width: usize) -> alloc::vec::Vec<String> {
        let mut out = alloc::vec::Vec::new();
        let limit = height.min(width);
        let gaussian_support = match self {
            FilterSpec::Gaussian { sigma, support, .. }
            | FilterSpec::Unsharp { sigma, support, .. } => Some((
                *sigma,
                support.unwrap_or_else(|| default_gaussian_support(*sigma, limit)),
            )),
            _ => None,
        };
        if let Some((sigma, s)) = gaussian_support {
            let full = default_gaussian_support(sigma, usize::MAX);
            if s < full {
                out.push(format!(
                    "gaussian support {s} is below odd(6 sigma + 1) = {full}; the truncated kernel may not be a contraction"
                ));
            }
        }
        if let FilterSpec::Unsharp { lambda, .. } = self {
            if *lambda >= 1.0 {
                out.push(format!(
                    "unsharp lambda = {lambda} >= 1: contraction is not guaranteed"
                ));
            }
        }
        out
    }
}

fn disk_support(radius: f64) -> usize {
    (2 * libm::ceil(radius) as usize + 1).max(3)
}

impl Filter for FilterSpec {
    fn apply(&self, input: &Image) -> Result<Image> {
        apply_filter(self, input)
    }
}

/// Applies a built-in filter.
pub fn apply_filter(spec: &FilterSpec, input: &Image) -> Result<Image> {
    spec.validate()?;
    let (h, w, _) = input.dims();
    let out = match spec {
        FilterSpec::Identity => input.clone(),
        FilterSpec::Gaussian {
            sigma,
            support,
            boundary,
        } => {
            let s = support.unwrap_or_else(|| default_gaussian_support(*sigma, h.min(w)));
            let taps = Kernel::gaussian_taps(*sigma, s)?;
            convolve_separable(input, &taps, &taps, *boundary)?
        }
        FilterSpec::Box { radius, boundary } => {
            let side = 2 * radius + 1;
            let taps = alloc::vec![1.0 / side as f64; side];
            convolve_separable(input, &taps, &taps, *boundary)?
        }
        FilterSpec::Disk { .. } | FilterSpec::Conv { .. } => {
            let (kernel, boundary) = spec.linear_kernel(h, w)?.expect("disk and conv are linear");
            convolve(input, &kernel, boundary)?
        }
        FilterSpec::Bilateral {
            sigma_s,
            sigma_r,
            radius,
        } => bilateral(input, *sigma_s, *sigma_r, *radius)?,
        FilterSpec::Guided { radius, eps } => guided(input, *radius, *eps)?,
        FilterSpec::Median { radius } => median(input, *radius)?,
        FilterSpec::Gamma { gamma: g } => gamma(input, *g)?,
        FilterSpec::Unsharp {
            lambda,
            sigma,
            support,
            boundary,
        } => unsharp(input, *lambda, *sigma, *support, *boundary)?,
        FilterSpec::DownUp { scale, down, up } => down_up(input, *scale, *down, *up)?,
    };
    if !out.is_finite() {
        return Err(Error::Numerics(format!(
            "{} produced non-finite output",
            spec.name()
        )));
    }
    Ok(out)
}
