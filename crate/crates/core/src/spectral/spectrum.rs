use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fft::{Complex64, Fft2};
use crate::image::Image;
use crate::kernel::Kernel;

/// Bins with `|1 - K(p)|` within this distance of 1 are placed outside
/// Omega; they neither converge nor diverge.
pub const OMEGA_BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContractionClass {
    /// Omega covers every component.
    StrictContraction,
    /// Omega is a nonempty proper subset.
    PartiallyReversible,
    /// Omega is empty.
    NonContractive,
}

impl ContractionClass {
    pub fn from_counts(in_omega: usize, total: usize) -> Self {
        if in_omega == total {
            ContractionClass::StrictContraction
        } else if in_omega == 0 {
            ContractionClass::NonContractive
        } else {
            ContractionClass::PartiallyReversible
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ContractionClass::StrictContraction => "StrictContraction",
            ContractionClass::PartiallyReversible => "PartiallyReversible",
            ContractionClass::NonContractive => "NonContractive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaSide {
    Omega,
    OmegaComplement,
}

/// Frequency-domain contraction analysis of a circular convolution on a
/// fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub height: usize,
    pub width: usize,
    /// Row-major DFT of the circularly placed kernel.
    pub spectrum: Vec<Complex64>,
    /// `|1 - K(p)| < 1` per bin.
    pub omega_mask: Vec<bool>,
    /// `max_{p in Omega} |1 - K(p)|` (modulus scale); `None` when Omega is
    /// empty.
    pub contraction_constant: Option<f64>,
    /// `max_p |1 - K(p)|` over all bins.
    pub max_modulus: f64,
    pub omega_fraction: f64,
    /// Share of a supplied image's spectral energy that lies inside Omega.
    pub omega_energy_fraction: Option<f64>,
    pub class: ContractionClass,
    /// Smallest real part of the spectrum.
    pub min_real: f64,
    pub warnings: Vec<String>,
}

impl SpectralReport {
    /// Per-bin moduli `|1 - K(p)|`.
    pub fn contraction_moduli(&self) -> Vec<f64> {
        self.spectrum
            .iter()
            .map(|k| (Complex64::new(1.0, 0.0) - k).norm())
            .collect()
    }

    pub fn omega_count(&self) -> usize {
        self.omega_mask.iter().filter(|&&m| m).count()
    }

    /// Fills `omega_energy_fraction` from `image`, summing `|I(p)|^2` over
    /// all channels.
    pub fn with_energy(mut self, image: &Image) -> Result<Self> {
        self.check_grid(image)?;
        let plan = Fft2::new(self.height, self.width);
        let (mut inside, mut total) = (0.0, 0.0);
        for c in 0..image.channels() {
            let spec = plan.forward_real(image.channel(c).data());
            for (v, &m) in spec.iter().zip(&self.omega_mask) {
                let e = v.norm_sqr();
                total += e;
                if m {
                    inside += e;
                }
            }
        }
        self.omega_energy_fraction = Some(if total > 0.0 { inside / total } else { 1.0 });
        Ok(self)
    }

    fn check_grid(&self, image: &Image) -> Result<()> {
        if image.height() != self.height || image.width() != self.width {
            return Err(Error::dim(format!(
                "image is {}x{}, report grid is {}x{}",
                image.height(),
                image.width(),
                self.height,
                self.width
            )));
        }
        Ok(())
    }
}

/// DFT of a kernel placed circularly around the origin of an `H x W` grid.
pub fn kernel_dft(kernel: &Kernel, height: usize, width: usize) -> Result<Vec<Complex64>> {
    if kernel.height() > height || kernel.width() > width {
        return Err(Error::param(format!(
            "{}x{} kernel does not fit a {height}x{width} grid",
            kernel.height(),
            kernel.width()
        )));
    }
    // Direct separable sum over the kernel support: exact twiddles keep
    // trivial kernels (delta, shifts) exact.
    let twiddles = |n: usize| -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                let a = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect()
    };
    let (th, tw) = (twiddles(height), twiddles(width));
    let (ay, _) = kernel.anchor();
    let kh = kernel.height();
    let mut rows = vec![Complex64::new(0.0, 0.0); kh * width];
    for (dy, dx, w) in kernel.taps() {
        let r = (dy + ay as isize) as usize;
        let dx = dx.rem_euclid(width as isize) as usize;
        for v in 0..width {
            rows[r * width + v] += tw[(v * dx) % width] * w;
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); height * width];
    for r in 0..kh {
        let dy = (r as isize - ay as isize).rem_euclid(height as isize) as usize;
        let row = &rows[r * width..(r + 1) * width];
        if row.iter().all(|z| z.re == 0.0 && z.im == 0.0) {
            continue;
        }
        for u in 0..height {
            let e = th[(u * dy) % height];
            for (o, z) in out[u * width..(u + 1) * width].iter_mut().zip(row) {
                *o += e * z;
            }
        }
    }
    Ok(out)
}

/// Spectral contraction report of circular convolution with `kernel` on a
/// `grid = (H, W)`.
pub fn kernel_spectrum(kernel: &Kernel, grid: (usize, usize)) -> Result<SpectralReport> {
    let (height, width) = grid;
    if height == 0 || width == 0 {
        return Err(Error::param("empty analysis grid"));
    }
    let spectrum = kernel_dft(kernel, height, width)?;
    let one = Complex64::new(1.0, 0.0);
    let moduli: Vec<f64> = spectrum.iter().map(|k| (one - k).norm()).collect();
    let omega_mask: Vec<bool> = moduli
        .iter()
        .map(|&m| m < 1.0 - OMEGA_BOUNDARY_TOL)
        .collect();
    let contraction_constant = moduli
        .iter()
        .zip(&omega_mask)
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    let max_modulus = moduli.iter().copied().fold(0.0, f64::max);
    let min_real = spectrum.iter().map(|k| k.re).fold(f64::INFINITY, f64::min);
    let count = omega_mask.iter().filter(|&&m| m).count();
    let n = height * width;

    let mut warnings = Vec::new();
    let sum = kernel.sum();
    if (sum - 1.0).abs() > 1e-9 {
        warnings.push(format!("kernel weights sum to {sum}, not 1"));
    }
    if min_real < 0.0 && max_modulus < 1.0 + 1e-6 {
        warnings.push(format!(
            "spectrum dips to {min_real:.3e}; bins outside Omega are only marginally expanding (truncated kernel?)"
        ));
    }

    Ok(SpectralReport {
        height,
        width,
        spectrum,
        omega_mask,
        contraction_constant,
        max_modulus,
        omega_fraction: count as f64 / n as f64,
        omega_energy_fraction: None,
        class: ContractionClass::from_counts(count, n),
        min_real,
        warnings,
    })
}

/// Keeps the DFT bins selected by `mask` (or its complement), per channel.
pub fn project_mask(image: &Image, mask: &[bool], side: OmegaSide) -> Result<Image> {
    let (h, w) = (image.height(), image.width());
    if mask.len() != h * w {
        return Err(Error::dim(format!(
            "mask has {} bins, image has {} pixels",
            mask.len(),
            h * w
        )));
    }
    let plan = Fft2::new(h, w);
    let keep = |m: bool| match side {
        OmegaSide::Omega => m,
        OmegaSide::OmegaComplement => !m,
    };
    image.map_channels(|plane| {
        let mut spec = plan.forward_real(plane.data());
        for (v, &m) in spec.iter_mut().zip(mask) {
            if !keep(m) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        Image::new(h, w, 1, plan.inverse_real(spec))
    })
}

/// Projects `image` onto the Omega (or complementary) frequency subspace of
/// `report`. The two sides always sum back to the input.
pub fn project_omega(image: &Image, report: &SpectralReport, side: OmegaSide) -> Result<Image> {
    report.check_grid(image)?;
    project_mask(image, &report.omega_mask, side)
}
