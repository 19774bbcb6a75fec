//! The image value type: an element of the metric space of `H x W x C` real
//! arrays.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major, channel-interleaved buffer of real intensities.
///
/// Values are nominally in `[0, 1]` but are never clamped; iterates of the
/// reverse loop may leave that range. Every constructor rejects non-finite
/// samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(Error::dim(format!(
                "buffer holds {} samples, {height}x{width}x{channels} needs {}",
                data.len(),
                height * width * channels
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!("non-finite sample at index {i}")));
        }
        Ok(Image {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            height,
            width,
            channels,
            vec![value; height * width * channels],
        )
    }

    /// Builds an image from `f(y, x, channel)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, channels, data)
    }

    /// Skips the finiteness scan. Callers inside the crate use this when the
    /// values are produced by arithmetic that the caller checks separately.
    pub(crate) fn from_raw(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width * channels);
        Image {
            height,
            width,
            channels,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, y: usize, x: usize, c: usize) -> usize {
        (y * self.width + x) * self.channels + c
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[self.index(y, x, c)]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_compatible(&self, other: &Image) -> bool {
        self.dims() == other.dims()
    }

    pub fn ensure_compatible(&self, other: &Image) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::dim(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }

    /// Applies `f` to every sample. The result may hold non-finite values;
    /// check with [`Image::is_finite`] where that matters.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_raw(
            self.height,
            self.width,
            self.channels,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Sample-wise combination of two compatible images.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Result<Image> {
        self.ensure_compatible(other)?;
        Ok(Image::from_raw(
            self.height,
            self.width,
            self.channels,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Image) -> Result<Image> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Image) -> Result<Image> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, k: f64) -> Image {
        self.map(|v| v * k)
    }

    /// Extracts one channel as a single-channel image.
    pub fn channel(&self, c: usize) -> Image {
        assert!(c < self.channels, "channel {c} out of range");
        let data = self
            .data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect();
        Image::from_raw(self.height, self.width, 1, data)
    }

    /// Reassembles per-channel planes into an interleaved image.
    pub fn from_planes(planes: &[Image]) -> Result<Image> {
        let first = planes
            .first()
            .ok_or_else(|| Error::param("no channel planes"))?;
        let (h, w) = (first.height, first.width);
        for p in planes {
            if p.height != h || p.width != w || p.channels != 1 {
                return Err(Error::dim("channel planes differ in shape"));
            }
        }
        let c = planes.len();
        let mut data = Vec::with_capacity(h * w * c);
        for i in 0..h * w {
            for p in planes {
                data.push(p.data[i]);
            }
        }
        Image::new(h, w, c, data)
    }

    /// Runs `f` on each channel plane independently and reassembles.
    pub fn map_channels(&self, mut f: impl FnMut(&Image) -> Result<Image>) -> Result<Image> {
        if self.channels == 1 {
            return f(self);
        }
        let mut planes = Vec::with_capacity(self.channels);
        for c in 0..self.channels {
            planes.push(f(&self.channel(c))?);
        }
        Image::from_planes(&planes)
    }

    /// Vectorizes one channel in column-major order (`x * H + y`), the order
    /// used by the dense operator routines in `spectral`.
    pub fn to_column_major(&self, c: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.pixels());
        for x in 0..self.width {
            for y in 0..self.height {
                v.push(self.get(y, x, c));
            }
        }
        v
    }

    pub fn from_column_major(height: usize, width: usize, v: &[f64]) -> Result<Image> {
        if v.len() != height * width {
            return Err(Error::dim(format!(
                "vector of length {} does not fill {height}x{width}",
                v.len()
            )));
        }
        Image::from_fn(height, width, 1, |y, x, _| v[x * height + y])
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

fn check_shape(height: usize, width: usize, channels: usize) -> Result<()> {
    if height == 0 || width == 0 {
        return Err(Error::dim(format!("empty image {height}x{width}")));
    }
    if channels != 1 && channels != 3 {
        return Err(Error::param(format!(
            "{channels} channels; only 1 or 3 are supported"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(matches!(
            Image::new(2, 2, 1, vec![0.0; 3]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            Image::new(1, 2, 1, vec![0.0, f64::NAN]),
            Err(Error::Param(_))
        ));
        assert!(matches!(Image::filled(2, 2, 2, 0.0), Err(Error::Param(_))));
        assert!(Image::filled(0, 2, 1, 0.0).is_err());
    }

    #[test]
    fn channel_planes_round_trip() {
        let img = Image::from_fn(3, 4, 3, |y, x, c| (y * 100 + x * 10 + c) as f64).unwrap();
        let back = img.map_channels(|p| Ok(p.clone())).unwrap();
        assert_eq!(img, back);
        assert_eq!(img.channel(2).get(1, 3, 0), 132.0);
    }

    #[test]
    fn column_major_layout() {
        let img = Image::from_fn(2, 3, 1, |y, x, _| (y * 3 + x) as f64).unwrap();
        assert_eq!(img.to_column_major(0), vec![0.0, 3.0, 1.0, 4.0, 2.0, 5.0]);
        let back = Image::from_column_major(2, 3, &img.to_column_major(0)).unwrap();
        assert_eq!(img, back);
    }
}
