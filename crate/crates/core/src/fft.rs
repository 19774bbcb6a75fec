//! Discrete Fourier transforms of arbitrary length.
//!
//! Power-of-two sizes use an iterative radix-2 transform; other sizes go
//! through Bluestein's chirp-z reduction onto a power-of-two transform.
//! Convention: unnormalized forward transform with `exp(-2 pi i k n / N)`,
//! inverse scaled by `1 / N` (or `1 / (H W)` in two dimensions).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

pub use num_complex::Complex64;

#[derive(Debug, Clone)]
enum Plan {
    Radix2 {
        twiddles: Vec<Complex64>,
    },
    Bluestein {
        chirp: Vec<Complex64>,
        filter_spectrum: Vec<Complex64>,
        inner: Vec<Complex64>,
    },
}

/// A reusable 1-D transform of fixed length.
#[derive(Debug, Clone)]
pub struct Fft {
    len: usize,
    plan: Plan,
}

fn radix2_twiddles(n: usize) -> Vec<Complex64> {
    (0..n / 2)
        .map(|k| {
            let a = -2.0 * PI * k as f64 / n as f64;
            Complex64::new(libm::cos(a), libm::sin(a))
        })
        .collect()
}

fn radix2_in_place(buf: &mut [Complex64], twiddles: &[Complex64]) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
    let mut size = 2;
    while size <= n {
        let half = size / 2;
        let stride = n / size;
        for start in (0..n).step_by(size) {
            for k in 0..half {
                let w = twiddles[k * stride];
                let a = buf[start + k];
                let b = buf[start + k + half] * w;
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        size *= 2;
    }
}

impl Fft {
    pub fn new(len: usize) -> Self {
        assert!(len > 0, "transform length must be positive");
        if len.is_power_of_two() {
            return Fft {
                len,
                plan: Plan::Radix2 {
                    twiddles: radix2_twiddles(len),
                },
            };
        }
        let m = (2 * len - 1).next_power_of_two();
        let inner = radix2_twiddles(m);
        // k^2 reduced mod 2N keeps the chirp angle accurate for large k.
        let chirp: Vec<Complex64> = (0..len)
            .map(|k| {
                let r = ((k as u128 * k as u128) % (2 * len as u128)) as f64;
                let a = -PI * r / len as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        let mut filter = vec![Complex64::new(0.0, 0.0); m];
        filter[0] = chirp[0].conj();
        for k in 1..len {
            filter[k] = chirp[k].conj();
            filter[m - k] = chirp[k].conj();
        }
        radix2_in_place(&mut filter, &inner);
        Fft {
            len,
            plan: Plan::Bluestein {
                chirp,
                filter_spectrum: filter,
                inner,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len);
        match &self.plan {
            Plan::Radix2 { twiddles } => radix2_in_place(buf, twiddles),
            Plan::Bluestein {
                chirp,
                filter_spectrum,
                inner,
            } => {
                let m = filter_spectrum.len();
                let mut work = vec![Complex64::new(0.0, 0.0); m];
                for k in 0..self.len {
                    work[k] = buf[k] * chirp[k];
                }
                radix2_in_place(&mut work, inner);
                for (w, f) in work.iter_mut().zip(filter_spectrum) {
                    *w = (*w * f).conj();
                }
                // inverse via conjugation: ifft(z) = conj(fft(conj(z))) / m
                radix2_in_place(&mut work, inner);
                let scale = 1.0 / m as f64;
                for k in 0..self.len {
                    buf[k] = work[k].conj() * scale * chirp[k];
                }
            }
        }
    }

    /// In-place inverse transform, scaled by `1 / len`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for v in buf.iter_mut() {
            *v = v.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v = v.conj() * scale;
        }
    }
}

/// Separable 2-D transform over a row-major `height x width` grid.
#[derive(Debug, Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    rows: Fft,
    cols: Fft,
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        Fft2 {
            height,
            width,
            rows: Fft::new(width),
            cols: Fft::new(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.height * self.width);
        for row in buf.chunks_exact_mut(self.width) {
            if inverse {
                self.rows.inverse(row);
            } else {
                self.rows.forward(row);
            }
        }
        let mut col = vec![Complex64::new(0.0, 0.0); self.height];
        for x in 0..self.width {
            for y in 0..self.height {
                col[y] = buf[y * self.width + x];
            }
            if inverse {
                self.cols.inverse(&mut col);
            } else {
                self.cols.forward(&mut col);
            }
            for y in 0..self.height {
                buf[y * self.width + x] = col[y];
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, false);
    }

    /// Inverse transform scaled by `1 / (H W)`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, true);
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut spectrum);
        spectrum.into_iter().map(|c| c.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .fold(Complex64::new(0.0, 0.0), |acc, (j, &v)| {
                        let a = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
                        acc + v * Complex64::new(a.cos(), a.sin())
                    })
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_for_many_lengths() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for n in [1usize, 2, 3, 5, 7, 8, 12, 16, 21, 31, 64, 100] {
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let expect = naive_dft(&x);
            let mut got = x.clone();
            let plan = Fft::new(n);
            plan.forward(&mut got);
            for (a, b) in got.iter().zip(&expect) {
                assert!((a - b).norm() < 1e-10 * n as f64, "n={n}");
            }
            plan.inverse(&mut got);
            for (a, b) in got.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12 * n as f64, "n={n}");
            }
        }
    }

    #[test]
    fn two_dimensional_round_trip() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let (h, w) = (6, 10);
        let data: Vec<f64> = (0..h * w).map(|_| rng.random()).collect();
        let plan = Fft2::new(h, w);
        let spec = plan.forward_real(&data);
        let dc: f64 = data.iter().sum();
        assert!((spec[0].re - dc).abs() < 1e-12);
        let back = plan.inverse_real(spec);
        for (a, b) in back.iter().zip(&data) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
