use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use nalgebra::DMatrix;

use super::jacobi;
use super::spectrum::{ContractionClass, OmegaSide, OMEGA_BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::filters::{Boundary, Filter};
use crate::image::Image;
use crate::kernel::Kernel;

/// Largest operator dimension (`H * W`) accepted by the dense routines. The
/// SVD is cubic in it: about 7 s at 1024 in an optimized build.
pub const MAX_OPERATOR_DIM: usize = 4096;

/// SVD-based contraction analysis of a general linear filter `f(x) = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperatorReport {
    pub dimension: usize,
    /// Singular values of `Id - A`, descending.
    pub singular_values: Vec<f64>,
    /// `s_p^2 < 1` for each singular value, in the same order.
    pub omega: Vec<bool>,
    /// `max_{p in Omega} s_p^2` (squared scale).
    pub contraction_constant: Option<f64>,
    /// `max_{p in Omega} s_p` (modulus scale, comparable with
    /// [`super::SpectralReport::contraction_constant`]).
    pub contraction_modulus: Option<f64>,
    pub class: ContractionClass,
    /// Right singular vectors as columns, matching `singular_values`. The
    /// Omega projector is `V D V^T` with `D` the 0/1 diagonal of `omega`.
    pub right_vectors: DMatrix<f64>,
}

impl LinearOperatorReport {
    pub fn omega_count(&self) -> usize {
        self.omega.iter().filter(|&&m| m).count()
    }

    /// Orthogonal projection of a vector onto the Omega (or complementary)
    /// right-singular subspace.
    pub fn project(&self, x: &[f64], side: OmegaSide) -> Result<Vec<f64>> {
        if x.len() != self.dimension {
            return Err(Error::dim(format!(
                "vector of length {} vs operator dimension {}",
                x.len(),
                self.dimension
            )));
        }
        let v = &self.right_vectors;
        let mut out = vec![0.0; self.dimension];
        for (p, &in_omega) in self.omega.iter().enumerate() {
            let keep = match side {
                OmegaSide::Omega => in_omega,
                OmegaSide::OmegaComplement => !in_omega,
            };
            if !keep {
                continue;
            }
            let col = v.column(p);
            let coef: f64 = col.iter().zip(x).map(|(a, b)| a * b).sum();
            for (o, a) in out.iter_mut().zip(col.iter()) {
                *o += coef * a;
            }
        }
        Ok(out)
    }
}

/// Explicit matrix of `convolve(., kernel, boundary)` on `H x W` single-channel
/// images, using column-major vectorization (`index = x * H + y`).
pub fn matrix_from_conv(
    kernel: &Kernel,
    grid: (usize, usize),
    boundary: Boundary,
) -> Result<DMatrix<f64>> {
    let (h, w) = grid;
    let n = h * w;
    if n == 0 || n > MAX_OPERATOR_DIM {
        return Err(Error::param(format!(
            "{h}x{w} grid gives operator dimension {n}, limit is {MAX_OPERATOR_DIM}"
        )));
    }
    if kernel.height() > h || kernel.width() > w {
        return Err(Error::param(format!(
            "{}x{} kernel does not fit a {h}x{w} grid",
            kernel.height(),
            kernel.width()
        )));
    }
    let mut a = DMatrix::zeros(n, n);
    for x in 0..w {
        for y in 0..h {
            let row = x * h + y;
            for (dy, dx, wt) in kernel.taps() {
                let sy = boundary.index(y as isize - dy, h);
                let sx = boundary.index(x as isize - dx, w);
                a[(row, sx * h + sy)] += wt;
            }
        }
    }
    Ok(a)
}

/// SVD of `Id - A`, Omega as the singular directions with `s^2 < 1`.
pub fn analyze_linear_operator(matrix: &DMatrix<f64>) -> Result<LinearOperatorReport> {
    let (rows, cols) = matrix.shape();
    if rows != cols {
        return Err(Error::param(format!(
            "operator must be square, got {rows}x{cols}"
        )));
    }
    if rows == 0 || rows > MAX_OPERATOR_DIM {
        return Err(Error::param(format!(
            "operator dimension {rows} outside 1..={MAX_OPERATOR_DIM}"
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("operator has non-finite entries"));
    }
    let n = rows;
    let residual_op = DMatrix::<f64>::identity(n, n) - matrix;
    let svd = jacobi::svd(residual_op)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.values[j].total_cmp(&svd.values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.values[i]).collect();
    let mut right_vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        right_vectors.set_column(dst, &svd.v.column(src));
    }

    let omega: Vec<bool> = singular_values
        .iter()
        .map(|&s| s < 1.0 - OMEGA_BOUNDARY_TOL)
        .collect();
    let contraction_modulus = singular_values
        .iter()
        .zip(&omega)
        .filter(|(_, &m)| m)
        .map(|(&s, _)| s)
        .fold(None, |acc: Option<f64>, s| {
            Some(acc.map_or(s, |a| a.max(s)))
        });
    let count = omega.iter().filter(|&&m| m).count();
    Ok(LinearOperatorReport {
        dimension: n,
        singular_values,
        contraction_constant: contraction_modulus.map(|s| s * s),
        contraction_modulus,
        class: ContractionClass::from_counts(count, n),
        omega,
        right_vectors,
    })
}

/// A dense linear filter acting on each channel of `H x W` images through
/// column-major vectorization.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFilter {
    height: usize,
    width: usize,
    matrix: DMatrix<f64>,
}

impl LinearFilter {
    pub fn new(height: usize, width: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let n = height * width;
        if matrix.shape() != (n, n) {
            return Err(Error::dim(format!(
                "{:?} matrix for a {height}x{width} grid",
                matrix.shape()
            )));
        }
        Ok(LinearFilter {
            height,
            width,
            matrix,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl Filter for LinearFilter {
    fn apply(&self, input: &Image) -> Result<Image> {
        if input.height() != self.height || input.width() != self.width {
            return Err(Error::dim(format!(
                "linear filter expects {}x{}, got {}x{}",
                self.height,
                self.width,
                input.height(),
                input.width()
            )));
        }
        let n = self.height * self.width;
        input.map_channels(|plane| {
            let v = plane.to_column_major(0);
            let mut out = vec![0.0; n];
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, x) in v.iter().enumerate() {
                    acc += self.matrix[(i, j)] * x;
                }
                *o = acc;
            }
            Image::from_column_major(self.height, self.width, &out)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::{Complex64, Fft};
    use crate::filters::convolve;
    use rand::{Rng, SeedableRng};

    #[test]
    fn diagonal_cases() {
        let half = DMatrix::<f64>::identity(16, 16) * 0.5;
        let r = analyze_linear_operator(&half).unwrap();
        assert!(r.singular_values.iter().all(|s| (s - 0.5).abs() < 1e-14));
        assert!((r.contraction_constant.unwrap() - 0.25).abs() < 1e-14);
        assert_eq!(r.omega_count(), 16);
        assert_eq!(r.class, ContractionClass::StrictContraction);

        let id = DMatrix::<f64>::identity(9, 9);
        let r = analyze_linear_operator(&id).unwrap();
        assert!(r.singular_values.iter().all(|&s| s == 0.0));
        assert_eq!(r.contraction_constant, Some(0.0));
        assert_eq!(r.class, ContractionClass::StrictContraction);
    }

    #[test]
    fn ring_box_blur_matches_dft() {
        let k = Kernel::new(1, 3, vec![1.0 / 3.0; 3]).unwrap();
        let a = matrix_from_conv(&k, (1, 8), Boundary::Periodic).unwrap();
        let r = analyze_linear_operator(&a).unwrap();
        // 8-point DFT of the circular 3-tap average, independently
        let mut taps = vec![Complex64::new(0.0, 0.0); 8];
        taps[0] = Complex64::new(1.0 / 3.0, 0.0);
        taps[1] = Complex64::new(1.0 / 3.0, 0.0);
        taps[7] = Complex64::new(1.0 / 3.0, 0.0);
        Fft::new(8).forward(&mut taps);
        let mut expect: Vec<f64> = taps
            .iter()
            .map(|k| (Complex64::new(1.0, 0.0) - k).norm())
            .collect();
        expect.sort_by(|a, b| b.total_cmp(a));
        for (s, e) in r.singular_values.iter().zip(&expect) {
            assert!((s - e).abs() < 1e-10);
        }
    }

    #[test]
    fn conv_matrix_structure() {
        let id = matrix_from_conv(&Kernel::delta(), (4, 5), Boundary::Periodic).unwrap();
        assert_eq!(id, DMatrix::identity(20, 20));

        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let k = Kernel::new(3, 3, (0..9).map(|_| rng.random::<f64>()).collect()).unwrap();
        let a = matrix_from_conv(&k, (6, 6), Boundary::Periodic).unwrap();
        for i in 0..36 {
            assert!((a.row(i).sum() - k.sum()).abs() < 1e-12);
        }
        // block-circulant: shifting the output pixel shifts the row
        assert_eq!(a[(0, 0)], a[(7, 7)]);
    }

    #[test]
    fn conv_matrix_acts_like_convolve() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(6);
        let k = Kernel::new(3, 3, (0..9).map(|_| rng.random::<f64>() - 0.3).collect()).unwrap();
        let img = Image::from_fn(8, 8, 1, |_, _, _| rng.random::<f64>()).unwrap();
        for b in [Boundary::Periodic, Boundary::Symmetric] {
            let a = matrix_from_conv(&k, (8, 8), b).unwrap();
            let via = LinearFilter::new(8, 8, a).unwrap().apply(&img).unwrap();
            let direct = convolve(&img, &k, b).unwrap();
            for (p, q) in via.data().iter().zip(direct.data()) {
                assert!((p - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn guards() {
        assert!(matches!(
            analyze_linear_operator(&DMatrix::zeros(3, 4)),
            Err(Error::Param(_))
        ));
        assert!(matches!(
            matrix_from_conv(&Kernel::delta(), (65, 64), Boundary::Periodic),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn projector_partitions() {
        let k = Kernel::new(1, 3, vec![0.1, 0.3, 0.6]).unwrap();
        let a = matrix_from_conv(&k, (1, 8), Boundary::Periodic).unwrap();
        let r = analyze_linear_operator(&a).unwrap();
        let x: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let p = r.project(&x, OmegaSide::Omega).unwrap();
        let q = r.project(&x, OmegaSide::OmegaComplement).unwrap();
        for i in 0..8 {
            assert!((p[i] + q[i] - x[i]).abs() < 1e-12);
        }
        let dot: f64 = p.iter().zip(&q).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
    }
}
