//! One-sided Jacobi SVD.
//!
//! Columns of a working copy are rotated pairwise until mutually orthogonal;
//! the column norms are then the singular values and the accumulated
//! rotations the right singular vectors. Each singular value comes out with
//! an error of a few ulps of the matrix norm, including inside clusters of
//! repeated values.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

pub(crate) struct Svd {
    /// Unsorted, paired with the columns of `v`.
    pub values: Vec<f64>,
    pub v: DMatrix<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub sweeps: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate(data: &mut [f64], n: usize, i: usize, j: usize, c: f64, s: f64) {
    let (lo, hi) = data.split_at_mut(j * n);
    let gi = &mut lo[i * n..(i + 1) * n];
    let gj = &mut hi[..n];
    for (x, y) in gi.iter_mut().zip(gj.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

pub(crate) fn svd(matrix: DMatrix<f64>) -> Result<Svd> {
    let n = matrix.ncols();
    let rows = matrix.nrows();
    // start from the bidiagonal-QR right vectors when available; Jacobi then
    // only has to clean up, typically in a few sweeps
    let mut v = nalgebra::SVD::try_new(matrix.clone(), false, true, f64::EPSILON, 10_000)
        .and_then(|s| s.v_t)
        .map(|vt| vt.transpose())
        .filter(|v| v.shape() == (n, n) && v.iter().all(|x| x.is_finite()))
        .unwrap_or_else(|| DMatrix::identity(n, n));
    let mut g = matrix * &v;
    let tol = f64::EPSILON * rows as f64;

    // squared column norms, updated in closed form after each rotation and
    // recomputed at the start of every sweep
    let mut norms: Vec<f64> = (0..n)
        .map(|k| dot(g.column(k).as_slice(), g.column(k).as_slice()))
        .collect();
    let mut sweeps = None;
    for sweep in 0..MAX_SWEEPS {
        if sweep > 0 {
            for (k, nk) in norms.iter_mut().enumerate() {
                *nk = dot(g.column(k).as_slice(), g.column(k).as_slice());
            }
        }
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (alpha, beta) = (norms[i], norms[j]);
                let gamma = {
                    let d = g.as_slice();
                    dot(&d[i * rows..(i + 1) * rows], &d[j * rows..(j + 1) * rows])
                };
                if gamma == 0.0 || gamma.abs() <= tol * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = libm::copysign(1.0, zeta) / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate(g.as_mut_slice(), rows, i, j, c, s);
                rotate(v.as_mut_slice(), n, i, j, c, s);
                norms[i] = alpha - t * gamma;
                norms[j] = beta + t * gamma;
            }
        }
        if !rotated {
            sweeps = Some(sweep + 1);
            break;
        }
    }
    let sweeps = sweeps.ok_or_else(|| Error::Numerics("Jacobi SVD did not converge".into()))?;

    let values = (0..n)
        .map(|k| libm::sqrt(dot(g.column(k).as_slice(), g.column(k).as_slice())))
        .collect();
    Ok(Svd { values, v, sweeps })
}
