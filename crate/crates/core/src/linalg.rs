//! Dense complex linear-algebra helpers shared by the other modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative singular-value floor below which a square matrix is treated as
/// singular by [`checked_inverse`].
pub const SINGULAR_RCOND: f64 = 1e-13;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus. All residual norms in this crate are entrywise.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel_tol * sigma_max * max(rows, cols)`.
pub fn rank_with_tol(m: &CMatrix, rel_tol: f64) -> Result<usize> {
    if !is_finite(m) {
        return Err(Error::arg("rank of a matrix with non-finite entries"));
    }
    let sv = singular_values(m);
    let Some(&smax) = sv.first() else {
        return Ok(0);
    };
    if smax == 0.0 {
        return Ok(0);
    }
    let thresh = rel_tol * smax * m.nrows().max(m.ncols()) as f64;
    Ok(sv.iter().filter(|&&s| s > thresh).count())
}

/// Reciprocal 2-norm condition number `sigma_min / sigma_max` of a square matrix.
pub fn rcond(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

/// Inverse of a square matrix, or a numerical-domain error naming `what`
/// when the matrix is singular to working precision.
pub fn checked_inverse(m: &CMatrix, what: &str) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::arg(format!("{what}: {}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    if m.nrows() == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    if !is_finite(m) || rcond(m) < SINGULAR_RCOND {
        return Err(Error::domain(format!("{what} is singular")));
    }
    m.clone().try_inverse().ok_or_else(|| Error::domain(format!("{what} is singular")))
}

pub fn determinant(m: &CMatrix) -> C64 {
    if m.nrows() == 0 {
        return C64::new(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn min_norm_solve(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = smax * 1e-14 * a.nrows().max(a.ncols()) as f64;
    svd.solve(b, eps).map_err(|e| Error::failure(format!("least-squares solve: {e}")))
}

/// Eigenpairs of a square complex matrix via the complex Schur form.
///
/// Ordered by descending eigenvalue magnitude; equal magnitudes (to 1e-12
/// relative) are ordered by ascending argument. Eigenvectors have unit norm.
pub fn eigenpairs(m: &CMatrix) -> Result<Vec<(C64, CVector)>> {
    if !m.is_square() {
        return Err(Error::arg("eigen-decomposition of a non-square matrix"));
    }
    if !is_finite(m) {
        return Err(Error::domain("eigen-decomposition of a non-finite matrix"));
    }
    let n = m.nrows();
    let (q, t) = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::failure("Schur iteration did not converge"))?
        .unpack();
    let scale = max_abs(&t).max(f64::MIN_POSITIVE);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = CVector::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * y[j];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < f64::EPSILON * scale {
                denom = C64::new(f64::EPSILON * scale, 0.0);
            }
            y[i] = -acc / denom;
        }
        let x = &q * y;
        let nrm = x.norm();
        pairs.push((lambda, x / C64::new(nrm, 0.0)));
    }
    pairs.sort_by(|a, b| {
        let (ma, mb) = (a.0.norm(), b.0.norm());
        if (ma - mb).abs() <= 1e-12 * ma.max(mb) {
            a.0.arg().total_cmp(&b.0.arg())
        } else {
            mb.total_cmp(&ma)
        }
    });
    Ok(pairs)
}

/// Scales every nonzero column to unit Euclidean norm. Rank-preserving.
pub fn normalize_columns(m: &mut CMatrix) {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= C64::new(n, 0.0);
        }
    }
}

/// Scales every nonzero row to unit Euclidean norm in place.
pub fn normalize_rows(m: &mut CMatrix) {
    for mut row in m.row_iter_mut() {
        let n = row.norm();
        if n > 0.0 {
            row /= C64::new(n, 0.0);
        }
    }
}
