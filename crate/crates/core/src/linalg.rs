//! Dense linear algebra helpers over LAPACK.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{JobSvd, SVDDC};

use crate::error::{CrError, Result};

pub struct Svd {
    pub u: Array2<f64>,
    pub s: Array1<f64>,
    pub vt: Array2<f64>,
}

/// Full SVD: `u` is m×m, `vt` is n×n, singular values descending.
pub fn svd_full(a: &Array2<f64>) -> Result<Svd> {
    let (u, s, vt) = a
        .svddc(JobSvd::All)
        .map_err(|e| CrError::Linalg(e.to_string()))?;
    Ok(Svd {
        u: u.ok_or_else(|| CrError::Linalg("missing U".into()))?,
        s,
        vt: vt.ok_or_else(|| CrError::Linalg("missing Vt".into()))?,
    })
}

pub fn singular_values(a: &Array2<f64>) -> Result<Array1<f64>> {
    let (_, s, _) = a
        .svddc(JobSvd::None)
        .map_err(|e| CrError::Linalg(e.to_string()))?;
    Ok(s)
}

/// Orthonormal basis of the column span (thin, via SVD), dropping directions below `rtol`.
pub fn orth(a: &Array2<f64>, rtol: f64) -> Result<Array2<f64>> {
    if a.ncols() == 0 {
        return Ok(Array2::zeros((a.nrows(), 0)));
    }
    let (u, s, _) = a
        .svddc(JobSvd::Some)
        .map_err(|e| CrError::Linalg(e.to_string()))?;
    let u = u.ok_or_else(|| CrError::Linalg("missing U".into()))?;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let r = s.iter().filter(|&&v| v > rtol * smax).count();
    Ok(u.slice(s![.., ..r]).to_owned())
}

/// Columns as an owned matrix.
pub fn columns_to_matrix(cols: &[Vec<f64>]) -> Array2<f64> {
    let m = cols.first().map_or(0, |c| c.len());
    let mut a = Array2::zeros((m, cols.len()));
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            a[[i, j]] = *v;
        }
    }
    a
}

pub fn matrix_to_columns(a: &ArrayView2<f64>) -> Vec<Vec<f64>> {
    a.axis_iter(Axis(1)).map(|c| c.to_vec()).collect()
}

/// Sine of the largest principal angle between span(a) and span(b), where
/// dim span(a) ≤ dim span(b). Both inputs are arbitrary column sets.
pub fn subspace_angle(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    let qa = orth(a, 1e-12)?;
    let qb = orth(b, 1e-12)?;
    if qa.ncols() > qb.ncols() {
        return Ok(1.0);
    }
    let proj = qb.dot(&qb.t().dot(&qa));
    let r = &qa - &proj;
    if r.ncols() == 0 {
        return Ok(0.0);
    }
    let s = singular_values(&r)?;
    Ok(s.iter().cloned().fold(0.0, f64::max).min(1.0))
}

/// Smallest principal angle (radians) between two subspaces.
pub fn min_principal_angle(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    let qa = orth(a, 1e-12)?;
    let qb = orth(b, 1e-12)?;
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let c = qa.t().dot(&qb);
    let s = singular_values(&c)?;
    let cmax = s.iter().cloned().fold(0.0, f64::max).min(1.0);
    Ok(cmax.acos())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn matvec(a: &Array2<f64>, x: &[f64]) -> Vec<f64> {
    a.dot(&Array1::from(x.to_vec())).to_vec()
}

pub fn spectral_norm(a: &Array2<f64>) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(singular_values(a)?.iter().cloned().fold(0.0, f64::max))
}
