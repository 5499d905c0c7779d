//! Numerical null spaces via SVD.

use ndarray::prelude::*;
use ndarray_linalg::SVD;

use crate::{C64, Error, Result};

/// Orthonormal basis (columns) of the numerical kernel of `m`: right singular
/// vectors whose singular values satisfy sigma <= tol * sigma_max. Returns an
/// n x 0 array when the matrix is comfortably full-rank.
pub fn kernel_basis(m: &Array2<C64>, tol: f64) -> Result<Array2<C64>> {
    let (_rows, cols) = m.dim();
    let (_u, s, vt) = m
        .svd(false, true)
        .map_err(|e| Error::Backend(format!("zgesvd: {e}")))?;
    let vt = vt.expect("requested V^H");
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    let mut keep: Vec<usize> = Vec::new();
    for (i, &sv) in s.iter().enumerate() {
        if sv <= tol * smax {
            keep.push(i);
        }
    }
    // rows of V^H beyond the singular value list (cols > rows) are exact kernel
    for i in s.len()..vt.nrows() {
        keep.push(i);
    }
    let mut out = Array2::<C64>::zeros((cols, keep.len()));
    for (k, &i) in keep.iter().enumerate() {
        // kernel vector = conjugated row of V^H
        out.column_mut(k).assign(&vt.row(i).mapv(|z| z.conj()));
    }
    Ok(out)
}
