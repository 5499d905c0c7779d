//! Dense eigendecompositions on top of LAPACK (zgeev / zheev).
//!
//! Left eigenvectors are obtained as the inverse of the right eigenvector
//! matrix, so the returned pair is biorthonormal by construction (rows of
//! `left_vectors` against columns of `right_vectors`), including inside
//! degenerate eigenvalue clusters. The price is that near-defective inputs
//! show up as an ill-conditioned eigenvector matrix; `condition_estimate`
//! carries that diagnosis instead of a silent loss of accuracy.

use ndarray::prelude::*;
use ndarray_linalg::{Eig, EigVals, Eigh, Inverse, UPLO};

use crate::numerics::DEFECTIVE_CONDITION_LIMIT;
use crate::{C64, Error, Result};

/// Full non-Hermitian eigensystem with biorthonormal left/right vectors.
///
/// Eigenvalues are sorted by descending real part, ties broken by descending
/// imaginary part; vector storage follows the same order.
#[derive(Debug, Clone)]
pub struct GeneralEigenSystem {
    pub eigenvalues: Array1<C64>,
    /// Right eigenvectors as columns: M v_i = lambda_i v_i.
    pub right_vectors: Array2<C64>,
    /// Left eigenvectors as rows: w_i M = lambda_i w_i, with w_i . v_j = delta_ij.
    pub left_vectors: Array2<C64>,
    /// ||V||_1 ||V^-1||_1 of the right eigenvector matrix.
    pub condition_estimate: f64,
}

impl GeneralEigenSystem {
    /// True when the eigenvector basis is too ill-conditioned to trust
    /// spectral weights (near-defective point).
    pub fn defective_flag(&self) -> bool {
        !self.condition_estimate.is_finite()
            || self.condition_estimate > DEFECTIVE_CONDITION_LIMIT
    }
}

fn one_norm(m: &Array2<C64>) -> f64 {
    let mut best = 0.0f64;
    for col in m.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Sort order shared by every spectrum in the library.
pub fn spectral_order(vals: &Array1<C64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (vals[a], vals[b]);
        y.re.partial_cmp(&x.re)
            .unwrap()
            .then(y.im.partial_cmp(&x.im).unwrap())
    });
    idx
}

/// Eigendecomposition of a general complex square matrix.
pub fn eig_general(m: &Array2<C64>) -> Result<GeneralEigenSystem> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::ShapeMismatch(format!("eig_general on {}x{}", n, m.ncols())));
    }
    let (vals, vecs) = m.eig().map_err(|e| Error::Backend(format!("zgeev: {e}")))?;
    if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Backend("zgeev returned non-finite eigenvalues".into()));
    }
    let order = spectral_order(&vals);
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| vals[i]));
    let mut right = Array2::<C64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        right.column_mut(dst).assign(&vecs.column(src));
    }
    let left = right
        .inv()
        .map_err(|e| Error::Backend(format!("eigenvector inversion: {e}")))?;
    let condition_estimate = one_norm(&right) * one_norm(&left);
    Ok(GeneralEigenSystem { eigenvalues, right_vectors: right, left_vectors: left, condition_estimate })
}

/// Eigenvalues only (no vectors), in the shared spectral order.
pub fn eigvals_general(m: &Array2<C64>) -> Result<Array1<C64>> {
    let vals = m.eigvals().map_err(|e| Error::Backend(format!("zgeev: {e}")))?;
    let order = spectral_order(&vals);
    Ok(Array1::from_iter(order.iter().map(|&i| vals[i])))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending,
/// orthonormal eigenvector columns. Rejects visibly non-Hermitian input.
pub fn hermitian_eig(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::ShapeMismatch(format!("hermitian_eig on {}x{}", n, m.ncols())));
    }
    let mut dev = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
            scale = scale.max(m[[i, j]].norm());
        }
    }
    if dev > 1e-10 * scale.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "matrix not Hermitian: max |A - A'| element {dev:.3e} vs scale {scale:.3e}"
        )));
    }
    let (w, v) = m
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Backend(format!("zheev: {e}")))?;
    Ok((w, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn known_two_by_two() {
        // [[1, 1], [0, 2]]: eigenvalues 2 and 1 in descending order
        let m = array![[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(2.0, 0.0)]];
        let sys = eig_general(&m).unwrap();
        assert!((sys.eigenvalues[0] - c(2.0, 0.0)).norm() < 1e-12);
        assert!((sys.eigenvalues[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(!sys.defective_flag());
    }

    #[test]
    fn reconstruction_and_biorthonormality() {
        // pseudo-random fixed matrix; check M = sum_i lambda_i v_i w_i
        let n = 24;
        let mut s: u64 = 0x9e3779b97f4a7c15;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = Array2::from_shape_fn((n, n), |_| c(next(), next()));
        let sys = eig_general(&m).unwrap();
        // W V = I
        let wv = sys.left_vectors.dot(&sys.right_vectors);
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
                assert!((wv[[i, j]] - want).norm() < 1e-10);
            }
        }
        // M v_i = lambda_i v_i
        for i in 0..n {
            let v = sys.right_vectors.column(i).to_owned();
            let mv = m.dot(&v);
            let res: f64 = (&mv - &v.mapv(|x| x * sys.eigenvalues[i]))
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-10, "residual {res} at {i}");
        }
        // w_i M = lambda_i w_i
        for i in 0..n {
            let w = sys.left_vectors.row(i).to_owned();
            let wm = w.dot(&m);
            let res: f64 = (&wm - &w.mapv(|x| x * sys.eigenvalues[i]))
                .iter()
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-9, "left residual {res} at {i}");
        }
    }

    #[test]
    fn sort_order_descending_re_then_im() {
        let m = Array2::from_diag(&array![c(0.0, -1.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.5, 0.0)]);
        let vals = eigvals_general(&m).unwrap();
        assert!((vals[0] - c(0.5, 0.0)).norm() < 1e-14);
        assert!((vals[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!((vals[2] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((vals[3] - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn near_defective_raises_condition_estimate() {
        // [[0,1],[eps,0]] has eigenvectors (1, +-sqrt(eps)): nearly parallel,
        // so the eigenvector condition grows like 1/sqrt(eps). Assert strong
        // growth, and that the flag itself trips once the estimate crosses
        // the advertised limit.
        let eps = 1e-14;
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(eps, 0.0), c(0.0, 0.0)]];
        let sys = eig_general(&m).unwrap();
        assert!(sys.condition_estimate > 1e5, "cond {}", sys.condition_estimate);
        let mut doctored = sys;
        doctored.condition_estimate = 10.0 * super::DEFECTIVE_CONDITION_LIMIT;
        assert!(doctored.defective_flag());
    }

    #[test]
    fn hermitian_rejects_non_hermitian() {
        let m = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        assert!(hermitian_eig(&m).is_err());
    }

    #[test]
    fn hermitian_ascending_orthonormal() {
        let m = array![
            [c(2.0, 0.0), c(0.0, 1.0)],
            [c(0.0, -1.0), c(3.0, 0.0)]
        ];
        let (w, v) = hermitian_eig(&m).unwrap();
        // analytic: 5/2 -+ sqrt(5)/2
        let lo = 2.5 - 0.5 * 5f64.sqrt();
        let hi = 2.5 + 0.5 * 5f64.sqrt();
        assert!((w[0] - lo).abs() < 1e-12);
        assert!((w[1] - hi).abs() < 1e-12);
        let g = v.t().mapv(|z| z.conj()).dot(&v);
        assert!((g[[0, 0]].re - 1.0).abs() < 1e-12 && g[[0, 1]].norm() < 1e-12);
    }
}
