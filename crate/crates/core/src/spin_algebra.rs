//! Collective spin operators on the symmetric (maximal-J) multiplet, spin
//! coherent states, and the Husimi distribution on the Bloch sphere.
//!
//! Basis convention everywhere: the S_z eigenbasis in ascending order, index
//! i <-> m = i - J with J = N/2, so index 0 is the fully inverted-down state
//! |m = -J>.

use ndarray::prelude::*;

use crate::numerics::hermitian_eig;
use crate::{C64, Error, ModelParams, Operator, Result};

/// The collective operators for N spins on the J = N/2 multiplet.
pub struct SpinOperatorSet {
    pub sp: Operator,
    pub sm: Operator,
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub dim: usize,
}

/// Build S_+/-, S_x, S_y, S_z for `n_spins` two-level emitters.
pub fn build_spin_operators(n_spins: usize) -> SpinOperatorSet {
    let j = n_spins as f64 / 2.0;
    let dim = n_spins + 1;
    let mut sp = Operator::zeros((dim, dim));
    for i in 0..dim - 1 {
        let m = i as f64 - j;
        sp[[i + 1, i]] = C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let sm = sp.t().mapv(|z| z.conj());
    let sx = (&sp + &sm).mapv(|z| 0.5 * z);
    let sy = (&sp - &sm).mapv(|z| z * C64::new(0.0, -0.5));
    let sz = Operator::from_diag(&Array1::from_shape_fn(dim, |i| C64::new(i as f64 - j, 0.0)));
    SpinOperatorSet { sp, sm, sx, sy, sz, dim }
}

/// The collective jump operator cos(theta) S_- + sin(theta) S_+.
pub fn jump_operator(params: &ModelParams) -> Operator {
    let ops = build_spin_operators(params.n_spins);
    let (c, s) = (params.theta.cos(), params.theta.sin());
    ops.sm.mapv(|z| z * c) + ops.sp.mapv(|z| z * s)
}

/// Row `n` of Pascal's triangle as f64 (fine through n = 400, where the
/// central coefficient is ~2.3e119).
pub fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    row
}

/// Spin coherent state at polar angle `theta` measured from the -z pole and
/// azimuth `phi`: theta = 0 is the bottom state |m = -J>, theta = pi the top.
/// Phases are such that <S_+> = J sin(theta) e^{i phi} and the Bloch vector is
/// (sin t cos p, sin t sin p, -cos t).
pub fn spin_coherent_state(n_spins: usize, theta: f64, phi: f64) -> Array1<C64> {
    let j = n_spins as f64 / 2.0;
    let dim = n_spins + 1;
    let binom = binomial_row(n_spins);
    let (sh, ch) = ((theta / 2.0).sin(), (theta / 2.0).cos());
    let mut psi = Array1::<C64>::zeros(dim);
    for i in 0..dim {
        let m = i as f64 - j;
        // i = J + m counts the raised spins
        let amp = binom[i].sqrt() * sh.powi(i as i32) * ch.powi((dim - 1 - i) as i32);
        psi[i] = C64::from_polar(amp, -m * phi);
    }
    let nrm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.mapv(|z| z / nrm)
}

/// <psi|O|psi> for a normalized pure state.
pub fn expectation_state(op: &Operator, psi: &Array1<C64>) -> C64 {
    psi.iter().zip(op.dot(psi).iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Tr[O rho].
pub fn expectation_density(op: &Operator, rho: &Operator) -> C64 {
    let prod = op.dot(rho);
    (0..prod.nrows()).map(|i| prod[[i, i]]).sum()
}

/// Trace distance (1/2)||a - b||_1 between two density matrices.
pub fn trace_distance(a: &Operator, b: &Operator) -> Result<f64> {
    let diff = a - b;
    let (vals, _) = hermitian_eig(&diff)?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

/// Eigenbasis of S_x with eigenvalues in ascending order m_x = -J..J.
/// Returns (eigenvalues, unitary whose columns are the eigenvectors). The
/// computed eigenvalues are checked against the exact ladder to 1e-8.
pub fn sx_eigenbasis(n_spins: usize) -> Result<(Array1<f64>, Operator)> {
    let ops = build_spin_operators(n_spins);
    let (vals, vecs) = hermitian_eig(&ops.sx)?;
    let j = n_spins as f64 / 2.0;
    for (i, v) in vals.iter().enumerate() {
        let m = i as f64 - j;
        if (v - m).abs() > 1e-8 {
            return Err(Error::Inconsistency(format!(
                "S_x eigenvalue {v} deviates from ladder value {m}"
            )));
        }
    }
    Ok((vals, vecs))
}

/// Scalar field sampled on a regular (theta, phi) grid over the sphere.
pub struct SphereField {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// values[[i, k]] at (theta[i], phi[k])
    pub values: Array2<f64>,
}

impl SphereField {
    /// Midpoint quadrature of (2J+1)/(4 pi) * integral of the field over the
    /// sphere; equals 1 for a Husimi distribution of a unit-trace state.
    pub fn quadrature(&self, n_spins: usize) -> f64 {
        let (nt, np) = (self.theta.len(), self.phi.len());
        let (dt, dp) = (std::f64::consts::PI / nt as f64, 2.0 * std::f64::consts::PI / np as f64);
        let mut acc = 0.0;
        for i in 0..nt {
            let w = self.theta[i].sin() * dt * dp;
            for k in 0..np {
                acc += self.values[[i, k]] * w;
            }
        }
        acc * (n_spins as f64 + 1.0) / (4.0 * std::f64::consts::PI)
    }

    /// CSV rendering with header `theta,phi,q`, one row per grid point in
    /// row-major (theta outer) order; 12 significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,phi,q\n");
        for (i, &t) in self.theta.iter().enumerate() {
            for (k, &p) in self.phi.iter().enumerate() {
                out.push_str(&format!("{:.11e},{:.11e},{:.11e}\n", t, p, self.values[[i, k]]));
            }
        }
        out
    }
}

/// Husimi distribution Q(theta, phi) = <theta,phi|rho|theta,phi> on a
/// midpoint grid of `nt` polar times `np` azimuthal points.
pub fn husimi_q(rho: &Operator, n_spins: usize, nt: usize, np: usize) -> SphereField {
    let theta: Vec<f64> =
        (0..nt).map(|i| (i as f64 + 0.5) * std::f64::consts::PI / nt as f64).collect();
    let phi: Vec<f64> =
        (0..np).map(|k| k as f64 * 2.0 * std::f64::consts::PI / np as f64).collect();
    let mut values = Array2::<f64>::zeros((nt, np));
    for (i, &t) in theta.iter().enumerate() {
        for (k, &p) in phi.iter().enumerate() {
            let psi = spin_coherent_state(n_spins, t, p);
            let q = psi
                .iter()
                .zip(rho.dot(&psi).iter())
                .map(|(a, b)| a.conj() * b)
                .sum::<C64>()
                .re;
            values[[i, k]] = q;
        }
    }
    SphereField { theta, phi, values }
}
