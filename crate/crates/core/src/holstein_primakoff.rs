//! Thermodynamic-limit closed forms from a displaced bosonic expansion of the
//! collective spin around its stationary direction.
//!
//! Valid in the ferromagnetic phase (theta < pi/4 and |Omega| < Omega_c).
//! The displacement beta = -i sqrt(1+M) removes the linear terms; quadratic
//! fluctuations then obey an effective bosonic master equation with loss
//! gamma_-, pump gamma_+ and an anomalous (pair) rate eta, all real. Its
//! slowest relaxation rate reproduces the asymptotic decay rate of the full
//! generator, lambda_1 = (G_- - G_+) M, and its Gaussian steady state fixes
//! the quadratic correlators and hence the transverse spin variance.
//!
//! Two closed forms for the transverse squeezing are in circulation for this
//! model and both are provided. `spin_squeezing_analytic` evaluates
//! (1-M)(1/2 + (G_+ - sqrt(G_- G_+))/(G_- - G_+)), which simplifies to
//! (1-M)(cos t - sin t)/(2(cos t + sin t)). The correlator route
//! xi^2 = k(<b'b> + <bb> + 1/2) simplifies instead to
//! -M (cos t - sin t)/(cos t + sin t). The two agree at Omega = 0 and part
//! ways as the drive grows; only the correlator form vanishes at the critical
//! line for every theta. Finite-size diagonalization is the referee and both
//! carry cross-checks in the test suite.

use std::collections::HashMap;


use crate::mean_field::{critical_omega, magnetization};
use crate::spin_algebra::SpinOperatorSet;
use crate::{C64, Error, ModelParams, Operator, Result};

/// Displacement and effective bosonic rates of the quadratic expansion.
#[derive(Debug, Clone, Copy)]
pub struct HpCoefficients {
    /// Stationary magnetization M (negative in the ferromagnetic phase).
    pub m: f64,
    /// Bosonic displacement beta = -i sqrt(1+M).
    pub beta: C64,
    /// k = 2 - |beta|^2 = 1 - M.
    pub k: f64,
    /// Linear coefficients of the fluctuation operator A b + B b'.
    pub a: f64,
    pub b: f64,
    /// Effective loss, pump and anomalous-pair rates of the bosonic mode.
    pub gamma_minus_eff: f64,
    pub gamma_plus_eff: f64,
    pub eta: f64,
    /// chi = Gamma sin(theta) cos(theta) = sqrt(G_- G_+).
    pub chi: f64,
    /// Expansion parameter 1/sqrt(J).
    pub epsilon: f64,
}

fn ferromagnetic_m(params: &ModelParams) -> Result<f64> {
    if critical_omega(params) <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "theta = {} is at or past the symmetry point; no ferromagnetic expansion",
            params.theta
        )));
    }
    magnetization(params)?.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "drive {} exceeds the critical value {}; outside the ferromagnetic phase",
            params.omega,
            critical_omega(params)
        ))
    })
}

/// Expansion coefficients for parameters inside the ferromagnetic phase.
pub fn hp_coefficients(params: &ModelParams) -> Result<HpCoefficients> {
    let m = ferromagnetic_m(params)?;
    let beta = C64::new(0.0, -(1.0 + m).sqrt());
    let k = 2.0 - beta.norm_sqr();
    let rk = k.sqrt();
    let a = (2.0 * k - beta.norm_sqr()) / (2.0 * rk);
    let b = -(beta * beta).re / (2.0 * rk);
    let (gm, gp, chi) = (params.gamma_minus(), params.gamma_plus(), params.chi());
    let gamma_minus_eff = gm * a * a + gp * b * b + 2.0 * chi * a * b;
    let gamma_plus_eff = gp * a * a + gm * b * b + 2.0 * chi * a * b;
    let eta = a * b * (gm + gp) + chi * (a * a + b * b);
    Ok(HpCoefficients {
        m,
        beta,
        k,
        a,
        b,
        gamma_minus_eff,
        gamma_plus_eff,
        eta,
        chi,
        epsilon: 1.0 / params.j().sqrt(),
    })
}

/// The asymptotic decay rate in the thermodynamic limit: the (negative)
/// slowest eigenvalue lambda_1 = (G_- - G_+) M of the fluctuation dynamics.
pub fn hp_gap(params: &ModelParams) -> Result<f64> {
    let m = ferromagnetic_m(params)?;
    Ok((params.gamma_minus() - params.gamma_plus()) * m)
}

/// All three stationary branches of the displacement give candidate rates
/// [(G_- - G_+) M, -(G_- - G_+) M, (G_- - G_+) Q]; only the first is stable
/// (negative) in the ferromagnetic phase.
pub fn hp_gap_candidates(params: &ModelParams) -> Result<[f64; 3]> {
    let m = ferromagnetic_m(params)?;
    let dg = params.gamma_minus() - params.gamma_plus();
    let r = params.omega / dg;
    let q = (1.0 + r * r).sqrt();
    Ok([dg * m, -dg * m, dg * q])
}

/// Stationary normalized spin (s_x, s_y, s_z) = (0, sqrt(1-M^2), M).
pub fn hp_observables(params: &ModelParams) -> Result<(f64, f64, f64)> {
    let m = ferromagnetic_m(params)?;
    Ok((0.0, (1.0 - m * m).sqrt(), m))
}

/// Steady quadratic correlators of the bosonic mode:
/// (<b'b>, <bb>) = (g_+/(g_- - g_+), eta/(g_+ - g_-)).
pub fn hp_correlators(params: &ModelParams) -> Result<(f64, f64)> {
    let c = hp_coefficients(params)?;
    let gap = c.gamma_minus_eff - c.gamma_plus_eff;
    if gap <= 0.0 {
        return Err(Error::InvalidParameter(
            "effective pump exceeds loss; correlators diverge at the gap closure".into(),
        ));
    }
    Ok((c.gamma_plus_eff / gap, -c.eta / gap))
}

/// Transverse variance per spin, Delta s_x^2 = (k/2J)(<b'b> + <bb> + 1/2).
pub fn hp_delta_sx2(params: &ModelParams) -> Result<f64> {
    let c = hp_coefficients(params)?;
    let (n, b2) = hp_correlators(params)?;
    Ok(c.k / (2.0 * params.j()) * (n + b2 + 0.5))
}

/// Closed-form transverse squeezing
/// xi^2 = (1-M)(1/2 + (G_+ - sqrt(G_- G_+))/(G_- - G_+)).
pub fn spin_squeezing_analytic(params: &ModelParams) -> Result<f64> {
    let m = ferromagnetic_m(params)?;
    let (gm, gp) = (params.gamma_minus(), params.gamma_plus());
    Ok((1.0 - m) * (0.5 + (gp - (gm * gp).sqrt()) / (gm - gp)))
}

/// Steady moments <b'^p b^q> of the effective bosonic mode for p+q <= max_order,
/// by the triangular recursion the quadratic master equation closes into:
///
/// ```text
///   (g_- - g_+)(p+q)/2 <p,q> = g_+ pq <p-1,q-1>
///                              - eta/2 [p(p-1)<p-2,q> + q(q-1)<p,q-2>]
/// ```
///
/// Odd total orders vanish. Serves as an independent route to the correlators
/// and to Gaussianity checks at fourth order.
pub fn hp_steady_moments(
    params: &ModelParams,
    max_order: usize,
) -> Result<HashMap<(usize, usize), f64>> {
    let c = hp_coefficients(params)?;
    let gap = c.gamma_minus_eff - c.gamma_plus_eff;
    if gap <= 0.0 {
        return Err(Error::InvalidParameter("gap closure; moments diverge".into()));
    }
    let mut mom = HashMap::new();
    mom.insert((0usize, 0usize), 1.0f64);
    for order in 1..=max_order {
        for p in 0..=order {
            let q = order - p;
            if order % 2 == 1 {
                mom.insert((p, q), 0.0);
                continue;
            }
            let fetch = |mp: i64, mq: i64| -> f64 {
                if mp < 0 || mq < 0 {
                    0.0
                } else {
                    *mom.get(&(mp as usize, mq as usize)).unwrap()
                }
            };
            let (pf, qf) = (p as f64, q as f64);
            let rhs = c.gamma_plus_eff * pf * qf * fetch(p as i64 - 1, q as i64 - 1)
                - 0.5
                    * c.eta
                    * (pf * (pf - 1.0) * fetch(p as i64 - 2, q as i64)
                        + qf * (qf - 1.0) * fetch(p as i64, q as i64 - 2));
            mom.insert((p, q), rhs / (gap * order as f64 / 2.0));
        }
    }
    Ok(mom)
}

/// Squeezing of a finite-size state: minimal variance over directions
/// perpendicular to the mean spin, as xi^2 = N * min Var / |<S>|^2, plus the
/// optimal angle phi in the transverse plane (phi = 0 along the axis obtained
/// by projecting x out of the mean direction). Scans 721 angles, then
/// golden-section refines around the best sample.
pub fn spin_squeezing_numeric(
    rho: &Operator,
    ops: &SpinOperatorSet,
) -> Result<(f64, f64)> {
    let n_spins = ops.dim - 1;
    let mean = |op: &Operator| -> f64 {
        let prod = op.dot(rho);
        (0..prod.nrows()).map(|i| prod[[i, i]]).sum::<C64>().re
    };
    let v = [mean(&ops.sx), mean(&ops.sy), mean(&ops.sz)];
    let vn = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let j = n_spins as f64 / 2.0;
    if vn < 1e-9 * j.max(1.0) {
        return Err(Error::Inconsistency(
            "mean spin is zero; transverse direction undefined".into(),
        ));
    }
    let vhat = [v[0] / vn, v[1] / vn, v[2] / vn];
    // e1: x projected off the mean direction, falling back to y at the pole
    let mut e1 = [1.0 - vhat[0] * vhat[0], -vhat[0] * vhat[1], -vhat[0] * vhat[2]];
    let mut n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    if n1 < 1e-8 {
        e1 = [-vhat[1] * vhat[0], 1.0 - vhat[1] * vhat[1], -vhat[1] * vhat[2]];
        n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    }
    for x in &mut e1 {
        *x /= n1;
    }
    let e2 = [
        vhat[1] * e1[2] - vhat[2] * e1[1],
        vhat[2] * e1[0] - vhat[0] * e1[2],
        vhat[0] * e1[1] - vhat[1] * e1[0],
    ];
    let dir_op = |e: &[f64; 3]| -> Operator {
        let mut o = ops.sx.mapv(|z| z * e[0]);
        o.zip_mut_with(&ops.sy, |t, &s| *t += s * e[1]);
        o.zip_mut_with(&ops.sz, |t, &s| *t += s * e[2]);
        o
    };
    let (o1, o2) = (dir_op(&e1), dir_op(&e2));
    let (m1, m2) = (mean(&o1), mean(&o2));
    let c11 = mean(&o1.dot(&o1)) - m1 * m1;
    let c22 = mean(&o2.dot(&o2)) - m2 * m2;
    let sym = {
        let mut s = o1.dot(&o2);
        s += &o2.dot(&o1);
        s.mapv_inplace(|z| 0.5 * z);
        mean(&s) - m1 * m2
    };
    let var = |phi: f64| -> f64 {
        let (s, c) = phi.sin_cos();
        c * c * c11 + s * s * c22 + 2.0 * s * c * sym
    };
    // variance is pi-periodic in phi; sample the centered period
    let n_grid = 721usize;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..n_grid {
        let phi = -std::f64::consts::FRAC_PI_2
            + i as f64 * std::f64::consts::PI / n_grid as f64;
        let w = var(phi);
        if w < best.1 {
            best = (i, w);
        }
    }
    let step = std::f64::consts::PI / n_grid as f64;
    let center = -std::f64::consts::FRAC_PI_2 + best.0 as f64 * step;
    let (mut lo, mut hi) = (center - step, center + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (var(x1), var(x2));
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = var(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = var(x2);
        }
    }
    let phi_opt = 0.5 * (lo + hi);
    let xi2 = n_spins as f64 * var(phi_opt) / (vn * vn);
    Ok((xi2, phi_opt))
}
