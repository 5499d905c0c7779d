//! Mean-field (N -> infinity) limit: the normalized Bloch vector
//! s = <S>/J obeys the closed flow
//!
//! ```text
//!     ds_x/dt = dG s_x s_z
//!     ds_y/dt = -Omega s_z + dG s_y s_z
//!     ds_z/dt = Omega s_y - dG (s_x^2 + s_y^2),      dG = G_- - G_+,
//! ```
//!
//! which conserves |s|. Below the critical drive Omega_c = dG the flow has the
//! stable fixed point (0, Omega/dG, M) with M = -sqrt(1 - (Omega/Omega_c)^2);
//! above it no fixed point survives and the vector precesses indefinitely.

use crate::numerics::{OdeSettings, integrate_fixed, rk4_step};
use crate::{Error, ModelParams, Result};

pub type BlochVector = [f64; 3];

/// Polar parametrization s = (sin t cos p, sin t sin p, -cos t), matching the
/// coherent-state convention (t = 0 at the -z pole).
#[derive(Debug, Clone, Copy)]
pub struct PolarAngles {
    pub theta: f64,
    pub phi: f64,
}

impl PolarAngles {
    pub fn to_bloch(self) -> BlochVector {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, -ct]
    }
}

/// Time derivative of the Bloch vector under drive and collective decay.
pub fn mf_derivatives(params: &ModelParams, s: &BlochVector) -> BlochVector {
    let dg = params.gamma_minus() - params.gamma_plus();
    let om = params.omega;
    [
        dg * s[0] * s[2],
        -om * s[2] + dg * s[1] * s[2],
        om * s[1] - dg * (s[0] * s[0] + s[1] * s[1]),
    ]
}

/// The same flow in polar angles: dt/dt = Omega sin p - dG sin t,
/// dp/dt = Omega cos p cot t. Errors within 1e-8 of either pole, where cot
/// diverges; integrate the Cartesian form there instead.
pub fn angle_derivatives(params: &ModelParams, a: &PolarAngles) -> Result<(f64, f64)> {
    if a.theta < 1e-8 || a.theta > std::f64::consts::PI - 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "polar angle {} is too close to a pole; use the Cartesian flow there",
            a.theta
        )));
    }
    let dg = params.gamma_minus() - params.gamma_plus();
    let om = params.omega;
    Ok((
        om * a.phi.sin() - dg * a.theta.sin(),
        om * a.phi.cos() * a.theta.cos() / a.theta.sin(),
    ))
}

/// Critical drive strength dG = Gamma (cos^2 - sin^2)(theta); the stationary
/// state exists for |Omega| <= |Omega_c|. Negative past the symmetry point,
/// where the roles of the two poles swap.
pub fn critical_omega(params: &ModelParams) -> f64 {
    params.gamma_minus() - params.gamma_plus()
}

/// Stationary magnetization M = -sqrt(1 - (Omega/Omega_c)^2): None above the
/// critical drive (no stationary flow), an error at the symmetry point where
/// the critical drive vanishes.
pub fn magnetization(params: &ModelParams) -> Result<Option<f64>> {
    let oc = critical_omega(params);
    if oc.abs() < 1e-12 * params.gamma {
        return Err(Error::InvalidParameter(
            "magnetization is undefined where the critical drive vanishes".into(),
        ));
    }
    if params.omega.abs() > oc.abs() {
        return Ok(None);
    }
    let r = params.omega / oc;
    Ok(Some(-(1.0 - r * r).sqrt()))
}

/// The stationary Bloch vector (0, Omega/dG, M) below the critical drive.
pub fn fixed_point(params: &ModelParams) -> Result<Option<BlochVector>> {
    Ok(magnetization(params)?.map(|m| [0.0, params.omega / critical_omega(params), m]))
}

/// Integrate the flow from `s0`, returning the state at each requested time.
/// `times` must be ascending and start at >= 0.
pub fn mf_flow(
    params: &ModelParams,
    s0: BlochVector,
    times: &[f64],
    settings: &OdeSettings,
) -> Vec<BlochVector> {
    assert!(times.windows(2).all(|w| w[0] <= w[1]), "times must be ascending");
    let mut rhs = |_t: f64, s: &BlochVector| mf_derivatives(params, s);
    let mut out = Vec::with_capacity(times.len());
    let mut s = s0;
    let mut t = 0.0;
    for &target in times {
        if target > t {
            s = integrate_fixed(&mut rhs, s, t, target, settings, |_, _| {});
            t = target;
        }
        out.push(s);
    }
    out
}

/// One RK4 step of the flow; exposed for phase-portrait sampling.
pub fn mf_step(params: &ModelParams, s: &BlochVector, dt: f64) -> BlochVector {
    let mut rhs = |_t: f64, y: &BlochVector| mf_derivatives(params, y);
    rk4_step(&mut rhs, 0.0, s, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn norm(s: &BlochVector) -> f64 {
        (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt()
    }

    #[test]
    fn fixed_point_is_stationary() {
        let p = ModelParams::new(10, 0.4, FRAC_PI_8, 1.0).unwrap();
        let fp = fixed_point(&p).unwrap().unwrap();
        let ds = mf_derivatives(&p, &fp);
        assert!(norm(&ds) < 1e-14, "residual {}", norm(&ds));
        assert!((norm(&fp) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn flow_conserves_norm_and_attracts_below_critical() {
        let p = ModelParams::new(10, 0.0, FRAC_PI_8, 1.0).unwrap();
        let oc = critical_omega(&p);
        let p = ModelParams::new(10, 0.5 * oc, FRAC_PI_8, 1.0).unwrap();
        let s0 = PolarAngles { theta: 2.1, phi: 0.7 }.to_bloch();
        let times = [0.0, 10.0, 50.0, 200.0];
        let sol = mf_flow(&p, s0, &times, &OdeSettings { dt: 1e-3 });
        for s in &sol {
            assert!((norm(s) - 1.0).abs() < 1e-8);
        }
        let fp = fixed_point(&p).unwrap().unwrap();
        let last = sol.last().unwrap();
        let err = norm(&[last[0] - fp[0], last[1] - fp[1], last[2] - fp[2]]);
        assert!(err < 1e-6, "distance to fixed point {err}");
    }

    #[test]
    fn symmetry_point_conserves_sx() {
        let p = ModelParams::new(10, 0.8, FRAC_PI_4, 1.0).unwrap();
        let s0 = PolarAngles { theta: 1.0, phi: 0.3 }.to_bloch();
        let sol = mf_flow(&p, s0, &[100.0], &OdeSettings { dt: 1e-3 });
        assert!((sol[0][0] - s0[0]).abs() < 1e-8);
        assert!(magnetization(&p).is_err());
    }

    #[test]
    fn above_critical_keeps_moving() {
        let p0 = ModelParams::new(10, 0.0, FRAC_PI_8, 1.0).unwrap();
        let oc = critical_omega(&p0);
        let p = ModelParams::new(10, 2.0 * oc, FRAC_PI_8, 1.0).unwrap();
        assert!(magnetization(&p).unwrap().is_none());
        let s0 = PolarAngles { theta: 0.2, phi: 0.0 }.to_bloch();
        let sol = mf_flow(&p, s0, &[100.0], &OdeSettings { dt: 1e-3 });
        let speed = norm(&mf_derivatives(&p, &sol[0]));
        assert!(speed > 1e-2, "flow nearly stalled: |ds/dt| = {speed}");
    }

    #[test]
    fn angle_form_matches_cartesian_flow() {
        let p = ModelParams::new(10, 0.6, 0.4, 1.0).unwrap();
        for &(t, ph) in &[(0.7, 1.9), (2.2, -0.4), (1.3, 3.0)] {
            let a = PolarAngles { theta: t, phi: ph };
            let (dt_dt, dp_dt) = angle_derivatives(&p, &a).unwrap();
            // chain rule through s = (sin t cos p, sin t sin p, -cos t)
            let (st, ct) = t.sin_cos();
            let (sp, cp) = ph.sin_cos();
            let via_angles = [
                ct * cp * dt_dt - st * sp * dp_dt,
                ct * sp * dt_dt + st * cp * dp_dt,
                st * dt_dt,
            ];
            let direct = mf_derivatives(&p, &a.to_bloch());
            for i in 0..3 {
                assert!(
                    (via_angles[i] - direct[i]).abs() < 1e-12,
                    "component {i}: {} vs {}",
                    via_angles[i],
                    direct[i]
                );
            }
        }
    }

    #[test]
    fn angle_form_rejects_poles() {
        let p = ModelParams::new(10, 0.6, 0.4, 1.0).unwrap();
        assert!(angle_derivatives(&p, &PolarAngles { theta: 1e-9, phi: 0.0 }).is_err());
        assert!(
            angle_derivatives(&p, &PolarAngles { theta: std::f64::consts::PI, phi: 0.0 })
                .is_err()
        );
    }

    #[test]
    fn thermal_phase_flow_is_a_closed_orbit() {
        // Omega > Omega_c with s_x = 0: pendulum in rotation, period
        // 2 pi / sqrt(Omega^2 - dG^2)
        let p = ModelParams::new(10, 1.2, 0.0, 1.0).unwrap();
        assert!(magnetization(&p).unwrap().is_none());
        let s0 = [0.0, 0.0, -1.0];
        let period = 2.0 * std::f64::consts::PI / (1.2f64 * 1.2 - 1.0).sqrt();
        let times: Vec<f64> = (0..10500).map(|k| k as f64 * 0.001).collect();
        let sol = mf_flow(&p, s0, &times, &OdeSettings { dt: 1e-3 });
        let mut best = (f64::INFINITY, 0.0);
        for (s, &t) in sol.iter().zip(times.iter()).skip(2000) {
            let d = norm(&[s[0] - s0[0], s[1] - s0[1], s[2] - s0[2]]);
            if d < best.0 {
                best = (d, t);
            }
        }
        assert!(best.0 < 1e-3, "no recurrence: closest return {} at t={}", best.0, best.1);
        let cycles = best.1 / period;
        assert!(
            (cycles - cycles.round()).abs() < 0.05,
            "return time {} is not a multiple of the pendulum period {period}",
            best.1
        );
    }
}
