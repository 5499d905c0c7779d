//! Classical fixed-step RK4. No adaptivity by design: runs are
//! bit-reproducible for a given (t0, t1, dt) regardless of the right-hand
//! side's stiffness history.

use ndarray::{Array1, Array2};

use crate::C64;

/// Settings for fixed-step integration. `dt` is in units of 1/Gamma when the
/// right-hand side is a Liouvillian scaled by Gamma.
#[derive(Debug, Clone, Copy)]
pub struct OdeSettings {
    pub dt: f64,
}

impl Default for OdeSettings {
    fn default() -> Self {
        Self { dt: 1e-3 }
    }
}

/// State vectors the integrator can advance: needs clone and y += a*x.
pub trait OdeState: Clone {
    fn axpy_f64(&mut self, a: f64, x: &Self);
}

impl OdeState for Array1<f64> {
    fn axpy_f64(&mut self, a: f64, x: &Self) {
        self.zip_mut_with(x, |y, &v| *y += a * v);
    }
}

impl OdeState for Array1<C64> {
    fn axpy_f64(&mut self, a: f64, x: &Self) {
        self.zip_mut_with(x, |y, &v| *y += v * a);
    }
}

impl OdeState for Array2<C64> {
    fn axpy_f64(&mut self, a: f64, x: &Self) {
        self.zip_mut_with(x, |y, &v| *y += v * a);
    }
}

impl OdeState for [f64; 3] {
    fn axpy_f64(&mut self, a: f64, x: &Self) {
        for i in 0..3 {
            self[i] += a * x[i];
        }
    }
}

/// One RK4 step of size dt.
pub fn rk4_step<S: OdeState, F: FnMut(f64, &S) -> S>(rhs: &mut F, t: f64, y: &S, dt: f64) -> S {
    let k1 = rhs(t, y);
    let mut ya = y.clone();
    ya.axpy_f64(0.5 * dt, &k1);
    let k2 = rhs(t + 0.5 * dt, &ya);
    let mut yb = y.clone();
    yb.axpy_f64(0.5 * dt, &k2);
    let k3 = rhs(t + 0.5 * dt, &yb);
    let mut yc = y.clone();
    yc.axpy_f64(dt, &k3);
    let k4 = rhs(t + dt, &yc);
    let mut out = y.clone();
    out.axpy_f64(dt / 6.0, &k1);
    out.axpy_f64(dt / 3.0, &k2);
    out.axpy_f64(dt / 3.0, &k3);
    out.axpy_f64(dt / 6.0, &k4);
    out
}

/// Integrate from t0 to t1 with full steps of `dt` (a final shorter step
/// absorbs any remainder). The observer sees every accepted state including
/// the initial one.
pub fn integrate_fixed<S: OdeState, F: FnMut(f64, &S) -> S>(
    mut rhs: F,
    y0: S,
    t0: f64,
    t1: f64,
    settings: &OdeSettings,
    mut observe: impl FnMut(f64, &S),
) -> S {
    assert!(settings.dt > 0.0 && t1 >= t0);
    let mut t = t0;
    let mut y = y0;
    observe(t, &y);
    let span = t1 - t0;
    let n_full = (span / settings.dt + 1e-9).floor() as u64;
    for i in 0..n_full {
        y = rk4_step(&mut rhs, t, &y, settings.dt);
        t = t0 + (i + 1) as f64 * settings.dt;
        observe(t, &y);
    }
    let rem = t1 - t;
    if rem > 1e-12 * settings.dt.max(1.0) {
        y = rk4_step(&mut rhs, t, &y, rem);
        t = t1;
        observe(t, &y);
    }
    y
}

/// Integrate without observation, returning the final state.
pub fn integrate_to<S: OdeState, F: FnMut(f64, &S) -> S>(
    rhs: F,
    y0: S,
    t0: f64,
    t1: f64,
    settings: &OdeSettings,
) -> S {
    integrate_fixed(rhs, y0, t0, t1, settings, |_, _| {})
}
