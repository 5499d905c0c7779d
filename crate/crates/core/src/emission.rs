//! Emission spectrum of the collective decay channel.
//!
//! Everything here rests on one decomposition. With a = D_theta, the quantum
//! regression theorem gives the steady-state correlator
//! g(tau) = <a'(t) a(t+tau)> = Tr[a e^{L tau}(rho_ss a')], and expanding the
//! propagator over eigenmodes of the generator turns it into
//! g(tau) = sum_mu c_mu e^{lambda_mu tau} with complex weights
//! c_mu = Tr[a rho_R_mu] Tr[rho_L_mu rho_ss a'].
//!
//! The spectrum S(omega) = (1/pi) Re int_0^inf e^{i omega tau} g(tau) dtau
//! then splits by Re lambda_mu. A decaying mode contributes a Lorentzian of
//! half-width gamma_mu/2 = -Re lambda_mu plus a dispersive partner, both
//! centered at omega = -Im lambda_mu; a zero-decay mode contributes a delta
//! line with a principal-value partner that only becomes a finite curve under
//! detector broadening. Completeness of the decomposition makes
//! sum_mu Re c_mu = <a'a>_ss an exact identity — the sum rule every result
//! in this module is checked against.

use ndarray::prelude::*;
use rayon::prelude::*;

use crate::liouvillian::{
    build_banded_liouvillian, build_liouvillian, liouvillian_spectrum, vec_density,
    LiouvillianSpectrum,
};
use crate::numerics::banded::{banded_null_vector, targeted_eigenpairs, TargetedOpts};
use crate::params::ModelParams;
use crate::spin_algebra::jump_operator;
use crate::{C64, Error, Operator, Result};

/// Detector linewidth fraction (of Gamma) used when no explicit value is
/// chosen: broad enough to resolve on a 1e-3 grid, narrow against every
/// collective scale.
pub const DEFAULT_DETECTOR_FRACTION: f64 = 0.01;

/// Stationarity knob: `rho_ss` is accepted when ||L vec(rho)|| is below this
/// times the generator's RMS column scale (Frobenius norm over sqrt(dim),
/// floored at Gamma).
pub const STATIONARITY_TOL: f64 = 1e-8;

/// One decaying mode (Re lambda < 0) of the emission decomposition. The line
/// is centered at omega = -omega_mu because the mode enters the spectrum
/// through delta/Lorentzian factors in (omega + omega_mu).
#[derive(Debug, Clone, Copy)]
pub struct SpectralLine {
    /// Im lambda_mu.
    pub omega_mu: f64,
    /// gamma_mu / 2 = -Re lambda_mu; strictly positive for a stored line.
    pub half_width: f64,
    /// L_mu = Re c_mu: area of the Lorentzian component.
    pub lorentzian_weight: f64,
    /// K_mu = Im c_mu: weight of the dispersive component (integrates to 0).
    pub dispersive_weight: f64,
}

impl SpectralLine {
    /// Frequency the line is centered at.
    pub fn center(&self) -> f64 {
        -self.omega_mu
    }

    /// This line's contribution to S at one frequency.
    pub fn eval(&self, omega: f64) -> f64 {
        let x = omega + self.omega_mu;
        let hw = self.half_width;
        (hw * self.lorentzian_weight - x * self.dispersive_weight)
            / (hw * hw + x * x)
            / std::f64::consts::PI
    }
}

/// One zero-decay mode (|Re lambda| <= zero_tol): a delta line of area
/// `weight` at omega = -omega_mu plus a principal-value term of strength
/// `principal_value_weight`, kept symbolic until broadening.
#[derive(Debug, Clone, Copy)]
pub struct DeltaLine {
    /// Im lambda_mu.
    pub omega_mu: f64,
    /// L_mu: area carried by the delta function.
    pub weight: f64,
    /// K_mu: coefficient of (1/pi) P.V. 1/(omega + omega_mu).
    pub principal_value_weight: f64,
}

impl DeltaLine {
    pub fn center(&self) -> f64 {
        -self.omega_mu
    }
}

/// Emission spectrum split into the exactly representable pieces: a
/// continuous curve from all decaying modes, plus the delta/principal-value
/// data of the zero-decay modes. `total_weight` is the sum of every L_mu and
/// must reproduce `dd_expectation` (the sum rule); both are stored so the
/// agreement stays checkable downstream.
#[derive(Debug, Clone)]
pub struct EmissionSpectrum {
    pub omega: Array1<f64>,
    /// Decaying-mode part of S on `omega`.
    pub continuous: Array1<f64>,
    pub lines: Vec<SpectralLine>,
    pub delta_lines: Vec<DeltaLine>,
    /// |Re lambda| threshold that classified the delta lines.
    pub zero_tol: f64,
    /// Sum of all Lorentzian and delta weights.
    pub total_weight: f64,
    /// Tr[D'D rho_ss], computed independently of the decomposition.
    pub dd_expectation: f64,
    /// Eigenvector condition of the underlying decomposition.
    pub condition_estimate: f64,
}

impl EmissionSpectrum {
    /// Replace delta lines by Lorentzians of HWHM `gamma_det / 2` and their
    /// principal-value partners by the matching dispersive curves (the exact
    /// convolution of both distributions with the detector Lorentzian), added
    /// to the continuous part on the stored grid.
    pub fn broadened(&self, gamma_det: f64) -> Result<Array1<f64>> {
        if gamma_det <= 0.0 || !gamma_det.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "detector linewidth must be positive, got {gamma_det}"
            )));
        }
        let det: Vec<SpectralLine> = self
            .delta_lines
            .iter()
            .map(|d| SpectralLine {
                omega_mu: d.omega_mu,
                half_width: 0.5 * gamma_det,
                lorentzian_weight: d.weight,
                dispersive_weight: d.principal_value_weight,
            })
            .collect();
        let mut out = lines_spectrum(&det, &self.omega);
        out += &self.continuous;
        Ok(out)
    }
}

/// Evaluate the continuous spectrum of a set of lines on a frequency grid.
/// Grid points are independent; evaluation parallelizes by chunk.
pub fn lines_spectrum(lines: &[SpectralLine], omega: &Array1<f64>) -> Array1<f64> {
    let vals: Vec<f64> = omega
        .as_slice()
        .expect("contiguous grid")
        .par_chunks(256)
        .flat_map_iter(|chunk| {
            chunk
                .iter()
                .map(|&w| lines.iter().map(|l| l.eval(w)).sum::<f64>())
                .collect::<Vec<f64>>()
        })
        .collect();
    Array1::from_vec(vals)
}

/// Trapezoid integral of `y` over the monotone grid `x`.
pub fn trapezoid(x: &Array1<f64>, y: &Array1<f64>) -> f64 {
    assert_eq!(x.len(), y.len());
    (1..x.len()).map(|i| 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1])).sum()
}

fn trace_product(a: &Operator, b: &Operator) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..n {
        for c in 0..n {
            acc += a[[r, c]] * b[[c, r]];
        }
    }
    acc
}

/// Sparse (row, col, value) triplets of an operator; D_theta has only
/// first off-diagonals, so traces against dense matrices become O(n).
fn sparse_entries(m: &Operator) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for ((r, c), &v) in m.indexed_iter() {
        if v != C64::new(0.0, 0.0) {
            out.push((r, c, v));
        }
    }
    out
}

/// Tr[M rho] for vectorized rho (column stacking: index r + c n).
fn trace_against_vec(entries: &[(usize, usize, C64)], v: &ArrayView1<C64>, n: usize) -> C64 {
    entries.iter().map(|&(r, c, m)| m * v[c + r * n]).sum()
}

fn stationarity_defect(l_apply: impl Fn(&Array1<C64>) -> Array1<C64>, rho: &Operator) -> f64 {
    let v = vec_density(rho);
    l_apply(&v).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn require_stationary(defect: f64, scale: f64) -> Result<()> {
    if defect > STATIONARITY_TOL * scale {
        return Err(Error::InvalidParameter(format!(
            "state is not stationary: ||L vec(rho)|| = {defect:.3e} exceeds \
             {STATIONARITY_TOL:.0e} x generator scale {scale:.3e}"
        )));
    }
    Ok(())
}

/// Full dense decomposition shared by the correlator and the spectrum:
/// eigenmodes plus the complex weight of each.
struct EmissionDecomposition {
    spectrum: LiouvillianSpectrum,
    weights: Vec<C64>,
    dd_expectation: f64,
}

fn decompose(params: &ModelParams, rho_ss: &Operator, zero_tol: Option<f64>) -> Result<EmissionDecomposition> {
    let n = params.dim();
    if rho_ss.nrows() != n || rho_ss.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "steady state is {}x{}, expected {n}x{n}",
            rho_ss.nrows(),
            rho_ss.ncols()
        )));
    }
    let sup = build_liouvillian(params)?;
    let lnorm: f64 = sup.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = params.gamma.max(lnorm / (sup.dim as f64).sqrt());
    let defect = stationarity_defect(|v| sup.matrix.dot(v), rho_ss);
    require_stationary(defect, scale)?;

    let spectrum = liouvillian_spectrum(&sup, zero_tol)?;
    if spectrum.defective() {
        return Err(Error::Defective {
            cond: spectrum.condition_estimate,
            limit: crate::numerics::DEFECTIVE_CONDITION_LIMIT,
        });
    }
    let d = jump_operator(params);
    let dd = d.t().mapv(|z| z.conj()).dot(&d);
    let dd_expectation = trace_product(&dd, rho_ss).re;
    // initial operator of the regression step: rho_ss D'
    let x0 = vec_density(&rho_ss.dot(&d.t().mapv(|z| z.conj())));
    let d_entries = sparse_entries(&d);
    let dim = sup.dim;
    let weights: Vec<C64> = (0..dim)
        .map(|mu| {
            let emit = trace_against_vec(&d_entries, &spectrum.right_vectors.column(mu), n);
            let seed: C64 = spectrum
                .left_vectors
                .row(mu)
                .iter()
                .zip(x0.iter())
                .map(|(a, b)| a * b)
                .sum();
            emit * seed
        })
        .collect();
    let total: f64 = weights.iter().map(|c| c.re).sum();
    if (total - dd_expectation).abs() > 1e-6 * dd_expectation.abs().max(1e-12) {
        return Err(Error::Inconsistency(format!(
            "mode weights sum to {total:.12e} but Tr[D'D rho] = {dd_expectation:.12e}; \
             spectral decomposition lost completeness"
        )));
    }
    Ok(EmissionDecomposition { spectrum, weights, dd_expectation })
}

/// Steady-state two-time correlator <D'(t) D(t+tau)> on a grid of tau >= 0,
/// by the quantum regression theorem over the dense spectral decomposition.
///
/// `rho_ss` must be stationary; under multiple steady states pass the
/// projection of the physical initial state, since the correlator depends on
/// which asymptotic state the system settled into.
pub fn two_time_correlator(
    params: &ModelParams,
    rho_ss: &Operator,
    tau_grid: &Array1<f64>,
) -> Result<Array1<C64>> {
    if tau_grid.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidParameter("correlator requires tau >= 0".into()));
    }
    let dec = decompose(params, rho_ss, None)?;
    let vals = &dec.spectrum.eigenvalues;
    Ok(tau_grid.mapv(|tau| {
        dec.weights
            .iter()
            .zip(vals.iter())
            .map(|(&c, &l)| c * (l * tau).exp())
            .sum()
    }))
}

/// Emission spectrum at a stationary state: continuous part on `omega_grid`
/// from all decaying modes, delta entries for modes with |Re lambda| <=
/// `zero_tol` (default 1e-9 Gamma, the spectrum module's classification
/// tolerance).
///
/// Dense diagonalization underneath — cost grows as the sixth power of the
/// spin number, minutes by N = 50; use `banded_emission_lines` past that.
pub fn emission_spectrum(
    params: &ModelParams,
    rho_ss: &Operator,
    omega_grid: &Array1<f64>,
    zero_tol: Option<f64>,
) -> Result<EmissionSpectrum> {
    let dec = decompose(params, rho_ss, zero_tol)?;
    let steady: Vec<usize> = dec.spectrum.steady_indices();
    let mut lines = Vec::new();
    let mut delta_lines = Vec::new();
    for (mu, (&c, &l)) in dec.weights.iter().zip(dec.spectrum.eigenvalues.iter()).enumerate() {
        if steady.contains(&mu) {
            delta_lines.push(DeltaLine {
                omega_mu: l.im,
                weight: c.re,
                principal_value_weight: c.im,
            });
        } else {
            lines.push(SpectralLine {
                omega_mu: l.im,
                half_width: -l.re,
                lorentzian_weight: c.re,
                dispersive_weight: c.im,
            });
        }
    }
    // A unique steady state pins the zero mode's left matrix to the identity,
    // so its weight <D><D'> is real: finite K there means the decomposition
    // (not the model) went wrong.
    if delta_lines.len() == 1 {
        let k = delta_lines[0].principal_value_weight;
        if k.abs() > 1e-7 * dec.dd_expectation.abs().max(1e-12) {
            return Err(Error::Inconsistency(format!(
                "unique steady state carries dispersive delta weight {k:.3e}; \
                 zero-mode weight must be real"
            )));
        }
    }
    let continuous = lines_spectrum(&lines, omega_grid);
    let total_weight = lines.iter().map(|l| l.lorentzian_weight).sum::<f64>()
        + delta_lines.iter().map(|d| d.weight).sum::<f64>();
    Ok(EmissionSpectrum {
        omega: omega_grid.clone(),
        continuous,
        lines,
        delta_lines,
        zero_tol: dec.spectrum.zero_tol,
        total_weight,
        dd_expectation: dec.dd_expectation,
        condition_estimate: dec.spectrum.condition_estimate,
    })
}

/// One certified line from the banded route: the eigenvalue, its spectral
/// line, and the residuals of both eigenvectors relative to ||L||_F.
#[derive(Debug, Clone)]
pub struct ModeLine {
    pub eigenvalue: C64,
    pub line: SpectralLine,
    pub right_residual: f64,
    pub left_residual: f64,
}

fn conj_dot(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Spectral lines of the `n_want` modes nearest `shift`, through the banded
/// generator — the route for system sizes where the dense decomposition is
/// out of reach. Right eigenpairs come from shift-and-invert subspace
/// iteration; each left eigenvector is recovered by inverse iteration on the
/// adjoint band at the conjugate eigenvalue and certified by its own
/// residual, then the pair is biorthonormalized.
///
/// Only decaying modes can be returned: a zero-decay mode near the shift is
/// a delta line, which needs the dense route's classification.
pub fn banded_emission_lines(
    params: &ModelParams,
    rho_ss: &Operator,
    shift: C64,
    opts: &TargetedOpts,
) -> Result<Vec<ModeLine>> {
    let n = params.dim();
    if rho_ss.nrows() != n || rho_ss.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "steady state is {}x{}, expected {n}x{n}",
            rho_ss.nrows(),
            rho_ss.ncols()
        )));
    }
    let band = build_banded_liouvillian(params);
    let lnorm = band.norm_fro();
    let scale = params.gamma.max(lnorm / ((n * n) as f64).sqrt());
    let defect = stationarity_defect(|v| band.matvec(v), rho_ss);
    require_stationary(defect, scale)?;

    let pairs = targeted_eigenpairs(&band, shift, opts)?;
    let adj = band.conj_transpose();
    let d = jump_operator(params);
    let d_entries = sparse_entries(&d);
    let x0 = vec_density(&rho_ss.dot(&d.t().mapv(|z| z.conj())));

    let mut out = Vec::with_capacity(opts.n_want);
    for (k, pair) in pairs.iter().take(opts.n_want).enumerate() {
        let lambda = pair.value;
        if lambda.re > -1e-12 * scale {
            return Err(Error::InvalidParameter(format!(
                "mode {lambda} near shift {shift} does not decay; delta lines \
                 require the dense spectrum"
            )));
        }
        let mut shifted = adj.clone();
        shifted.add_diagonal(-lambda.conj());
        let w = banded_null_vector(&shifted, opts.tol.max(1e-13), opts.seed ^ (k as u64 + 1))?;
        let left_residual = {
            let mut r = adj.matvec(&w);
            r.zip_mut_with(&w, |t, &s| *t -= lambda.conj() * s);
            r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / lnorm
        };
        let overlap = conj_dot(&w, &pair.vector);
        if overlap.norm() < 1e-8 {
            return Err(Error::Inconsistency(format!(
                "left/right overlap {:.3e} at eigenvalue {lambda}; cluster too \
                 tight to biorthonormalize",
                overlap.norm()
            )));
        }
        // plain-dot left row, normalized to l . v = 1 to match the dense pairing
        let emit = trace_against_vec(&d_entries, &pair.vector.view(), n);
        let seed_w: C64 =
            w.iter().zip(x0.iter()).map(|(a, b)| a.conj() * b).sum::<C64>() / overlap;
        let c = emit * seed_w;
        out.push(ModeLine {
            eigenvalue: lambda,
            line: SpectralLine {
                omega_mu: lambda.im,
                half_width: -lambda.re,
                lorentzian_weight: c.re,
                dispersive_weight: c.im,
            },
            right_residual: pair.residual / lnorm,
            left_residual,
        });
    }
    Ok(out)
}
