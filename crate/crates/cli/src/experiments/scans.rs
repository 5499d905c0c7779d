//! Grid scans over the (Omega, theta) plane: steady-state observables,
//! asymptotic decay rate, and spin squeezing.

use rayon::prelude::*;
use serde_json::json;
use sslab_core::holstein_primakoff::{spin_squeezing_analytic, spin_squeezing_numeric};
use sslab_core::liouvillian::adr_banded;
use sslab_core::mean_field::critical_omega;
use sslab_core::numerics::TargetedOpts;
use sslab_core::spin_algebra::{build_spin_operators, expectation_density, jump_operator};
use sslab_core::ModelParams;

use super::{io_err, steady_state, Outcome};
use crate::config::ExperimentConfig;
use crate::export::{fmt, write_csv, Failure, RunDir};

/// Row-major point order: theta outer, omega inner. Fixed so reruns produce
/// byte-identical files regardless of worker count.
fn grid_points(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    let omegas = cfg.omega_values();
    let thetas = cfg.theta_values();
    let mut pts = Vec::with_capacity(omegas.len() * thetas.len());
    for &th in &thetas {
        for &om in &omegas {
            pts.push((om, th));
        }
    }
    pts
}

fn write_scan(
    dir: &RunDir,
    file: &str,
    header: &[&str],
    pts: &[(f64, f64)],
    results: Vec<Result<Vec<f64>, String>>,
) -> Result<Outcome, String> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&(om, th), res) in pts.iter().zip(results) {
        match res {
            Ok(vals) => rows.push(vals.iter().map(|&v| fmt(v)).collect()),
            Err(error) => {
                failures.push(Failure { point: json!({ "omega": om, "theta": th }), error })
            }
        }
    }
    write_csv(&dir.path(file), header, &rows).map_err(|e| io_err(file, e))?;
    let summary = json!({ "points": pts.len(), "failed": failures.len() });
    Ok(Outcome { summary, failures, attempted: pts.len() })
}

/// Per point: magnetization per spin, transverse squeezing, emission
/// activity (Gamma/J)<D'D>, zero-delay photon correlation, and the critical
/// drive of that theta. Squeezing is nan where the mean spin vanishes and
/// g2 is nan on dark points; both are properties of the point, not errors.
pub fn phase_scan(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let ops = build_spin_operators(cfg.n_spins);
    let j = cfg.n_spins as f64 / 2.0;
    let pts = grid_points(cfg);
    let results: Vec<Result<Vec<f64>, String>> = pts
        .par_iter()
        .map(|&(om, th)| {
            let p =
                ModelParams::new(cfg.n_spins, om, th, cfg.gamma).map_err(|e| e.to_string())?;
            let rho = steady_state(&p).map_err(|e| e.to_string())?;
            let sz = expectation_density(&ops.sz, &rho).re / j;
            let xi2 = spin_squeezing_numeric(&rho, &ops).map(|(x, _)| x).unwrap_or(f64::NAN);
            let d = jump_operator(&p);
            let dh = d.t().mapv(|z| z.conj());
            let n_d = expectation_density(&dh.dot(&d), &rho).re;
            let activity = cfg.gamma / j * n_d;
            let d2 = d.dot(&d);
            let d2h = d2.t().mapv(|z| z.conj());
            let g2 = if n_d.abs() > 1e-12 {
                expectation_density(&d2h.dot(&d2), &rho).re / (n_d * n_d)
            } else {
                f64::NAN
            };
            Ok(vec![om, th, sz, xi2, activity, g2, critical_omega(&p)])
        })
        .collect();
    write_scan(
        dir,
        "phase_scan.csv",
        &["omega", "theta", "sz", "xi2", "activity", "g2", "omega_c"],
        &pts,
        results,
    )
}

/// Asymptotic decay rate over the grid through the banded route, with a
/// log10 column for the usual logarithmic color scale. The symmetry line
/// reports an exactly closed gap.
pub fn gap_map(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let zero_tol = cfg.zero_tol.unwrap_or(1e-7);
    let opts =
        TargetedOpts { block: 8, n_want: 3, max_iter: 300, tol: 1e-11, seed: cfg.base_seed };
    let pts = grid_points(cfg);
    let results: Vec<Result<Vec<f64>, String>> = pts
        .par_iter()
        .map(|&(om, th)| {
            let p =
                ModelParams::new(cfg.n_spins, om, th, cfg.gamma).map_err(|e| e.to_string())?;
            let (rate, _closed) = adr_banded(&p, zero_tol, &opts).map_err(|e| e.to_string())?;
            Ok(vec![om, th, rate, rate.max(1e-16).log10()])
        })
        .collect();
    write_scan(dir, "gap.csv", &["omega", "theta", "adr", "log10_adr"], &pts, results)
}

/// Transverse squeezing across the grid: the bosonic steady-state value next
/// to the finite-size numeric one and the optimal quadrature angle.
pub fn squeezing_scan(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let ops = build_spin_operators(cfg.n_spins);
    let pts = grid_points(cfg);
    let results: Vec<Result<Vec<f64>, String>> = pts
        .par_iter()
        .map(|&(om, th)| {
            let p =
                ModelParams::new(cfg.n_spins, om, th, cfg.gamma).map_err(|e| e.to_string())?;
            let analytic = spin_squeezing_analytic(&p).unwrap_or(f64::NAN);
            let rho = steady_state(&p).map_err(|e| e.to_string())?;
            let (numeric, phi) =
                spin_squeezing_numeric(&rho, &ops).unwrap_or((f64::NAN, f64::NAN));
            Ok(vec![om, th, analytic, numeric, phi])
        })
        .collect();
    write_scan(
        dir,
        "squeezing.csv",
        &["omega", "theta", "xi2_analytic", "xi2_numeric", "phi_opt"],
        &pts,
        results,
    )
}
