//! Dense-spectrum datasets: the Liouvillian eigenvalue cloud with emission
//! weights, and the spectrum of emission itself.

use ndarray::prelude::*;
use serde_json::json;
use sslab_core::emission::emission_spectrum;
use sslab_core::liouvillian::{adr, build_liouvillian, liouvillian_spectrum};
use sslab_core::ModelParams;

use super::{io_err, steady_state, Outcome};
use crate::config::ExperimentConfig;
use crate::export::{fmt, write_csv, write_json, RunDir};

/// Every eigenvalue with its emission weight L_mu against the reference
/// stationary state. Weights are nan when no stationary state is available
/// (the eigenvalues are still exact).
pub fn liouville_spectrum(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let p = ModelParams::new(cfg.n_spins, cfg.omega, cfg.theta, cfg.gamma)
        .map_err(|e| e.to_string())?;
    let sup = build_liouvillian(&p).map_err(|e| e.to_string())?;
    let spec = liouvillian_spectrum(&sup, cfg.zero_tol).map_err(|e| e.to_string())?;

    // (re, im, weight) triplets; the emission decomposition covers each mode
    // exactly once, split into decaying lines and stationary delta lines
    let weighted = steady_state(&p).ok().and_then(|rho| {
        let probe = Array1::from(vec![0.0]);
        emission_spectrum(&p, &rho, &probe, cfg.zero_tol).ok()
    });
    let mut rows: Vec<(f64, f64, f64)> = match &weighted {
        Some(es) => es
            .lines
            .iter()
            .map(|l| (-l.half_width, l.omega_mu, l.lorentzian_weight))
            .chain(es.delta_lines.iter().map(|d| (0.0, d.omega_mu, d.weight)))
            .collect(),
        None => spec.eigenvalues.iter().map(|l| (l.re, l.im, f64::NAN)).collect(),
    };
    rows.sort_by(|a, b| (b.0, b.1).partial_cmp(&(a.0, a.1)).unwrap());
    let body: Vec<Vec<String>> =
        rows.iter().map(|&(re, im, w)| vec![fmt(re), fmt(im), fmt(w)]).collect();
    write_csv(&dir.path("spectrum.csv"), &["re_lambda", "im_lambda", "weight_L_mu"], &body)
        .map_err(|e| io_err("spectrum.csv", e))?;

    let (rate, closed) = adr(&spec);
    Ok(Outcome::clean(json!({
        "modes": rows.len(),
        "stationary_modes": spec.steady_indices().len(),
        "adr": rate,
        "gap_closed": closed,
        "weights_resolved": weighted.is_some(),
        "condition_estimate": spec.condition_estimate,
    })))
}

/// Spectrum of emission on the configured frequency grid: the continuous
/// part, a detector-broadened total, and the delta lines as JSON.
pub fn emission(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let p = ModelParams::new(cfg.n_spins, cfg.omega, cfg.theta, cfg.gamma)
        .map_err(|e| e.to_string())?;
    let rho = steady_state(&p).map_err(|e| e.to_string())?;
    let grid = Array1::from(cfg.frequency_grid.values());
    let es = emission_spectrum(&p, &rho, &grid, cfg.zero_tol).map_err(|e| e.to_string())?;
    let broad = es.broadened(cfg.gamma_det).map_err(|e| e.to_string())?;

    let body: Vec<Vec<String>> = grid
        .iter()
        .enumerate()
        .map(|(i, &w)| vec![fmt(w), fmt(es.continuous[i]), fmt(broad[i])])
        .collect();
    write_csv(&dir.path("emission.csv"), &["omega", "S_continuous", "S_broadened"], &body)
        .map_err(|e| io_err("emission.csv", e))?;

    let deltas: Vec<serde_json::Value> = es
        .delta_lines
        .iter()
        .map(|d| {
            json!({
                "omega": d.center(),
                "L_weight": d.weight,
                "K_weight": d.principal_value_weight,
            })
        })
        .collect();
    write_json(&dir.path("deltas.json"), &deltas).map_err(|e| io_err("deltas.json", e))?;

    Ok(Outcome::clean(json!({
        "dd_expectation": es.dd_expectation,
        "total_weight": es.total_weight,
        "delta_lines": es.delta_lines.len(),
        "continuous_lines": es.lines.len(),
        "gamma_det": cfg.gamma_det,
    })))
}
