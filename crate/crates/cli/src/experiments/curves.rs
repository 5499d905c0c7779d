//! Curve datasets: mean-field flows on the Bloch sphere and the biased
//! counting ensemble (scaled cumulant generating function and rate function).

use serde_json::json;
use sslab_core::counting_stats::{
    activity_and_mandel, rate_function, scgf, scgf_canonical_symmetry, Activity, ScgfCurve,
};
use sslab_core::mean_field::{fixed_point, magnetization, mf_flow};
use sslab_core::numerics::OdeSettings;
use sslab_core::ModelParams;

use super::{io_err, Outcome};
use crate::config::{ExperimentConfig, ScgfVariant};
use crate::export::{fmt, write_csv, Failure, RunDir};

/// One CSV per initial condition, sampled on a shared time grid.
pub fn mean_field_flow(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let p = ModelParams::new(cfg.n_spins, cfg.omega, cfg.theta, cfg.gamma)
        .map_err(|e| e.to_string())?;
    let times: Vec<f64> = (0..cfg.t_points)
        .map(|i| cfg.t_max * i as f64 / (cfg.t_points - 1) as f64)
        .collect();
    let settings = OdeSettings { dt: cfg.dt };
    let mut max_drift = 0.0f64;
    for (i, &s0) in cfg.initial_bloch.iter().enumerate() {
        let flow = mf_flow(&p, s0, &times, &settings);
        let r0 = (s0[0] * s0[0] + s0[1] * s0[1] + s0[2] * s0[2]).sqrt();
        let rows: Vec<Vec<String>> = times
            .iter()
            .zip(&flow)
            .map(|(&t, s)| {
                let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
                max_drift = max_drift.max((r - r0).abs());
                vec![fmt(t), fmt(s[0]), fmt(s[1]), fmt(s[2])]
            })
            .collect();
        let name = format!("flow_{i:02}.csv");
        write_csv(&dir.path(&name), &["t", "sx", "sy", "sz"], &rows)
            .map_err(|e| io_err(&name, e))?;
    }
    let fp = fixed_point(&p).map_err(|e| e.to_string())?;
    let mag = magnetization(&p).map_err(|e| e.to_string())?;
    Ok(Outcome::clean(json!({
        "flows": cfg.initial_bloch.len(),
        "max_norm_drift": max_drift,
        "fixed_point": fp,
        "magnetization": mag,
    })))
}

/// Default activity grid for the rate function: between the curve's boundary
/// slopes, which is where the Legendre transform of a convex curve is exact.
fn default_k_grid(curve: &ScgfCurve) -> Option<Vec<f64>> {
    let n = curve.s.len();
    let left = (curve.lambda[1] - curve.lambda[0]) / (curve.s[1] - curve.s[0]);
    let right = (curve.lambda[n - 1] - curve.lambda[n - 2]) / (curve.s[n - 1] - curve.s[n - 2]);
    let lo = (left * 1.02).max(0.0);
    let hi = right * 0.98;
    if !(hi > lo) {
        return None;
    }
    Some((0..241).map(|i| lo + (hi - lo) * i as f64 / 240.0).collect())
}

/// lambda(s) for the configured channel, its one-sided derivatives at the
/// origin, and the Legendre rate function.
pub fn tilted_scgf(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let p = ModelParams::new(cfg.n_spins, cfg.omega, cfg.theta, cfg.gamma)
        .map_err(|e| e.to_string())?;
    let s_vals = cfg.s_grid.values();
    let curve = match cfg.scgf_variant {
        ScgfVariant::Physical => scgf(&p, &s_vals),
        ScgfVariant::CanonicalSymmetry => {
            scgf_canonical_symmetry(cfg.n_spins, cfg.omega, cfg.gamma, &s_vals)
        }
    }
    .map_err(|e| e.to_string())?;
    let rows: Vec<Vec<String>> =
        curve.s.iter().zip(&curve.lambda).map(|(&s, &l)| vec![fmt(s), fmt(l)]).collect();
    write_csv(&dir.path("scgf.csv"), &["s", "lambda"], &rows)
        .map_err(|e| io_err("scgf.csv", e))?;

    let mut failures = Vec::new();
    let k_vals = cfg.k_grid.as_ref().map(|g| g.values()).or_else(|| default_k_grid(&curve));
    let mut plateau = None;
    match k_vals {
        Some(ks) if !ks.is_empty() => match rate_function(&curve, &ks) {
            Ok(rate) => {
                plateau = rate.plateau;
                let rows: Vec<Vec<String>> = rate
                    .k
                    .iter()
                    .zip(&rate.phi)
                    .map(|(&k, &f)| vec![fmt(k), fmt(f)])
                    .collect();
                write_csv(&dir.path("rate.csv"), &["k", "phi"], &rows)
                    .map_err(|e| io_err("rate.csv", e))?;
            }
            Err(e) => failures
                .push(Failure { point: json!({ "artifact": "rate.csv" }), error: e.to_string() }),
        },
        _ => failures.push(Failure {
            point: json!({ "artifact": "rate.csv" }),
            error: "activity grid is empty (flat curve and no k_grid configured)".into(),
        }),
    }

    let mut summary = json!({
        "left_deriv": curve.left_deriv,
        "right_deriv": curve.right_deriv,
        "kinked": curve.kinked(),
        "plateau": plateau,
        "max_condition": curve.max_condition,
        "defective": curve.defective,
    });
    if cfg.scgf_variant == ScgfVariant::Physical {
        let act = activity_and_mandel(&p).map_err(|e| e.to_string())?;
        summary["activity"] = match act {
            Activity::Smooth { activity, mandel_q } => {
                json!({ "mean": activity, "mandel_q": mandel_q })
            }
            Activity::Kinked { left, right } => json!({ "left": left, "right": right }),
        };
    }
    Ok(Outcome { summary, failures, attempted: 0 })
}
