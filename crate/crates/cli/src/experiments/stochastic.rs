//! Quantum-jump trajectory datasets: sector freezing at the symmetry point
//! and jump-count distributions (exact law next to the Monte Carlo one).

use ndarray::prelude::*;
use serde_json::json;
use sslab_core::counting_stats::{detect_modes, exact_counting_pmf, mc_counting_pmf, total_variation};
use sslab_core::spin_algebra::sx_eigenbasis;
use sslab_core::trajectories::{physical_channel, run_ensemble, freezing_report, FreezeOpts};
use sslab_core::{C64, ModelParams};

use super::{io_err, Outcome};
use crate::config::ExperimentConfig;
use crate::export::{fmt, write_csv, write_json, RunDir};

/// S_x eigenvalues come back as floats; snap to the exact half-integer grid
/// for labeling.
fn sector_label(m: f64) -> f64 {
    (2.0 * m).round() / 2.0
}

/// One trajectory per file (`traj_NNN.csv` with the sector occupations and a
/// JSON sidecar with the jump record), plus a one-row-per-trajectory summary.
pub fn trajectory_freezing(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let p = ModelParams::new(cfg.n_spins, cfg.omega, cfg.theta, cfg.gamma)
        .map_err(|e| e.to_string())?;
    let dim = p.dim();
    let j = cfg.n_spins as f64 / 2.0;
    let (m_values, basis) = sx_eigenbasis(cfg.n_spins).map_err(|e| e.to_string())?;

    let mut psi0 = Array1::<C64>::zeros(dim);
    for &m in &cfg.initial_m {
        let idx = (m + j).round() as usize;
        psi0 += &basis.column(idx);
    }
    let amp = C64::new(1.0 / (cfg.initial_m.len() as f64).sqrt(), 0.0);
    psi0.mapv_inplace(|z| z * amp);

    let channel = physical_channel(&p);
    let records = run_ensemble(&channel, &psi0, cfg.t_max, cfg.dt, cfg.base_seed, cfg.n_traj)
        .map_err(|e| e.to_string())?;
    let opts = FreezeOpts { threshold: cfg.freeze_threshold, ..FreezeOpts::default() };

    let occ_header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..dim).map(|m| format!("p_m{m}")))
        .collect();
    let occ_header_refs: Vec<&str> = occ_header.iter().map(String::as_str).collect();

    let mut summary_rows = Vec::with_capacity(records.len());
    let mut selection_counts = vec![0usize; dim];
    let mut n_frozen = 0usize;
    let mut freeze_times = Vec::new();
    for (i, record) in records.iter().enumerate() {
        let report = freezing_report(record, &basis, &opts);
        let rows: Vec<Vec<String>> = report
            .sample_times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                std::iter::once(fmt(t))
                    .chain((0..dim).map(|m| fmt(report.occupations[[k, m]])))
                    .collect()
            })
            .collect();
        let csv_name = format!("traj_{i:03}.csv");
        write_csv(&dir.path(&csv_name), &occ_header_refs, &rows)
            .map_err(|e| io_err(&csv_name, e))?;
        let sidecar_name = format!("traj_{i:03}.json");
        write_json(
            &dir.path(&sidecar_name),
            &json!({
                "seed": record.seed,
                "params": {
                    "n_spins": p.n_spins,
                    "omega": p.omega,
                    "theta": p.theta,
                    "gamma": p.gamma,
                },
                "jump_times": record.jump_times,
            }),
        )
        .map_err(|e| io_err(&sidecar_name, e))?;

        let (selected_m, freeze_time) = match (report.selected, report.freeze_time) {
            (Some(s), Some(t)) => {
                selection_counts[s] += 1;
                n_frozen += 1;
                freeze_times.push(t);
                (sector_label(m_values[s]), t)
            }
            _ => (f64::NAN, f64::NAN),
        };
        summary_rows.push(vec![
            i.to_string(),
            record.seed.to_string(),
            (report.selected.is_some() as u8).to_string(),
            fmt(selected_m),
            fmt(freeze_time),
            record.n_jumps.to_string(),
        ]);
    }
    write_csv(
        &dir.path("freezing_summary.csv"),
        &["traj", "seed", "frozen", "selected_m", "freeze_time", "n_jumps"],
        &summary_rows,
    )
    .map_err(|e| io_err("freezing_summary.csv", e))?;

    let counts: serde_json::Map<String, serde_json::Value> = selection_counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| (format!("{}", sector_label(m_values[s])), json!(c)))
        .collect();
    let mean_freeze = if freeze_times.is_empty() {
        f64::NAN
    } else {
        freeze_times.iter().sum::<f64>() / freeze_times.len() as f64
    };
    Ok(Outcome::clean(json!({
        "n_traj": cfg.n_traj,
        "frozen": n_frozen,
        "fraction_frozen": n_frozen as f64 / cfg.n_traj as f64,
        "selection_counts": counts,
        "mean_freeze_time": mean_freeze,
    })))
}

/// Jump-count distribution over the horizon: the closed-form law (available
/// on the strong-symmetry line) next to the Monte Carlo histogram from the
/// matching initial mixture.
pub fn counting(cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    let p = ModelParams::new(cfg.n_spins, cfg.omega, cfg.theta, cfg.gamma)
        .map_err(|e| e.to_string())?;
    let dim = p.dim();
    let mut w = cfg.sector_weights.clone().unwrap_or_else(|| vec![1.0 / dim as f64; dim]);
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);

    // initial state: the same sector mixture, expressed in the z basis
    let (_m_values, basis) = sx_eigenbasis(cfg.n_spins).map_err(|e| e.to_string())?;
    let bh = basis.t().mapv(|z| z.conj());
    let diag = Array2::from_diag(&Array1::from_iter(w.iter().map(|&x| C64::new(x, 0.0))));
    let rho0 = basis.dot(&diag).dot(&bh);

    let mc = mc_counting_pmf(&p, &rho0, cfg.horizon, cfg.n_traj, cfg.base_seed)
        .map_err(|e| e.to_string())?;
    let mc_rows: Vec<Vec<String>> = mc
        .probabilities
        .iter()
        .enumerate()
        .map(|(k, &prob)| vec![k.to_string(), fmt(prob)])
        .collect();
    write_csv(&dir.path("mc.csv"), &["K", "p"], &mc_rows).map_err(|e| io_err("mc.csv", e))?;

    // the closed-form law exists only on the strong-symmetry line; elsewhere
    // the Monte Carlo histogram is the dataset
    let exact = exact_counting_pmf(&Array1::from(w.clone()), &p, cfg.horizon, cfg.k_max).ok();
    let mut summary = json!({
        "mc_mean": mc.mean(),
        "mc_variance": mc.variance(),
        "n_traj": cfg.n_traj,
        "horizon": cfg.horizon,
        "exact_available": exact.is_some(),
    });
    if let Some(ex) = &exact {
        let ex_rows: Vec<Vec<String>> = ex
            .probabilities
            .iter()
            .enumerate()
            .map(|(k, &prob)| vec![k.to_string(), fmt(prob)])
            .collect();
        write_csv(&dir.path("exact.csv"), &["K", "p"], &ex_rows)
            .map_err(|e| io_err("exact.csv", e))?;
        let window = (ex.probabilities.len() / 50).max(5);
        summary["exact_mean"] = json!(ex.mean());
        summary["exact_truncated_mass"] = json!(ex.truncated_mass);
        summary["total_variation"] = json!(total_variation(&ex.probabilities, &mc.probabilities));
        summary["exact_modes"] = json!(detect_modes(&ex.probabilities, window, 0.05));
    }
    Ok(Outcome::clean(summary))
}
