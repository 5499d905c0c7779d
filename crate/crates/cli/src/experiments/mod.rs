//! The experiment implementations behind each subcommand.

mod curves;
mod scans;
mod spectra;
mod stochastic;

use std::f64::consts::FRAC_PI_4;

use ndarray::prelude::*;
use sslab_core::liouvillian::steady_state_banded;
use sslab_core::{C64, ModelParams, Operator};

use crate::config::{Experiment, ExperimentConfig};
use crate::export::{Failure, RunDir};

/// What a finished experiment reports back for the metadata sidecar.
pub struct Outcome {
    pub summary: serde_json::Value,
    pub failures: Vec<Failure>,
    /// Grid points attempted; 0 for experiments without a grid.
    pub attempted: usize,
}

impl Outcome {
    pub fn clean(summary: serde_json::Value) -> Self {
        Self { summary, failures: Vec::new(), attempted: 0 }
    }

    /// An experiment whose every grid point failed produced nothing usable.
    pub fn all_failed(&self) -> bool {
        self.attempted > 0 && self.failures.len() == self.attempted
    }
}

pub fn run(kind: Experiment, cfg: &ExperimentConfig, dir: &RunDir) -> Result<Outcome, String> {
    match kind {
        Experiment::PhaseScan => scans::phase_scan(cfg, dir),
        Experiment::Gap => scans::gap_map(cfg, dir),
        Experiment::Squeezing => scans::squeezing_scan(cfg, dir),
        Experiment::LiouvilleSpectrum => spectra::liouville_spectrum(cfg, dir),
        Experiment::Emission => spectra::emission(cfg, dir),
        Experiment::MeanFieldFlow => curves::mean_field_flow(cfg, dir),
        Experiment::TiltedScgf => curves::tilted_scgf(cfg, dir),
        Experiment::TrajectoryFreezing => stochastic::trajectory_freezing(cfg, dir),
        Experiment::Counting => stochastic::counting(cfg, dir),
    }
}

/// Fixed seed for the deterministic steady-state inverse iteration; recorded
/// here rather than in the configuration because it has no physical effect
/// (any seed converges to the same state).
const STEADY_SEED: u64 = 17;

/// A stationary state of the model. Away from the symmetry line the steady
/// state is unique and the banded route finds it; on the line the asymptotic
/// manifold is (N+1)-dimensional and the uniform sector mixture 1/(N+1) is
/// returned — the infinite-time image of the maximally mixed state.
pub(crate) fn steady_state(p: &ModelParams) -> sslab_core::Result<Operator> {
    if (p.theta - FRAC_PI_4).abs() < 1e-12 {
        let dim = p.dim();
        Ok(Array2::from_diag(&Array1::from_elem(dim, C64::new(1.0 / dim as f64, 0.0))))
    } else {
        steady_state_banded(p, 1e-10, STEADY_SEED)
    }
}

pub(crate) fn io_err(context: &str, e: std::io::Error) -> String {
    format!("{context}: {e}")
}
