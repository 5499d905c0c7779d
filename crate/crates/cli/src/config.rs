//! Run configuration: JSON files, per-experiment presets, key=value overrides.
//!
//! Environment variables are never read; everything that influences a run is
//! in the resolved configuration, which is written next to the datasets so
//! any run can be reproduced from its own sidecar.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sslab_core::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PhaseScan,
    Gap,
    LiouvilleSpectrum,
    MeanFieldFlow,
    TrajectoryFreezing,
    Counting,
    TiltedScgf,
    Emission,
    Squeezing,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::PhaseScan,
        Experiment::Gap,
        Experiment::LiouvilleSpectrum,
        Experiment::MeanFieldFlow,
        Experiment::TrajectoryFreezing,
        Experiment::Counting,
        Experiment::TiltedScgf,
        Experiment::Emission,
        Experiment::Squeezing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PhaseScan => "phase-scan",
            Experiment::Gap => "gap",
            Experiment::LiouvilleSpectrum => "liouville-spectrum",
            Experiment::MeanFieldFlow => "mean-field-flow",
            Experiment::TrajectoryFreezing => "trajectory-freezing",
            Experiment::Counting => "counting",
            Experiment::TiltedScgf => "tilted-scgf",
            Experiment::Emission => "emission",
            Experiment::Squeezing => "squeezing",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|e| e.name() == name)
    }
}

/// One-dimensional grid: an inclusive linspace or an explicit list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Linspace { min: f64, max: f64, points: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn linspace(min: f64, max: f64, points: usize) -> Self {
        GridSpec::Linspace { min, max, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Linspace { min, max, points } => match points {
                0 => Vec::new(),
                1 => vec![*min],
                _ => (0..*points)
                    .map(|i| min + (max - min) * i as f64 / (*points - 1) as f64)
                    .collect(),
            },
            GridSpec::List(v) => v.clone(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            GridSpec::Linspace { points, .. } => *points,
            GridSpec::List(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScgfVariant {
    /// Tilt on the physical jump operator D_theta.
    Physical,
    /// Tilt on the canonical symmetry channel (S_x jumps).
    CanonicalSymmetry,
}

/// Everything a run depends on. Serde defaults let configuration files state
/// only what they change; the resolved struct is written back out in full.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    // model point (scans read the grids below instead, falling back to these)
    pub n_spins: usize,
    pub omega: f64,
    pub theta: f64,
    pub gamma: f64,
    pub omega_grid: Option<GridSpec>,
    pub theta_grid: Option<GridSpec>,
    // time evolution and sampling
    pub t_max: f64,
    pub dt: f64,
    pub t_points: usize,
    // stochastic runs
    pub n_traj: usize,
    pub base_seed: u64,
    // jump counting
    pub horizon: f64,
    pub k_max: Option<usize>,
    /// Initial sector weights in the S_x eigenbasis, ascending eigenvalue
    /// order; uniform when absent.
    pub sector_weights: Option<Vec<f64>>,
    // trajectory freezing
    /// S_x eigenvalues m selecting the equally weighted initial superposition.
    pub initial_m: Vec<f64>,
    pub freeze_threshold: f64,
    // mean-field flows
    pub initial_bloch: Vec<[f64; 3]>,
    // biased ensembles
    pub s_grid: GridSpec,
    pub k_grid: Option<GridSpec>,
    pub scgf_variant: ScgfVariant,
    // emission
    pub frequency_grid: GridSpec,
    pub gamma_det: f64,
    pub zero_tol: Option<f64>,
    pub outdir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_spins: 10,
            omega: 0.8,
            theta: 0.0,
            gamma: 1.0,
            omega_grid: None,
            theta_grid: None,
            t_max: 100.0,
            dt: 1e-3,
            t_points: 201,
            n_traj: 100,
            base_seed: 7,
            horizon: 1000.0,
            k_max: None,
            sector_weights: None,
            initial_m: Vec::new(),
            freeze_threshold: 0.99,
            initial_bloch: vec![[0.0, 0.0, 1.0]],
            s_grid: GridSpec::linspace(-1.0, 1.0, 81),
            k_grid: None,
            scgf_variant: ScgfVariant::Physical,
            frequency_grid: GridSpec::linspace(-3.0, 3.0, 1201),
            gamma_det: 0.01,
            zero_tol: None,
            outdir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    /// Defaults reproducing the reference dataset for each experiment.
    pub fn preset(kind: Experiment) -> Self {
        let mut c = Self::default();
        match kind {
            Experiment::PhaseScan => {
                c.n_spins = 50;
                c.omega_grid = Some(GridSpec::linspace(0.0, 2.0, 41));
                c.theta_grid = Some(GridSpec::linspace(0.0, PI / 2.0, 41));
            }
            Experiment::Gap => {
                c.n_spins = 100;
                c.omega_grid = Some(GridSpec::linspace(0.0, 1.5, 16));
                c.theta_grid = Some(GridSpec::linspace(0.0, PI / 2.0, 16));
            }
            Experiment::LiouvilleSpectrum => {
                c.n_spins = 20;
                c.omega = 0.8;
                c.theta = 0.0;
            }
            Experiment::MeanFieldFlow => {
                c.omega = 0.6;
                c.theta = FRAC_PI_8;
                c.t_max = 40.0;
                c.t_points = 401;
                c.initial_bloch = vec![
                    [0.0, 0.0, 1.0],
                    [0.8, 0.0, 0.6],
                    [0.0, 0.8, 0.6],
                    [-0.8, 0.0, 0.6],
                    [0.0, -0.8, 0.6],
                    [0.8, 0.0, -0.6],
                    [-0.8, 0.0, -0.6],
                    [0.0, 0.8, -0.6],
                ];
            }
            Experiment::TrajectoryFreezing => {
                c.n_spins = 10;
                c.omega = 0.8;
                c.theta = FRAC_PI_4;
                c.t_max = 100.0;
                c.n_traj = 600;
                c.initial_m = vec![0.0, 3.0, 5.0];
            }
            Experiment::Counting => {
                c.n_spins = 20;
                c.omega = 0.8;
                c.theta = FRAC_PI_4;
                c.horizon = 3000.0;
                c.n_traj = 10_000;
            }
            Experiment::TiltedScgf => {
                c.n_spins = 20;
                c.omega = 0.8;
                c.theta = FRAC_PI_4;
                c.scgf_variant = ScgfVariant::CanonicalSymmetry;
                c.s_grid = GridSpec::linspace(-1.0, 1.0, 101);
            }
            Experiment::Emission => {
                c.n_spins = 40;
                c.omega = 2.0;
                c.theta = 0.0;
                c.frequency_grid = GridSpec::linspace(-4.0, 4.0, 1601);
            }
            Experiment::Squeezing => {
                c.n_spins = 100;
                c.theta = FRAC_PI_8;
                c.omega_grid = Some(GridSpec::linspace(0.0, 1.0, 41));
            }
        }
        c
    }

    pub fn omega_values(&self) -> Vec<f64> {
        self.omega_grid.as_ref().map(|g| g.values()).unwrap_or_else(|| vec![self.omega])
    }

    pub fn theta_values(&self) -> Vec<f64> {
        self.theta_grid.as_ref().map(|g| g.values()).unwrap_or_else(|| vec![self.theta])
    }

    /// Structural checks before any work starts; violations are usage errors.
    pub fn validate(&self, kind: Experiment) -> Result<(), String> {
        if self.n_spins == 0 {
            return Err("n_spins must be at least 1".into());
        }
        let gridded = matches!(
            kind,
            Experiment::PhaseScan | Experiment::Gap | Experiment::Squeezing
        );
        if gridded {
            if self.omega_values().is_empty() {
                return Err("omega grid is empty".into());
            }
            if self.theta_values().is_empty() {
                return Err("theta grid is empty".into());
            }
        } else {
            // single-point experiments must name a valid model point up front
            ModelParams::new(self.n_spins, self.omega, self.theta, self.gamma)
                .map_err(|e| e.to_string())?;
        }
        match kind {
            Experiment::MeanFieldFlow => {
                if self.initial_bloch.is_empty() {
                    return Err("initial_bloch must list at least one starting point".into());
                }
                if self.t_points < 2 || self.t_max <= 0.0 {
                    return Err("flow needs t_points >= 2 and t_max > 0".into());
                }
            }
            Experiment::TrajectoryFreezing => {
                if self.n_traj == 0 {
                    return Err("n_traj must be positive".into());
                }
                if self.initial_m.is_empty() {
                    return Err("initial_m must list at least one sector".into());
                }
                let j = self.n_spins as f64 / 2.0;
                for &m in &self.initial_m {
                    let idx = m + j;
                    if (idx - idx.round()).abs() > 1e-9 || idx < -0.5 || idx.round() > self.n_spins as f64 {
                        return Err(format!("initial_m entry {m} is not a sector of J = {j}"));
                    }
                }
                if !(0.5..=1.0).contains(&self.freeze_threshold) {
                    return Err("freeze_threshold must lie in [0.5, 1]".into());
                }
                if self.dt <= 0.0 || self.t_max <= 0.0 {
                    return Err("freezing needs dt > 0 and t_max > 0".into());
                }
            }
            Experiment::Counting => {
                if self.n_traj == 0 {
                    return Err("n_traj must be positive".into());
                }
                if self.horizon <= 0.0 {
                    return Err("horizon must be positive".into());
                }
                if let Some(w) = &self.sector_weights {
                    if w.len() != self.n_spins + 1 {
                        return Err(format!(
                            "sector_weights needs {} entries, got {}",
                            self.n_spins + 1,
                            w.len()
                        ));
                    }
                    if w.iter().any(|&x| x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
                        return Err("sector_weights must be nonnegative with positive sum".into());
                    }
                }
            }
            Experiment::TiltedScgf => {
                if self.s_grid.len() < 5 {
                    return Err("s_grid needs at least 5 points".into());
                }
            }
            Experiment::Emission => {
                if self.frequency_grid.len() < 2 {
                    return Err("frequency_grid needs at least 2 points".into());
                }
                if self.gamma_det <= 0.0 {
                    return Err("gamma_det must be positive".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Apply `key=value` overrides through the JSON representation. Values parse
/// as JSON when possible and fall back to strings, so `omega=1.2`,
/// `omega_grid=[0,1,2]` and `outdir=data` all work. Dotted keys descend into
/// nested values.
pub fn apply_overrides(
    cfg: &ExperimentConfig,
    overrides: &[String],
) -> Result<ExperimentConfig, String> {
    if overrides.is_empty() {
        return Ok(cfg.clone());
    }
    let mut root = serde_json::to_value(cfg).expect("configuration serializes");
    for ov in overrides {
        let (path, raw) = ov
            .split_once('=')
            .ok_or_else(|| format!("override `{ov}` is not of the form key=value"))?;
        if path.is_empty() {
            return Err(format!("override `{ov}` has an empty key"));
        }
        let val = serde_json::from_str::<serde_json::Value>(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
        let parts: Vec<&str> = path.split('.').collect();
        set_path(&mut root, &parts, val).map_err(|e| format!("override `{ov}`: {e}"))?;
    }
    serde_json::from_value(root).map_err(|e| format!("configuration rejected: {e}"))
}

fn set_path(cur: &mut serde_json::Value, parts: &[&str], val: serde_json::Value) -> Result<(), String> {
    let (head, rest) = parts.split_first().expect("path is nonempty");
    match cur {
        serde_json::Value::Object(map) => {
            if rest.is_empty() {
                map.insert((*head).to_string(), val);
                Ok(())
            } else {
                let slot = map
                    .entry((*head).to_string())
                    .or_insert_with(|| serde_json::Value::Object(Default::default()));
                set_path(slot, rest, val)
            }
        }
        serde_json::Value::Array(arr) => {
            let idx: usize =
                head.parse().map_err(|_| format!("`{head}` is not an array index"))?;
            let slot = arr
                .get_mut(idx)
                .ok_or_else(|| format!("index {idx} is out of bounds"))?;
            if rest.is_empty() {
                *slot = val;
                Ok(())
            } else {
                set_path(slot, rest, val)
            }
        }
        _ => Err(format!("cannot descend into a scalar at `{head}`")),
    }
}
