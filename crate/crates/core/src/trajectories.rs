//! Quantum-jump Monte Carlo unraveling of the master equation, and the
//! analytic sector-selection ("dissipative freezing") distribution at the
//! strong-symmetry point.
//!
//! One step of length dt: draw a uniform u; with probability
//! p = dt <psi|B'B|psi> apply the jump psi -> B psi / ||.||, otherwise apply
//! the first-order non-Hermitian propagator (1 - i dt (H - i/2 B'B)) psi and
//! renormalize. The physical channel is B = sqrt(Gamma/J) D_theta with
//! H = Omega S_x. At the symmetry point D_{pi/4} = sqrt(2) S_x; sector
//! statistics are conventionally quoted for the canonical normalization
//! L = sqrt(Gamma/J) S_x, provided by `canonical_symmetry_channel` (rates
//! differ from the physical channel by exactly 2).

use ndarray::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::numerics::hermitian_eig;
use crate::spin_algebra::{build_spin_operators, jump_operator, sx_eigenbasis};
use crate::{C64, Error, ModelParams, Operator, Result};

/// Maximum per-step jump probability admitted by the first-order scheme.
pub const JUMP_PROBABILITY_CAP: f64 = 0.05;

/// A Hamiltonian plus a single jump operator, with all rate factors folded
/// into `b` so that the jump probability per step is dt ||b psi||^2.
#[derive(Clone)]
pub struct JumpChannel {
    pub h: Operator,
    pub b: Operator,
}

/// The model's channel in the z-basis: H = Omega S_x,
/// B = sqrt(Gamma/J) (cos t S_- + sin t S_+).
pub fn physical_channel(params: &ModelParams) -> JumpChannel {
    let ops = build_spin_operators(params.n_spins);
    let scale = (params.gamma / params.j()).sqrt();
    JumpChannel {
        h: ops.sx.mapv(|z| z * params.omega),
        b: jump_operator(params).mapv(|z| z * scale),
    }
}

/// Symmetry-sector channel in the S_x eigenbasis (both operators diagonal,
/// states indexed by m = -J..J): H = Omega diag(m), L = sqrt(Gamma/J) diag(m).
pub fn canonical_symmetry_channel(n_spins: usize, omega: f64, gamma: f64) -> JumpChannel {
    let j = n_spins as f64 / 2.0;
    let dim = n_spins + 1;
    let scale = (gamma / j).sqrt();
    let mut h = Operator::zeros((dim, dim));
    let mut b = Operator::zeros((dim, dim));
    for i in 0..dim {
        let m = i as f64 - j;
        h[[i, i]] = C64::new(omega * m, 0.0);
        b[[i, i]] = C64::new(scale * m, 0.0);
    }
    JumpChannel { h, b }
}

/// One stochastic trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub jump_times: Vec<f64>,
    pub sample_times: Vec<f64>,
    /// Normalized states at `sample_times`.
    pub sampled_states: Vec<Array1<C64>>,
    pub n_jumps: usize,
}

/// Target number of stored state samples per trajectory (the final state is
/// always stored exactly at t_max).
const SAMPLE_TARGET: usize = 1024;

/// Largest eigenvalue of B'B: an a-priori bound on the jump rate over all
/// normalized states.
pub fn jump_rate_bound(channel: &JumpChannel) -> Result<f64> {
    let bdb = channel.b.t().mapv(|z| z.conj()).dot(&channel.b);
    let (vals, _) = hermitian_eig(&bdb)?;
    Ok(vals[vals.len() - 1])
}

fn dt_guard(channel: &JumpChannel, dt: f64) -> Result<()> {
    let lam_max = jump_rate_bound(channel)?;
    let p_max = lam_max * dt;
    if p_max >= JUMP_PROBABILITY_CAP {
        return Err(Error::StepTooLarge {
            p_max,
            cap: JUMP_PROBABILITY_CAP,
            dt_cap: JUMP_PROBABILITY_CAP / lam_max,
        });
    }
    Ok(())
}

fn diagonal_part(m: &Operator) -> Option<Array1<C64>> {
    let n = m.nrows();
    for r in 0..n {
        for c in 0..n {
            if r != c && m[[r, c]] != C64::new(0.0, 0.0) {
                return None;
            }
        }
    }
    Some(Array1::from_iter((0..n).map(|i| m[[i, i]])))
}

enum StepperKind {
    Dense { prop: Operator, b: Operator },
    /// Both H and B diagonal (e.g. the symmetry-sector channel): O(dim) steps.
    Diagonal { prop: Array1<C64>, b: Array1<C64>, rate: Array1<f64> },
}

/// Precomputed single-step kernel: jump with probability dt ||B psi||^2 (one
/// uniform per step), otherwise first-order non-Hermitian propagation.
pub struct Stepper {
    pub dt: f64,
    kind: StepperKind,
}

impl Stepper {
    pub fn new(channel: &JumpChannel, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        dt_guard(channel, dt)?;
        let kind = match (diagonal_part(&channel.h), diagonal_part(&channel.b)) {
            (Some(hd), Some(bd)) => {
                let rate = bd.mapv(|z| z.norm_sqr());
                let prop = Array1::from_iter(
                    hd.iter()
                        .zip(rate.iter())
                        .map(|(h, r)| C64::new(1.0, 0.0) - C64::new(0.0, dt) * h - 0.5 * dt * r),
                );
                StepperKind::Diagonal { prop, b: bd, rate }
            }
            _ => {
                let bdb = channel.b.t().mapv(|z| z.conj()).dot(&channel.b);
                let mut prop = Operator::eye(channel.h.nrows());
                prop.scaled_add(C64::new(0.0, -dt), &channel.h);
                prop.scaled_add(C64::new(-0.5 * dt, 0.0), &bdb);
                StepperKind::Dense { prop, b: channel.b.clone() }
            }
        };
        Ok(Stepper { dt, kind })
    }

    /// If the channel is diagonal and `psi` stays pinned to basis state `i`,
    /// every step is a Bernoulli trial with this constant jump probability.
    pub fn pinned_jump_probability(&self, i: usize) -> Option<f64> {
        match &self.kind {
            StepperKind::Diagonal { rate, .. } => Some(rate[i] * self.dt),
            StepperKind::Dense { .. } => None,
        }
    }

    /// Advance `psi` by one step using the uniform draw `u`; returns true if
    /// the step was a quantum jump.
    pub fn step(&self, psi: &mut Array1<C64>, u: f64) -> bool {
        match &self.kind {
            StepperKind::Dense { prop, b } => {
                let w = b.dot(psi);
                let p = self.dt * w.iter().map(|z| z.norm_sqr()).sum::<f64>();
                if u < p {
                    let wn = (p / self.dt).sqrt();
                    *psi = w.mapv(|z| z / wn);
                    true
                } else {
                    *psi = prop.dot(psi);
                    let nn: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    psi.mapv_inplace(|z| z / nn);
                    false
                }
            }
            StepperKind::Diagonal { prop, b, rate } => {
                let p = self.dt
                    * psi
                        .iter()
                        .zip(rate.iter())
                        .map(|(c, r)| r * c.norm_sqr())
                        .sum::<f64>();
                if u < p {
                    let wn = (p / self.dt).sqrt();
                    for (c, bi) in psi.iter_mut().zip(b.iter()) {
                        *c *= bi / wn;
                    }
                    true
                } else {
                    let mut nn = 0.0;
                    for (c, pi) in psi.iter_mut().zip(prop.iter()) {
                        *c *= pi;
                        nn += c.norm_sqr();
                    }
                    let nn = nn.sqrt();
                    psi.mapv_inplace(|z| z / nn);
                    false
                }
            }
        }
    }
}

/// Run one trajectory of `channel` from the normalized state `psi0`.
/// Deterministic given `seed` (counter-based generator, one uniform drawn
/// per step).
pub fn run_channel_trajectory(
    channel: &JumpChannel,
    psi0: &Array1<C64>,
    t_max: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let dim = psi0.len();
    if channel.h.nrows() != dim || channel.b.nrows() != dim {
        return Err(Error::ShapeMismatch("state and channel dimensions differ".into()));
    }
    let nrm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (nrm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("initial state norm {nrm} is not 1")));
    }
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidParameter("t_max and dt must be positive".into()));
    }
    let stepper = Stepper::new(channel, dt)?;
    let steps = (t_max / dt).ceil() as usize;
    let stride = (steps / SAMPLE_TARGET).max(1);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut psi = psi0.clone();
    let mut jump_times = Vec::new();
    let mut sample_times = Vec::with_capacity(steps / stride + 2);
    let mut sampled_states = Vec::with_capacity(steps / stride + 2);
    sample_times.push(0.0);
    sampled_states.push(psi.clone());
    for k in 0..steps {
        let u: f64 = rng.gen();
        if stepper.step(&mut psi, u) {
            jump_times.push(k as f64 * dt);
        }
        if (k + 1) % stride == 0 || k + 1 == steps {
            sample_times.push(((k + 1) as f64 * dt).min(t_max));
            sampled_states.push(psi.clone());
        }
    }
    Ok(TrajectoryRecord {
        seed,
        n_jumps: jump_times.len(),
        jump_times,
        sample_times,
        sampled_states,
    })
}

/// The model's unraveling from the spec'd physical channel.
pub fn run_trajectory(
    params: &ModelParams,
    psi0: &Array1<C64>,
    t_max: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    run_channel_trajectory(&physical_channel(params), psi0, t_max, dt, seed)
}

/// Independent trajectories with seeds base_seed, base_seed+1, ...; the
/// result order is by index, independent of scheduling.
pub fn run_ensemble(
    channel: &JumpChannel,
    psi0: &Array1<C64>,
    t_max: f64,
    dt: f64,
    base_seed: u64,
    n_traj: usize,
) -> Result<Vec<TrajectoryRecord>> {
    (0..n_traj)
        .into_par_iter()
        .map(|i| run_channel_trajectory(channel, psi0, t_max, dt, base_seed + i as u64))
        .collect()
}

/// Ensemble-averaged density matrix at sample index `k` (states must share
/// the sample grid, which `run_ensemble` guarantees).
pub fn ensemble_mean_density(records: &[TrajectoryRecord], k: usize) -> Operator {
    let dim = records[0].sampled_states[k].len();
    let mut rho = Operator::zeros((dim, dim));
    for rec in records {
        let psi = &rec.sampled_states[k];
        for r in 0..dim {
            for c in 0..dim {
                rho[[r, c]] += psi[r] * psi[c].conj();
            }
        }
    }
    rho.mapv(|z| z / records.len() as f64)
}

#[derive(Clone, Copy, Debug)]
pub struct FreezeOpts {
    /// Occupation a sector must exceed to count as selected.
    pub threshold: f64,
    /// Time the selection must persist before it is called a freeze.
    pub confirm_window: f64,
}

impl Default for FreezeOpts {
    fn default() -> Self {
        FreezeOpts { threshold: 0.99, confirm_window: 10.0 }
    }
}

/// Sector occupations along one trajectory and the detected freeze, if any.
pub struct FreezingReport {
    pub sample_times: Vec<f64>,
    /// [sample, sector] occupations |<m|psi>|^2; rows sum to 1.
    pub occupations: Array2<f64>,
    /// Index of the frozen sector (position in the basis columns).
    pub selected: Option<usize>,
    /// First sample time from which the selection held through the
    /// confirmation window.
    pub freeze_time: Option<f64>,
}

/// Decompose the sampled states over the columns of `basis` (pass the
/// identity when the trajectory already lives in the sector basis) and
/// detect sector selection.
pub fn freezing_report(
    record: &TrajectoryRecord,
    basis: &Operator,
    opts: &FreezeOpts,
) -> FreezingReport {
    let ns = record.sample_times.len();
    let dim = basis.ncols();
    let mut occ = Array2::<f64>::zeros((ns, dim));
    for (k, psi) in record.sampled_states.iter().enumerate() {
        for m in 0..dim {
            let amp: C64 = basis.column(m).iter().zip(psi.iter()).map(|(b, p)| b.conj() * p).sum();
            occ[[k, m]] = amp.norm_sqr();
        }
    }
    let winner = |k: usize| -> (usize, f64) {
        let row = occ.row(k);
        let mut best = (0, row[0]);
        for m in 1..dim {
            if row[m] > best.1 {
                best = (m, row[m]);
            }
        }
        best
    };
    let t_end = *record.sample_times.last().unwrap_or(&0.0);
    let mut selected = None;
    let mut freeze_time = None;
    for k in 0..ns {
        let (m0, p0) = winner(k);
        if p0 <= opts.threshold {
            continue;
        }
        let horizon = (record.sample_times[k] + opts.confirm_window).min(t_end);
        let confirmed = (k..ns)
            .take_while(|&k2| record.sample_times[k2] <= horizon)
            .all(|k2| {
                let (m2, p2) = winner(k2);
                m2 == m0 && p2 > opts.threshold
            });
        if confirmed {
            selected = Some(m0);
            freeze_time = Some(record.sample_times[k]);
            break;
        }
    }
    FreezingReport { sample_times: record.sample_times.clone(), occupations: occ, selected, freeze_time }
}

/// Sector distribution after time t and n jumps under the canonical
/// symmetry channel: p(m) proportional to
/// exp(-Gamma m^2 t / J) |m|^(2n) |c_m(0)|^2, with m = -J..J indexed by
/// position in `c0`. Exact per trajectory: the diagonal evolution makes the
/// state depend on (t, n) only.
pub fn analytic_freezing_pmf(
    c0: &Array1<C64>,
    t: f64,
    n: usize,
    params: &ModelParams,
) -> Result<Array1<f64>> {
    let dim = params.dim();
    if c0.len() != dim {
        return Err(Error::ShapeMismatch(format!(
            "amplitude vector length {} does not match N+1 = {dim}",
            c0.len()
        )));
    }
    let total: f64 = c0.iter().map(|z| z.norm_sqr()).sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("weights sum to {total}, expected 1")));
    }
    let j = params.j();
    let rate = params.gamma / j;
    // log-domain weights to survive large t or n
    let mut logs = vec![f64::NEG_INFINITY; dim];
    for (i, c) in c0.iter().enumerate() {
        let m = i as f64 - j;
        let w = c.norm_sqr();
        if w == 0.0 || (n > 0 && m == 0.0) {
            continue;
        }
        let lm = if n > 0 { 2.0 * n as f64 * m.abs().ln() } else { 0.0 };
        logs[i] = w.ln() + lm - rate * m * m * t;
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(
            "every sector has zero weight (no support compatible with the jump count)".into(),
        ));
    }
    let mut p = Array1::<f64>::zeros(dim);
    for i in 0..dim {
        if logs[i] > f64::NEG_INFINITY {
            p[i] = (logs[i] - peak).exp();
        }
    }
    let z: f64 = p.sum();
    Ok(p.mapv(|v| v / z))
}

/// Convenience: the S_x eigenbasis paired with its sector values, for
/// reporting physical-channel trajectories.
pub fn symmetry_sector_basis(n_spins: usize) -> Result<(Array1<f64>, Operator)> {
    sx_eigenbasis(n_spins)
}
