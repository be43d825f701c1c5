//! Monte-Carlo sweeps over one parameter with common random numbers.
//!
//! Trial `k` always draws its trace from the same random stream, so every
//! grid point and both cooperation arms see identical channels and arrivals.
//! Channel power gains are exponential with mean equal to the configured
//! variance of the underlying Rayleigh amplitude.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SlotData, SystemParams, Trace};
use crate::multi_slot::{solve_multi_slot, SubgradientConfig};
use crate::single_slot::{solve_no_cooperation, solve_single_slot, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    pub var_pp: f64,
    pub var_ps: f64,
    pub var_ss: f64,
    pub var_sp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    WeakPtSr,
    WeakStPr,
    Equal,
    StrongDirect,
    StrongInterference,
}

impl ChannelModel {
    pub fn new(var_pp: f64, var_ps: f64, var_ss: f64, var_sp: f64) -> Result<Self> {
        let model = Self { var_pp, var_ps, var_ss, var_sp };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let vars = [self.var_pp, self.var_ps, self.var_ss, self.var_sp];
        if vars.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("channel variances {vars:?} must be positive")));
        }
        Ok(())
    }

    pub fn preset(regime: Regime) -> Self {
        let (strong, weak) = (1.0, 0.1);
        let (var_pp, var_ps, var_ss, var_sp) = match regime {
            Regime::WeakPtSr => (strong, weak, strong, strong),
            Regime::WeakStPr => (strong, strong, strong, weak),
            Regime::Equal => (weak, weak, weak, weak),
            Regime::StrongDirect => (strong, weak, strong, weak),
            Regime::StrongInterference => (weak, strong, weak, strong),
        };
        Self { var_pp, var_ps, var_ss, var_sp }
    }
}

/// Where the four gains come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GainSpec {
    Rayleigh(ChannelModel),
    /// The same gains in every slot of every trial.
    Fixed { h_pp: f64, h_ps: f64, h_ss: f64, h_sp: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergySpec {
    /// One entry per slot.
    Fixed { e_p: Vec<f64>, e_s: Vec<f64> },
    /// Independent uniform draws on `[lo, hi]` per slot and transmitter.
    Uniform { lo: f64, hi: f64 },
}

impl EnergySpec {
    pub fn validate(&self, n_slots: usize) -> Result<()> {
        match self {
            EnergySpec::Fixed { e_p, e_s } => {
                if e_p.len() != n_slots || e_s.len() != n_slots {
                    return Err(Error::Contract(format!(
                        "energy vectors need {n_slots} entries, got {} and {}",
                        e_p.len(),
                        e_s.len()
                    )));
                }
                if e_p.iter().chain(e_s).any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::Domain("energies must be finite and >= 0".into()));
                }
            }
            EnergySpec::Uniform { lo, hi } => {
                if !(*lo >= 0.0 && lo < hi && hi.is_finite()) {
                    return Err(Error::Domain(format!("uniform energy range [{lo}, {hi}] is invalid")));
                }
            }
        }
        Ok(())
    }
}

/// Random stream of trial `trial` under `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Draws, per slot, `h_pp, h_ps, h_ss, h_sp` and then any sampled energies.
pub fn sample_trace<R: Rng + ?Sized>(
    gains: &GainSpec,
    energy: &EnergySpec,
    n_slots: usize,
    rng: &mut R,
) -> Result<Trace> {
    energy.validate(n_slots)?;
    let exps = match gains {
        GainSpec::Rayleigh(m) => {
            m.validate()?;
            let exp = |var: f64| Exp::new(1.0 / var).map_err(|e| Error::Domain(e.to_string()));
            Some([exp(m.var_pp)?, exp(m.var_ps)?, exp(m.var_ss)?, exp(m.var_sp)?])
        }
        GainSpec::Fixed { .. } => None,
    };
    let mut slots = Vec::with_capacity(n_slots);
    for i in 0..n_slots {
        let h = match (&exps, gains) {
            (Some(e), _) => [e[0].sample(rng), e[1].sample(rng), e[2].sample(rng), e[3].sample(rng)],
            (None, GainSpec::Fixed { h_pp, h_ps, h_ss, h_sp }) => [*h_pp, *h_ps, *h_ss, *h_sp],
            (None, GainSpec::Rayleigh(_)) => unreachable!(),
        };
        let (e_p, e_s) = match energy {
            EnergySpec::Fixed { e_p, e_s } => (e_p[i], e_s[i]),
            EnergySpec::Uniform { lo, hi } => (rng.random_range(*lo..=*hi), rng.random_range(*lo..=*hi)),
        };
        slots.push(SlotData { h_pp: h[0], h_ps: h[1], h_ss: h[2], h_sp: h[3], e_p, e_s });
    }
    Trace::new(slots)
}

/// FNV-1a over the bit patterns of every trace entry.
pub fn trace_fingerprint(trace: &Trace) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for s in &trace.slots {
        for v in [s.h_pp, s.h_ps, s.h_ss, s.h_sp, s.e_p, s.e_s] {
            for b in v.to_bits().to_le_bytes() {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    hash
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    #[serde(rename = "b_p")]
    Bp,
    Alpha,
    #[serde(rename = "e_p")]
    Ep,
    #[serde(rename = "e_s")]
    Es,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Bp => "b_p",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Ep => "e_p",
            SweepAxis::Es => "e_s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cooperation {
    On,
    Off,
    Both,
}

impl Cooperation {
    fn arms(self) -> &'static [Arm] {
        match self {
            Cooperation::On => &[Arm::Coop],
            Cooperation::Off => &[Arm::NoCoop],
            Cooperation::Both => &[Arm::Coop, Arm::NoCoop],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Coop,
    NoCoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub params: SystemParams,
    pub gains: GainSpec,
    pub energy: EnergySpec,
    pub trials: usize,
    pub seed: u64,
    pub cooperation: Cooperation,
    /// Used when `params.n_slots > 1`; single-slot sweeps use the exact solver.
    #[serde(default)]
    pub solver: SubgradientConfig,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.energy.validate(self.params.n_slots)?;
        if let GainSpec::Rayleigh(m) = &self.gains {
            m.validate()?;
        }
        if self.trials == 0 {
            return Err(Error::Contract("trials must be >= 1".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::Contract("sweep grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| !(w[0] < w[1])) || self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("sweep grid must be finite and strictly increasing".into()));
        }
        if self.params.n_slots > 1 {
            self.solver.validate()?;
        }
        // Every grid point must yield valid parameters and energies.
        for &v in &self.grid {
            let mut params = self.params;
            match self.axis {
                SweepAxis::Bp => params.b_p = v,
                SweepAxis::Alpha => params.alpha = v,
                SweepAxis::Ep | SweepAxis::Es if v < 0.0 => {
                    return Err(Error::Domain(format!("energy grid value {v} is negative")));
                }
                SweepAxis::Ep | SweepAxis::Es => {}
            }
            params.validate()?;
        }
        Ok(())
    }
}

fn apply_axis(axis: SweepAxis, value: f64, params: &SystemParams, trace: &Trace) -> (SystemParams, Trace) {
    let mut params = *params;
    let mut trace = trace.clone();
    match axis {
        SweepAxis::Bp => params.b_p = value,
        SweepAxis::Alpha => params.alpha = value,
        SweepAxis::Ep => trace.slots.iter_mut().for_each(|s| s.e_p = value),
        SweepAxis::Es => trace.slots.iter_mut().for_each(|s| s.e_s = value),
    }
    (params, trace)
}

/// One solve: trial `trial` at grid point `point` in one arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: usize,
    pub arm: Arm,
    pub feasible: bool,
    pub su_bits: f64,
    pub transfer: f64,
    pub fingerprint: u64,
}

/// Means over the trials that were feasible in every requested arm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmStats {
    pub mean_su_bits: f64,
    /// Mean over trials of the total transfer across slots.
    pub mean_transfer_total: f64,
    /// Mean over trials of the transfer per slot.
    pub mean_transfer_per_slot: f64,
    /// Trials this arm alone could not make feasible.
    pub infeasible: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub coop: Option<ArmStats>,
    pub no_coop: Option<ArmStats>,
    /// Trials feasible in every requested arm; the means run over these.
    pub feasible: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Ordered by point, then trial, then arm.
    pub records: Vec<TrialRecord>,
}

fn solve_arm(
    config: &SweepConfig,
    params: &SystemParams,
    trace: &Trace,
    arm: Arm,
) -> Result<(bool, f64, f64)> {
    if params.n_slots == 1 {
        let slot = &trace.slots[0];
        let sol = match arm {
            Arm::Coop => solve_single_slot(params, slot)?,
            Arm::NoCoop => solve_no_cooperation(params, slot)?,
        };
        Ok((sol.mode != Mode::Infeasible, sol.su_bits, sol.delta_sp))
    } else {
        let solver = SubgradientConfig {
            freeze_transfer: arm == Arm::NoCoop,
            ..config.solver.clone()
        };
        let report = solve_multi_slot(params, trace, &solver)?;
        Ok((report.feasibility.is_feasible(), report.su_bits, report.policy.total_transfer()))
    }
}

/// Runs every (grid point, trial, arm) combination and aggregates per point.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let n = config.params.n_slots;
    let arms = config.cooperation.arms();

    let traces: Vec<Trace> = (0..config.trials)
        .into_par_iter()
        .map(|k| sample_trace(&config.gains, &config.energy, n, &mut trial_rng(config.seed, k as u64)))
        .collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize, Arm)> = (0..config.grid.len())
        .flat_map(|p| (0..config.trials).flat_map(move |k| arms.iter().map(move |a| (p, k, *a))))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .into_par_iter()
        .map(|(point, trial, arm)| {
            let value = config.grid[point];
            let (params, trace) = apply_axis(config.axis, value, &config.params, &traces[trial]);
            let (feasible, su_bits, transfer) = solve_arm(config, &params, &trace, arm).map_err(|e| {
                Error::InternalConsistency(format!(
                    "{e}; {} = {value}, trial {trial}, arm {arm:?}, params {params:?}, trace {trace:?}",
                    config.axis.name()
                ))
            })?;
            Ok(TrialRecord {
                point,
                trial,
                arm,
                feasible,
                su_bits,
                transfer,
                fingerprint: trace_fingerprint(&traces[trial]),
            })
        })
        .collect::<Result<_>>()?;

    let per_point = config.trials * arms.len();
    let rows = config
        .grid
        .iter()
        .enumerate()
        .map(|(p, &value)| {
            let recs = &records[p * per_point..(p + 1) * per_point];
            let trials: Vec<&[TrialRecord]> = recs.chunks(arms.len()).collect();
            let common: Vec<&&[TrialRecord]> = trials.iter().filter(|t| t.iter().all(|r| r.feasible)).collect();
            let stats = |arm: Arm| -> Option<ArmStats> {
                let idx = arms.iter().position(|a| *a == arm)?;
                let infeasible = trials.iter().filter(|t| !t[idx].feasible).count();
                let count = common.len();
                let mut s = ArmStats { infeasible, ..Default::default() };
                if count > 0 {
                    for t in &common {
                        s.mean_su_bits += t[idx].su_bits;
                        s.mean_transfer_total += t[idx].transfer;
                    }
                    s.mean_su_bits /= count as f64;
                    s.mean_transfer_total /= count as f64;
                    s.mean_transfer_per_slot = s.mean_transfer_total / n as f64;
                } else {
                    s.mean_su_bits = f64::NAN;
                    s.mean_transfer_total = f64::NAN;
                    s.mean_transfer_per_slot = f64::NAN;
                }
                Some(s)
            };
            SweepRow {
                value,
                coop: stats(Arm::Coop),
                no_coop: stats(Arm::NoCoop),
                feasible: common.len(),
                trials: config.trials,
            }
        })
        .collect();

    Ok(SweepResult { axis: config.axis, rows, records })
}
