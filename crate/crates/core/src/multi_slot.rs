//! Projected primal-dual subgradient method for the N-slot problem.
//!
//! The N-slot problem is not convex, so the method returns a stationary
//! point of the Lagrangian rather than a certified optimum. Each iteration
//! takes a projected descent step on the powers and transfers and a
//! projected ascent step on the multipliers, both evaluated at the current
//! iterate. A deterministic repair pass afterwards restores energy causality,
//! which the dual method does not guarantee.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{
    check_feasibility, pu_bits, pu_sum_rate, su_bits, su_sum_rate, FeasibilityReport, Policy,
    SystemParams, Trace, DEFAULT_TOL,
};

/// Multipliers of the rate constraint (`mu`) and of the four prefix energy
/// constraint families, one entry per prefix length.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub mu: f64,
    /// ST causality
    pub lambda: Vec<f64>,
    /// ST overflow
    pub nu: Vec<f64>,
    /// PT causality
    pub gamma: Vec<f64>,
    /// PT overflow
    pub theta: Vec<f64>,
}

impl DualState {
    pub fn zeros(n: usize) -> Self {
        Self {
            mu: 0.0,
            lambda: vec![0.0; n],
            nu: vec![0.0; n],
            gamma: vec![0.0; n],
            theta: vec![0.0; n],
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.mu >= 0.0
            && self
                .lambda
                .iter()
                .chain(&self.nu)
                .chain(&self.gamma)
                .chain(&self.theta)
                .all(|v| *v >= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    Fixed,
    /// `step / sqrt(iter + 1)`
    Diminishing,
}

/// Which variables enter the L-infinity change compared against `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopNorm {
    Primal,
    PrimalDual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    Zero,
    /// Uniform split of each transmitter's total harvest, no transfer.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubgradientConfig {
    pub step_power: f64,
    pub step_transfer: f64,
    pub step_mu: f64,
    pub step_lambda: f64,
    pub step_nu: f64,
    pub step_gamma: f64,
    pub step_theta: f64,
    /// Stop once the largest change in one iteration is at most this.
    pub epsilon: f64,
    pub stop_norm: StopNorm,
    pub max_iters: usize,
    /// Keep the `1/ln 2` factor that differentiating `log2` produces.
    pub log_base_correction: bool,
    pub schedule: StepSchedule,
    pub init: Initialization,
    /// Pin every transfer at zero (the no-cooperation arm).
    pub freeze_transfer: bool,
    /// Record one log entry every this many iterations (the last iteration
    /// is always recorded).
    pub log_stride: usize,
    /// Repair the iterate every this many iterations and keep the best
    /// feasible result. Zero disables tracking.
    pub track_best_every: usize,
    /// Also restart once per slot with the PT's harvest concentrated in that
    /// slot. The rate terms are not jointly concave, and which slots carry
    /// the PT's power is where distinct local optima usually differ.
    pub primary_restarts: bool,
}

impl Default for SubgradientConfig {
    fn default() -> Self {
        Self {
            step_power: 1e-2,
            step_transfer: 1e-2,
            step_mu: 1e-1,
            step_lambda: 1e-1,
            step_nu: 1e-1,
            step_gamma: 1e-1,
            step_theta: 1e-1,
            epsilon: 1e-7,
            stop_norm: StopNorm::PrimalDual,
            max_iters: 200_000,
            log_base_correction: true,
            schedule: StepSchedule::Fixed,
            init: Initialization::Zero,
            freeze_transfer: false,
            log_stride: 1,
            track_best_every: 100,
            primary_restarts: false,
        }
    }
}

impl SubgradientConfig {
    pub fn validate(&self) -> Result<()> {
        let steps = [
            self.step_power,
            self.step_transfer,
            self.step_mu,
            self.step_lambda,
            self.step_nu,
            self.step_gamma,
            self.step_theta,
        ];
        if steps.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::Contract("step sizes must be positive and finite".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Contract("epsilon must be positive".into()));
        }
        if self.max_iters == 0 || self.log_stride == 0 {
            return Err(Error::Contract("max_iters and log_stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// L-infinity norm of the primal change in this iteration.
    pub delta_norm: f64,
    pub lagrangian: f64,
    /// `PU sum rate - B_p` at the new iterate.
    pub pu_slack: f64,
    pub worst_violation: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
}

/// Partial derivatives of the Lagrangian with respect to every primal and
/// dual variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub p_p: Vec<f64>,
    pub p_s: Vec<f64>,
    pub delta_sp: Vec<f64>,
    pub mu: f64,
    pub lambda: Vec<f64>,
    pub nu: Vec<f64>,
    pub gamma: Vec<f64>,
    pub theta: Vec<f64>,
}

fn check_dims(params: &SystemParams, trace: &Trace, policy: &Policy, duals: &DualState) -> Result<()> {
    let n = trace.len();
    let ok = policy.p_p.len() == n
        && policy.p_s.len() == n
        && policy.delta_sp.len() == n
        && duals.lambda.len() == n
        && duals.nu.len() == n
        && duals.gamma.len() == n
        && duals.theta.len() == n
        && params.n_slots == n;
    if ok {
        Ok(())
    } else {
        Err(Error::Contract("policy, duals and trace lengths disagree".into()))
    }
}

/// Prefix sums of (ST consumed - harvested, PT consumed - harvested).
fn prefix_net(params: &SystemParams, trace: &Trace, policy: &Policy) -> (Vec<f64>, Vec<f64>) {
    let mut st = Vec::with_capacity(trace.len());
    let mut pt = Vec::with_capacity(trace.len());
    let (mut acc_s, mut acc_p) = (0.0, 0.0);
    for (i, slot) in trace.slots.iter().enumerate() {
        acc_s += policy.p_s[i] + policy.delta_sp[i] - slot.e_s;
        acc_p += policy.p_p[i] - params.alpha * policy.delta_sp[i] - slot.e_p;
        st.push(acc_s);
        pt.push(acc_p);
    }
    (st, pt)
}

/// `L = -SU(X) + mu (B_p - PU(X)) + sum_j [lambda_j g_j + nu_j (-g_j - E_max)
///      + gamma_j h_j + theta_j (-h_j - E_max)]`, where `g_j`/`h_j` are the
/// ST/PT prefix consumption minus prefix harvest.
pub fn lagrangian(
    params: &SystemParams,
    trace: &Trace,
    policy: &Policy,
    duals: &DualState,
) -> Result<f64> {
    check_dims(params, trace, policy, duals)?;
    Ok(lagrangian_unchecked(params, trace, policy, duals))
}

fn lagrangian_unchecked(
    params: &SystemParams,
    trace: &Trace,
    policy: &Policy,
    duals: &DualState,
) -> f64 {
    let su = su_sum_rate(trace, policy, params.sigma2);
    let pu = pu_sum_rate(trace, policy, params.sigma2);
    let (st, pt) = prefix_net(params, trace, policy);
    let mut value = -su + duals.mu * (params.b_p - pu);
    for j in 0..trace.len() {
        value += duals.lambda[j] * st[j]
            + duals.nu[j] * (-st[j] - params.e_max)
            + duals.gamma[j] * pt[j]
            + duals.theta[j] * (-pt[j] - params.e_max);
    }
    value
}

pub fn gradients(
    params: &SystemParams,
    trace: &Trace,
    policy: &Policy,
    duals: &DualState,
    log_base_correction: bool,
) -> Result<Gradients> {
    check_dims(params, trace, policy, duals)?;
    Ok(gradients_unchecked(params, trace, policy, duals, log_base_correction))
}

fn gradients_unchecked(
    params: &SystemParams,
    trace: &Trace,
    policy: &Policy,
    duals: &DualState,
    log_base_correction: bool,
) -> Gradients {
    let n = trace.len();
    let sigma2 = params.sigma2;
    let alpha = params.alpha;
    let k = if log_base_correction { 1.0 / LN_2 } else { 1.0 };

    let mut g = Gradients {
        p_p: vec![0.0; n],
        p_s: vec![0.0; n],
        delta_sp: vec![0.0; n],
        mu: params.b_p,
        lambda: vec![0.0; n],
        nu: vec![0.0; n],
        gamma: vec![0.0; n],
        theta: vec![0.0; n],
    };

    // Suffix sums of the multipliers: slot i appears in every prefix j >= i.
    let (mut sl, mut sn, mut sg, mut st) = (0.0, 0.0, 0.0, 0.0);
    for i in (0..n).rev() {
        sl += duals.lambda[i];
        sn += duals.nu[i];
        sg += duals.gamma[i];
        st += duals.theta[i];

        let s = &trace.slots[i];
        let (p_p, p_s) = (policy.p_p[i], policy.p_s[i]);
        let su_den = sigma2 + s.h_ps * p_p;
        let pu_den = sigma2 + s.h_sp * p_s;

        g.p_p[i] = k * s.h_ss * s.h_ps * p_s / ((su_den + s.h_ss * p_s) * su_den) + sg
            - st
            - duals.mu * k * s.h_pp / (pu_den + s.h_pp * p_p);
        g.p_s[i] = -k * s.h_ss / (su_den + s.h_ss * p_s) + sl - sn
            + duals.mu * k * s.h_pp * s.h_sp * p_p / ((pu_den + s.h_pp * p_p) * pu_den);
        g.delta_sp[i] = sl + alpha * st - sn - alpha * sg;
    }

    let (st_net, pt_net) = prefix_net(params, trace, policy);
    for j in 0..n {
        g.lambda[j] = st_net[j];
        g.nu[j] = -st_net[j] - params.e_max;
        g.gamma[j] = pt_net[j];
        g.theta[j] = -pt_net[j] - params.e_max;
        g.mu -= pu_bits(&trace.slots[j], policy.p_p[j], policy.p_s[j], sigma2);
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientOutcome {
    /// Last iterate.
    pub policy: Policy,
    /// Running average with weight `2 / (k + 2)` on iterate `k`.
    pub averaged: Policy,
    /// Best repaired feasible iterate seen while tracking, with its SU bits.
    pub best: Option<(Policy, f64)>,
    pub duals: DualState,
    pub log: IterationLog,
    pub converged: bool,
    pub iterations: usize,
}

fn initial_policy(trace: &Trace, config: &SubgradientConfig) -> Policy {
    let n = trace.len();
    match config.init {
        Initialization::Zero => Policy::zeros(n),
        Initialization::Uniform => {
            let e_p: f64 = trace.slots.iter().map(|s| s.e_p).sum::<f64>() / n as f64;
            let e_s: f64 = trace.slots.iter().map(|s| s.e_s).sum::<f64>() / n as f64;
            Policy {
                p_p: vec![e_p; n],
                p_s: vec![e_s; n],
                delta_sp: vec![0.0; n],
            }
        }
    }
}

#[inline]
fn project_step(x: &mut f64, step: f64, grad: f64) -> f64 {
    let new = (*x - step * grad).max(0.0);
    let change = (new - *x).abs();
    *x = new;
    change
}

#[inline]
fn ascend(y: &mut f64, step: f64, grad: f64) -> f64 {
    let new = (*y + step * grad).max(0.0);
    let change = (new - *y).abs();
    *y = new;
    change
}

/// Runs the projected primal-dual iteration from `initial` (or from the
/// configured initialization) until one iteration changes the variables
/// selected by `stop_norm` by at most `epsilon` in the L-infinity norm, or
/// `max_iters` is reached.
///
/// With fixed steps the iteration can settle into a limit cycle instead of
/// a point, since the transfers enter the Lagrangian linearly. The running
/// average and the tracked best iterate are returned for that case.
pub fn solve_subgradient(
    params: &SystemParams,
    trace: &Trace,
    config: &SubgradientConfig,
    initial: Option<&Policy>,
) -> Result<SubgradientOutcome> {
    params.validate()?;
    config.validate()?;
    trace.check_against(params)?;
    let n = trace.len();

    let mut x = match initial {
        Some(p) => {
            if p.len() != n {
                return Err(Error::Contract("initial policy length differs from trace".into()));
            }
            Policy::new(p.p_p.clone(), p.p_s.clone(), p.delta_sp.clone())?
        }
        None => initial_policy(trace, config),
    };
    if config.freeze_transfer {
        x.delta_sp.iter_mut().for_each(|d| *d = 0.0);
    }
    let mut y = DualState::zeros(n);
    let mut log = IterationLog::default();
    let mut converged = false;
    let mut iterations = 0;

    let with_duals = config.stop_norm == StopNorm::PrimalDual;
    let mut avg = x.clone();
    let mut best: Option<(Policy, f64)> = None;
    for iter in 0..config.max_iters {
        let g = gradients_unchecked(params, trace, &x, &y, config.log_base_correction);
        let scale = match config.schedule {
            StepSchedule::Fixed => 1.0,
            StepSchedule::Diminishing => 1.0 / ((iter + 1) as f64).sqrt(),
        };

        let mut change: f64 = 0.0;
        for i in 0..n {
            change = change.max(project_step(&mut x.p_p[i], scale * config.step_power, g.p_p[i]));
            change = change.max(project_step(&mut x.p_s[i], scale * config.step_power, g.p_s[i]));
            if !config.freeze_transfer {
                change = change.max(project_step(
                    &mut x.delta_sp[i],
                    scale * config.step_transfer,
                    g.delta_sp[i],
                ));
            }
            let dual_change = ascend(&mut y.lambda[i], scale * config.step_lambda, g.lambda[i])
                .max(ascend(&mut y.nu[i], scale * config.step_nu, g.nu[i]))
                .max(ascend(&mut y.gamma[i], scale * config.step_gamma, g.gamma[i]))
                .max(ascend(&mut y.theta[i], scale * config.step_theta, g.theta[i]));
            if with_duals {
                change = change.max(dual_change);
            }
        }
        let mu_change = ascend(&mut y.mu, scale * config.step_mu, g.mu);
        if with_duals {
            change = change.max(mu_change);
        }
        iterations = iter + 1;
        converged = change <= config.epsilon;
        let w = 2.0 / (iter as f64 + 2.0);
        for i in 0..n {
            avg.p_p[i] += w * (x.p_p[i] - avg.p_p[i]);
            avg.p_s[i] += w * (x.p_s[i] - avg.p_s[i]);
            avg.delta_sp[i] += w * (x.delta_sp[i] - avg.delta_sp[i]);
        }
        if config.track_best_every > 0 && (iter + 1) % config.track_best_every == 0 {
            let (repaired, report) = repair_and_verify(params, trace, &x)?;
            if report.is_feasible() {
                let su = su_sum_rate(trace, &repaired, params.sigma2);
                if best.as_ref().is_none_or(|(_, b)| su > *b) {
                    best = Some((repaired, su));
                }
            }
        }

        if iter % config.log_stride == 0 || converged || iterations == config.max_iters {
            let report = check_feasibility(params, trace, &x, DEFAULT_TOL)?;
            log.records.push(IterationRecord {
                iter,
                delta_norm: change,
                lagrangian: lagrangian_unchecked(params, trace, &x, &y),
                pu_slack: report.pu_sum_rate - params.b_p,
                worst_violation: report.worst_energy_violation(),
            });
        }
        if converged {
            break;
        }
    }

    Ok(SubgradientOutcome {
        policy: x,
        averaged: avg,
        best,
        duals: y,
        log,
        converged,
        iterations,
    })
}

/// Repairs a policy so that it satisfies the energy constraints and, where
/// possible, the primary rate target.
///
/// Slots are swept in order. In each slot the secondary's transfer, then its
/// transmit power, are cut until its battery is non-negative, and any stored
/// energy above `E_max` is spent on secondary transmit power. The primary's
/// power is then cut or raised the same way, using the transfers that
/// survived. If the primary rate target is missed afterwards, unspent primary
/// energy is put to use first and the secondary powers are scaled down
/// second. Whatever still fails is flagged in the report.
pub fn repair_and_verify(
    params: &SystemParams,
    trace: &Trace,
    policy: &Policy,
) -> Result<(Policy, FeasibilityReport)> {
    params.validate()?;
    trace.check_against(params)?;
    if policy.len() != trace.len()
        || policy.p_s.len() != trace.len()
        || policy.delta_sp.len() != trace.len()
    {
        return Err(Error::Contract("policy length differs from trace".into()));
    }
    let initial = check_feasibility(params, trace, policy, DEFAULT_TOL)?;
    if initial.is_feasible() {
        return Ok((policy.clone(), initial));
    }

    let mut out = Policy {
        p_p: policy.p_p.iter().map(|v| v.max(0.0)).collect(),
        p_s: policy.p_s.iter().map(|v| v.max(0.0)).collect(),
        delta_sp: policy.delta_sp.iter().map(|v| v.max(0.0)).collect(),
    };
    sweep_energy(params, trace, &mut out);

    if pu_sum_rate(trace, &out, params.sigma2) < params.b_p {
        restore_primary_rate(params, trace, &mut out);
    }
    let report = check_feasibility(params, trace, &out, DEFAULT_TOL)?;
    Ok((out, report))
}

fn sweep_energy(params: &SystemParams, trace: &Trace, out: &mut Policy) {
    let mut st_stored = 0.0;
    let mut pt_stored = 0.0;
    for (i, slot) in trace.slots.iter().enumerate() {
        st_stored += slot.e_s;
        let mut deficit = out.p_s[i] + out.delta_sp[i] - st_stored;
        if deficit > 0.0 {
            let cut = deficit.min(out.delta_sp[i]);
            out.delta_sp[i] -= cut;
            deficit -= cut;
            out.p_s[i] = (out.p_s[i] - deficit).max(0.0);
        }
        st_stored = (st_stored - out.p_s[i] - out.delta_sp[i]).max(0.0);
        if st_stored > params.e_max {
            out.p_s[i] += st_stored - params.e_max;
            st_stored = params.e_max;
        }

        pt_stored += slot.e_p + params.alpha * out.delta_sp[i];
        if out.p_p[i] > pt_stored {
            out.p_p[i] = pt_stored;
        }
        pt_stored -= out.p_p[i];
        if pt_stored > params.e_max {
            out.p_p[i] += pt_stored - params.e_max;
            pt_stored = params.e_max;
        }
    }
}

/// Smallest `f` in `[0, 1]` with `rate(f) >= target`, for non-decreasing `rate`.
fn bisect_up(rate: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Extra consumption each slot can absorb without breaking any later prefix,
/// allocated greedily from the first slot. `net[i]` is harvest minus current
/// consumption in slot `i`.
fn greedy_headroom(net: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut stored: Vec<f64> = net
        .map(|v| {
            acc += v;
            acc.max(0.0)
        })
        .collect();
    let n = stored.len();
    let mut extra = vec![0.0; n];
    for i in 0..n {
        let headroom = stored[i..].iter().cloned().fold(f64::INFINITY, f64::min);
        extra[i] = headroom.max(0.0);
        for s in &mut stored[i..] {
            *s -= extra[i];
        }
    }
    extra
}

fn pt_headroom(params: &SystemParams, trace: &Trace, p: &Policy) -> Vec<f64> {
    greedy_headroom(
        trace
            .slots
            .iter()
            .enumerate()
            .map(|(i, s)| s.e_p + params.alpha * p.delta_sp[i] - p.p_p[i]),
    )
}

fn st_headroom(trace: &Trace, p: &Policy) -> Vec<f64> {
    greedy_headroom(
        trace
            .slots
            .iter()
            .enumerate()
            .map(|(i, s)| s.e_s - p.p_s[i] - p.delta_sp[i]),
    )
}

/// `base` with a fraction `g` of the primary's spare energy spent on power.
fn fill_primary(params: &SystemParams, trace: &Trace, base: &Policy, g: f64) -> Policy {
    let extra = pt_headroom(params, trace, base);
    let mut out = base.clone();
    for (p, e) in out.p_p.iter_mut().zip(extra) {
        *p += g * e;
    }
    out
}

/// Raises the primary rate to the target in three escalating stages, each
/// used only if the previous one falls short: spend the primary's unused
/// energy, transfer the secondary's unused energy, then move secondary
/// transmit power into transfer. The primary's spare energy is trimmed back
/// to the least amount that meets the target.
fn restore_primary_rate(params: &SystemParams, trace: &Trace, out: &mut Policy) {
    let sigma2 = params.sigma2;
    let target = params.b_p;
    let pu = |p: &Policy| pu_sum_rate(trace, p, sigma2);

    let mut base = out.clone();
    if pu(&fill_primary(params, trace, &base, 1.0)) < target {
        let spare = st_headroom(trace, &base);
        for (d, e) in base.delta_sp.iter_mut().zip(spare) {
            *d += e;
        }
        sweep_energy(params, trace, &mut base);
        if pu(&fill_primary(params, trace, &base, 1.0)) < target {
            let shifted = |b: f64| {
                let mut p = base.clone();
                for i in 0..p.len() {
                    let moved = b * p.p_s[i];
                    p.p_s[i] -= moved;
                    p.delta_sp[i] += moved;
                }
                sweep_energy(params, trace, &mut p);
                p
            };
            let b = bisect_up(|b| pu(&fill_primary(params, trace, &shifted(b), 1.0)), target);
            base = shifted(b);
        }
    }
    let g = bisect_up(|g| pu(&fill_primary(params, trace, &base, g)), target);
    *out = fill_primary(params, trace, &base, g);
}

/// Subgradient solve followed by repair of the last iterate, the average and
/// the tracked best iterate; the feasible candidate with the most SU bits wins.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSlotReport {
    pub raw: SubgradientOutcome,
    pub policy: Policy,
    pub feasibility: FeasibilityReport,
    pub su_bits: f64,
    pub pu_bits: f64,
}

pub fn solve_multi_slot(
    params: &SystemParams,
    trace: &Trace,
    config: &SubgradientConfig,
) -> Result<MultiSlotReport> {
    let mut starts = vec![None];
    if config.primary_restarts {
        starts.extend((0..trace.len()).map(|j| Some(primary_start(trace, config, j))));
    }
    let mut chosen: Option<MultiSlotReport> = None;
    for start in &starts {
        let report = repair_candidates(params, trace, solve_subgradient(params, trace, config, start.as_ref())?)?;
        if chosen.as_ref().is_none_or(|best| score(&report) > score(best)) {
            chosen = Some(report);
        }
    }
    Ok(chosen.expect("at least one start"))
}

// Feasible beats infeasible, then more SU bits; ties keep the earlier one.
fn score(r: &MultiSlotReport) -> (bool, f64) {
    (r.feasibility.is_feasible(), r.su_bits)
}

/// Start with every joule the PT has harvested by slot `j` spent in slot `j`.
fn primary_start(trace: &Trace, config: &SubgradientConfig, j: usize) -> Policy {
    let mut p = initial_policy(trace, config);
    p.p_p.iter_mut().for_each(|x| *x = 0.0);
    p.p_p[j] = trace.slots[..=j].iter().map(|s| s.e_p).sum();
    p
}

/// Repairs the last, averaged and best iterates and keeps the best.
fn repair_candidates(params: &SystemParams, trace: &Trace, raw: SubgradientOutcome) -> Result<MultiSlotReport> {
    let mut candidates = vec![&raw.policy, &raw.averaged];
    candidates.extend(raw.best.as_ref().map(|(p, _)| p));
    let mut chosen: Option<(Policy, FeasibilityReport, f64)> = None;
    for c in candidates {
        let (policy, feasibility) = repair_and_verify(params, trace, c)?;
        let su = su_sum_rate(trace, &policy, params.sigma2);
        let better = chosen
            .as_ref()
            .is_none_or(|(_, f, s)| (feasibility.is_feasible(), su) > (f.is_feasible(), *s));
        if better {
            chosen = Some((policy, feasibility, su));
        }
    }
    let (policy, feasibility, su_bits) = chosen.expect("at least one candidate");
    Ok(MultiSlotReport { su_bits, pu_bits: feasibility.pu_sum_rate, raw, policy, feasibility })
}

/// SU bits per slot of a policy, for reporting.
pub fn per_slot_su_bits(params: &SystemParams, trace: &Trace, policy: &Policy) -> Vec<f64> {
    trace
        .slots
        .iter()
        .enumerate()
        .map(|(i, s)| su_bits(s, policy.p_p[i], policy.p_s[i], params.sigma2))
        .collect()
}
