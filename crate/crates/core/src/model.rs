//! Domain types shared by every solver: system constants, per-slot channel
//! and energy data, transmit/transfer policies, the two Shannon rates and
//! the prefix energy constraints.
//!
//! Slots last one second, so a slot's transmit power in Watts and the energy
//! it consumes in Joules are the same number. Everything is stored per slot.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Default absolute tolerance for energies (J) and rates (bits).
pub const DEFAULT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Energy transfer efficiency from the secondary to the primary transmitter.
    pub alpha: f64,
    /// Battery capacity of each transmitter (J).
    pub e_max: f64,
    /// Receiver noise power.
    pub sigma2: f64,
    /// Primary sum-rate requirement over the horizon (bits).
    pub b_p: f64,
    pub n_slots: usize,
}

impl SystemParams {
    pub fn new(alpha: f64, e_max: f64, sigma2: f64, b_p: f64, n_slots: usize) -> Result<Self> {
        let params = Self {
            alpha,
            e_max,
            sigma2,
            b_p,
            n_slots,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Domain(format!("alpha = {} not in [0, 1]", self.alpha)));
        }
        if !(self.e_max > 0.0) || !self.e_max.is_finite() {
            return Err(Error::Domain(format!("e_max = {} must be positive", self.e_max)));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::Domain(format!("sigma2 = {} must be positive", self.sigma2)));
        }
        if !(self.b_p >= 0.0) || !self.b_p.is_finite() {
            return Err(Error::Domain(format!("b_p = {} must be non-negative", self.b_p)));
        }
        if self.n_slots == 0 {
            return Err(Error::Domain("n_slots must be at least 1".into()));
        }
        Ok(())
    }

    /// SINR the primary link must reach in a single slot, `2^B_p - 1`.
    pub fn omega(&self) -> f64 {
        (self.b_p * LN_2).exp_m1()
    }

    pub fn with_b_p(mut self, b_p: f64) -> Self {
        self.b_p = b_p;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Exogenous inputs for one slot: the four channel power gains and the two
/// harvested energy packets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotData {
    /// PT -> PR
    pub h_pp: f64,
    /// PT -> SR
    pub h_ps: f64,
    /// ST -> SR
    pub h_ss: f64,
    /// ST -> PR
    pub h_sp: f64,
    pub e_p: f64,
    pub e_s: f64,
}

impl SlotData {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("h_pp", self.h_pp),
            ("h_ps", self.h_ps),
            ("h_ss", self.h_ss),
            ("h_sp", self.h_sp),
            ("e_p", self.e_p),
            ("e_s", self.e_s),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Budgets clipped to the battery, `(min{E_p, E_max}, min{E_s, E_max})`.
    pub fn effective_budgets(&self, e_max: f64) -> (f64, f64) {
        (self.e_p.min(e_max), self.e_s.min(e_max))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub slots: Vec<SlotData>,
}

impl Trace {
    pub fn new(slots: Vec<SlotData>) -> Result<Self> {
        for s in &slots {
            s.validate()?;
        }
        Ok(Self { slots })
    }

    pub fn single(slot: SlotData) -> Self {
        Self { slots: vec![slot] }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Checks the trace against `params.n_slots`.
    pub fn check_against(&self, params: &SystemParams) -> Result<()> {
        if self.slots.len() != params.n_slots {
            return Err(Error::Contract(format!(
                "trace has {} slots, params expect {}",
                self.slots.len(),
                params.n_slots
            )));
        }
        Ok(())
    }
}

/// Per-slot decisions: primary power, secondary power, and the energy the
/// secondary transmitter hands to the primary at the start of the slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub p_p: Vec<f64>,
    pub p_s: Vec<f64>,
    pub delta_sp: Vec<f64>,
}

impl Policy {
    pub fn zeros(n: usize) -> Self {
        Self {
            p_p: vec![0.0; n],
            p_s: vec![0.0; n],
            delta_sp: vec![0.0; n],
        }
    }

    pub fn new(p_p: Vec<f64>, p_s: Vec<f64>, delta_sp: Vec<f64>) -> Result<Self> {
        if p_p.len() != p_s.len() || p_p.len() != delta_sp.len() {
            return Err(Error::Contract("policy vectors differ in length".into()));
        }
        for v in p_p.iter().chain(&p_s).chain(&delta_sp) {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::Domain(format!("policy entry {v} must be finite and >= 0")));
            }
        }
        Ok(Self { p_p, p_s, delta_sp })
    }

    pub fn len(&self) -> usize {
        self.p_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_p.is_empty()
    }

    pub fn total_transfer(&self) -> f64 {
        self.delta_sp.iter().sum()
    }

    fn check_shape(&self, trace: &Trace) -> Result<()> {
        if self.p_s.len() != self.p_p.len() || self.delta_sp.len() != self.p_p.len() {
            return Err(Error::Contract("policy vectors differ in length".into()));
        }
        if self.p_p.len() != trace.len() {
            return Err(Error::Contract(format!(
                "policy has {} slots, trace has {}",
                self.p_p.len(),
                trace.len()
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// SU rate without argument validation.
#[inline]
pub(crate) fn su_bits(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> f64 {
    log2_1p(slot.h_ss * p_s / (sigma2 + slot.h_ps * p_p))
}

/// PU rate without argument validation.
#[inline]
pub(crate) fn pu_bits(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> f64 {
    log2_1p(slot.h_pp * p_p / (sigma2 + slot.h_sp * p_s))
}

fn check_rate_args(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> Result<()> {
    slot.validate()?;
    if !p_p.is_finite() || p_p < 0.0 || !p_s.is_finite() || p_s < 0.0 {
        return Err(Error::Domain(format!("powers ({p_p}, {p_s}) must be finite and >= 0")));
    }
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::Domain(format!("sigma2 = {sigma2} must be positive")));
    }
    Ok(())
}

/// Secondary link rate in bits per slot, treating primary interference as noise.
pub fn su_rate(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> Result<f64> {
    check_rate_args(slot, p_p, p_s, sigma2)?;
    Ok(su_bits(slot, p_p, p_s, sigma2))
}

/// Primary link rate in bits per slot, treating secondary interference as noise.
pub fn pu_rate(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> Result<f64> {
    check_rate_args(slot, p_p, p_s, sigma2)?;
    Ok(pu_bits(slot, p_p, p_s, sigma2))
}

/// Total secondary bits of `policy` over `trace`.
pub fn su_sum_rate(trace: &Trace, policy: &Policy, sigma2: f64) -> f64 {
    trace
        .slots
        .iter()
        .enumerate()
        .map(|(i, s)| su_bits(s, policy.p_p[i], policy.p_s[i], sigma2))
        .sum()
}

/// Total primary bits of `policy` over `trace`.
pub fn pu_sum_rate(trace: &Trace, policy: &Policy, sigma2: f64) -> f64 {
    trace
        .slots
        .iter()
        .enumerate()
        .map(|(i, s)| pu_bits(s, policy.p_p[i], policy.p_s[i], sigma2))
        .sum()
}

/// Outcome of checking a policy against the rate and prefix energy constraints.
///
/// Violation magnitudes are the worst (largest) amount by which any prefix
/// breaks the corresponding inequality, clamped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub pu_rate_ok: bool,
    pub pu_sum_rate: f64,
    pub st_causality_ok: bool,
    pub st_causality_violation: f64,
    pub st_overflow_ok: bool,
    pub st_overflow_violation: f64,
    pub pt_causality_ok: bool,
    pub pt_causality_violation: f64,
    pub pt_overflow_ok: bool,
    pub pt_overflow_violation: f64,
    /// Most negative policy entry, as a positive magnitude.
    pub nonneg_ok: bool,
    pub nonneg_violation: f64,
    pub tol: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.pu_rate_ok
            && self.st_causality_ok
            && self.st_overflow_ok
            && self.pt_causality_ok
            && self.pt_overflow_ok
            && self.nonneg_ok
    }

    pub fn energy_feasible(&self) -> bool {
        self.st_causality_ok
            && self.st_overflow_ok
            && self.pt_causality_ok
            && self.pt_overflow_ok
            && self.nonneg_ok
    }

    /// Largest energy-constraint violation across all four families.
    pub fn worst_energy_violation(&self) -> f64 {
        self.st_causality_violation
            .max(self.st_overflow_violation)
            .max(self.pt_causality_violation)
            .max(self.pt_overflow_violation)
    }

    /// The same four flags and rate flag, for flag-by-flag comparison.
    pub fn flags(&self) -> [bool; 6] {
        [
            self.pu_rate_ok,
            self.st_causality_ok,
            self.st_overflow_ok,
            self.pt_causality_ok,
            self.pt_overflow_ok,
            self.nonneg_ok,
        ]
    }
}

/// Evaluates the primary sum-rate constraint and both transmitters' prefix
/// causality and overflow constraints.
pub fn check_feasibility(
    params: &SystemParams,
    trace: &Trace,
    policy: &Policy,
    tol: f64,
) -> Result<FeasibilityReport> {
    policy.check_shape(trace)?;

    let mut st_harvest = 0.0;
    let mut st_spent = 0.0;
    let mut pt_harvest = 0.0;
    let mut pt_spent = 0.0;
    let mut st_causality: f64 = 0.0;
    let mut st_overflow: f64 = 0.0;
    let mut pt_causality: f64 = 0.0;
    let mut pt_overflow: f64 = 0.0;
    let mut negative: f64 = 0.0;

    for (i, slot) in trace.slots.iter().enumerate() {
        let (p_p, p_s, delta) = (policy.p_p[i], policy.p_s[i], policy.delta_sp[i]);
        negative = negative.max(-p_p).max(-p_s).max(-delta);

        st_harvest += slot.e_s;
        st_spent += p_s + delta;
        pt_harvest += slot.e_p;
        pt_spent += p_p - params.alpha * delta;

        let st_stored = st_harvest - st_spent;
        let pt_stored = pt_harvest - pt_spent;
        st_causality = st_causality.max(-st_stored);
        st_overflow = st_overflow.max(st_stored - params.e_max);
        pt_causality = pt_causality.max(-pt_stored);
        pt_overflow = pt_overflow.max(pt_stored - params.e_max);
    }

    let pu = pu_sum_rate(trace, policy, params.sigma2);
    Ok(FeasibilityReport {
        pu_rate_ok: pu >= params.b_p - tol,
        pu_sum_rate: pu,
        st_causality_ok: st_causality <= tol,
        st_causality_violation: st_causality,
        st_overflow_ok: st_overflow <= tol,
        st_overflow_violation: st_overflow,
        pt_causality_ok: pt_causality <= tol,
        pt_causality_violation: pt_causality,
        pt_overflow_ok: pt_overflow <= tol,
        pt_overflow_violation: pt_overflow,
        nonneg_ok: negative <= tol,
        nonneg_violation: negative,
        tol,
    })
}

/// Whether the primary target is reachable in one slot: full transfer from
/// the secondary and a silent secondary transmitter maximize the primary SNR.
pub fn single_slot_feasible(params: &SystemParams, slot: &SlotData) -> bool {
    let (e_p, e_s) = slot.effective_budgets(params.e_max);
    slot.h_pp * (e_p + params.alpha * e_s) / params.sigma2 >= params.omega()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_slot(e_p: f64, e_s: f64) -> SlotData {
        SlotData {
            h_pp: 1.0,
            h_ps: 1.0,
            h_ss: 1.0,
            h_sp: 1.0,
            e_p,
            e_s,
        }
    }

    #[test]
    fn su_rate_zero_power() {
        assert_eq!(su_rate(&unit_slot(0.0, 0.0), 0.4, 0.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn rates_equal_one_bit_at_unit_sinr() {
        let s = unit_slot(0.0, 0.0);
        assert!((su_rate(&s, 0.3, 0.4, 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert!((pu_rate(&s, 0.4, 0.3, 0.1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pu_rate(&s, 0.0, 0.7, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn rate_domain_errors() {
        let s = unit_slot(0.0, 0.0);
        assert!(matches!(su_rate(&s, -1.0, 0.0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(pu_rate(&s, 0.0, f64::NAN, 0.1), Err(Error::Domain(_))));
        assert!(matches!(su_rate(&s, 0.0, 0.0, 0.0), Err(Error::Domain(_))));
        let bad = SlotData { h_ss: f64::INFINITY, ..s };
        assert!(su_rate(&bad, 0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(1.5, 1.0, 0.1, 1.0, 1).is_err());
        assert!(SystemParams::new(0.5, 0.0, 0.1, 1.0, 1).is_err());
        assert!(SystemParams::new(0.5, 1.0, 0.0, 1.0, 1).is_err());
        assert!(SystemParams::new(0.5, 1.0, 0.1, -1.0, 1).is_err());
        assert!(SystemParams::new(0.5, 1.0, 0.1, 1.0, 0).is_err());
        let p = SystemParams::new(0.5, 1.0, 0.1, 1.0, 1).unwrap();
        assert!((p.omega() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_policy_zero_target_feasible_unless_overflow() {
        let params = SystemParams::new(0.8, 6.0, 0.1, 0.0, 2).unwrap();
        let trace = Trace::new(vec![unit_slot(2.0, 3.0), unit_slot(3.0, 3.0)]).unwrap();
        let r = check_feasibility(&params, &trace, &Policy::zeros(2), DEFAULT_TOL).unwrap();
        assert!(r.is_feasible());

        let trace = Trace::new(vec![unit_slot(2.0, 4.0), unit_slot(3.0, 3.0)]).unwrap();
        let r = check_feasibility(&params, &trace, &Policy::zeros(2), DEFAULT_TOL).unwrap();
        assert!(!r.st_overflow_ok);
        assert!((r.st_overflow_violation - 1.0).abs() < 1e-12);
        assert!(r.pt_overflow_ok && r.st_causality_ok && r.pt_causality_ok && r.pu_rate_ok);
    }

    #[test]
    fn zero_policy_positive_target_fails_rate() {
        let params = SystemParams::new(0.8, 6.0, 0.1, 1.0, 1).unwrap();
        let trace = Trace::single(unit_slot(1.0, 1.0));
        let r = check_feasibility(&params, &trace, &Policy::zeros(1), DEFAULT_TOL).unwrap();
        assert!(!r.pu_rate_ok);
        assert_eq!(r.pu_sum_rate, 0.0);
    }

    #[test]
    fn transfer_counts_toward_primary_budget() {
        let params = SystemParams::new(0.5, 6.0, 0.1, 0.0, 1).unwrap();
        let trace = Trace::single(unit_slot(1.0, 2.0));
        // PT spends 1.5 J: 1 J harvested plus 0.5 * 1 J transferred.
        let policy = Policy::new(vec![1.5], vec![1.0], vec![1.0]).unwrap();
        let r = check_feasibility(&params, &trace, &policy, DEFAULT_TOL).unwrap();
        assert!(r.is_feasible(), "{r:?}");
        let policy = Policy::new(vec![1.6], vec![1.0], vec![1.0]).unwrap();
        let r = check_feasibility(&params, &trace, &policy, DEFAULT_TOL).unwrap();
        assert!(!r.pt_causality_ok);
        assert!((r.pt_causality_violation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_contract_error() {
        let params = SystemParams::new(0.5, 6.0, 0.1, 0.0, 2).unwrap();
        let trace = Trace::new(vec![unit_slot(1.0, 1.0); 2]).unwrap();
        assert!(matches!(
            check_feasibility(&params, &trace, &Policy::zeros(3), DEFAULT_TOL),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn single_slot_feasibility_cases() {
        let params = SystemParams::new(1.0, 6.0, 0.1, 0.0, 1).unwrap();
        assert!(single_slot_feasible(&params, &unit_slot(0.0, 0.0)));
        let params = params.with_b_p(1.0);
        assert!(!single_slot_feasible(&params, &unit_slot(0.0, 0.0)));
        assert!(!single_slot_feasible(&params, &unit_slot(0.05, 0.04)));
        assert!(single_slot_feasible(&params, &unit_slot(0.06, 0.05)));
    }

    #[test]
    fn effective_budgets_clip_to_battery() {
        assert_eq!(unit_slot(7.0, 2.0).effective_budgets(6.0), (6.0, 2.0));
    }
}
