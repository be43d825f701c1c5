//! Exact single-slot policies.
//!
//! With one slot the primary rate constraint is tight at the optimum, which
//! pins the primary power as an affine function of the secondary power. The
//! secondary objective then only grows with `p_s`, so the solution is the
//! largest `p_s` the two energy budgets allow. Without transfer that is the
//! no-cooperation closed form; with transfer both budgets become tight and
//! the policy solves a 3x3 linear system. The threshold `zeta` decides which
//! regime applies. The same problem, rewritten as a linear-fractional
//! program, is also solved by `lp_core` as an independent route.

use crate::error::{Error, Result};
use crate::lp_core::{charnes_cooper, recover_x, simplex_solve, LpStatus};
use crate::model::{pu_bits, single_slot_feasible, su_bits, SlotData, SystemParams};

/// Largest allowed gap, in bits, between the closed form and the LP route.
pub const CROSS_CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    NoCooperation,
    Cooperation,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleSlotSolution {
    pub p_p: f64,
    pub p_s: f64,
    pub delta_sp: f64,
    pub su_bits: f64,
    pub mode: Mode,
    /// Cooperation threshold; `None` when the primary target is zero or the
    /// secondary has no energy, in which case transfer is never useful.
    pub zeta: Option<f64>,
}

impl SingleSlotSolution {
    fn infeasible(zeta: Option<f64>) -> Self {
        Self {
            p_p: 0.0,
            p_s: 0.0,
            delta_sp: 0.0,
            su_bits: 0.0,
            mode: Mode::Infeasible,
            zeta,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.mode != Mode::Infeasible
    }
}

/// `max (c'x + a)/(d'x + b)` s.t. `A x <= beta`, with `x = [p_p, p_s, delta_sp]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LfpStandardForm {
    pub matrix_a: [[f64; 3]; 6],
    pub beta: [f64; 6],
    pub c: [f64; 3],
    pub d: [f64; 3],
    pub a_scalar: f64,
    pub b_scalar: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SingleSlotOptions {
    /// Re-solve through Charnes-Cooper + simplex and fail on disagreement.
    pub cross_check: bool,
}

impl Default for SingleSlotOptions {
    fn default() -> Self {
        Self {
            cross_check: cfg!(debug_assertions),
        }
    }
}

fn validated(params: &SystemParams, slot: &SlotData) -> Result<()> {
    params.validate()?;
    slot.validate()
}

pub fn build_lfp(params: &SystemParams, slot: &SlotData) -> LfpStandardForm {
    let omega = params.omega();
    let (e_p, e_s) = slot.effective_budgets(params.e_max);
    LfpStandardForm {
        matrix_a: [
            [-slot.h_pp, omega * slot.h_sp, 0.0],
            [1.0, 0.0, -params.alpha],
            [0.0, 1.0, 1.0],
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, -1.0],
        ],
        beta: [-omega * params.sigma2, e_p, e_s, 0.0, 0.0, 0.0],
        c: [0.0, 1.0, 0.0],
        d: [slot.h_ps, 0.0, 0.0],
        a_scalar: 0.0,
        b_scalar: params.sigma2,
        omega,
    }
}

/// `zeta = (h_pp E'_p - omega sigma^2) / (omega h_sp E'_s)`. Energy transfer
/// is optimal exactly when `zeta < 1`.
pub fn cooperation_threshold(params: &SystemParams, slot: &SlotData) -> Result<f64> {
    validated(params, slot)?;
    let omega = params.omega();
    let (e_p, e_s) = slot.effective_budgets(params.e_max);
    if omega <= 0.0 {
        return Err(Error::ThresholdUndefined("primary rate target is zero"));
    }
    if e_s <= 0.0 {
        return Err(Error::ThresholdUndefined("secondary energy budget is zero"));
    }
    let num = slot.h_pp * e_p - omega * params.sigma2;
    let den = omega * slot.h_sp * e_s;
    Ok(if den > 0.0 {
        num / den
    } else if num >= 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    })
}

fn threshold_or_none(params: &SystemParams, slot: &SlotData) -> Result<Option<f64>> {
    match cooperation_threshold(params, slot) {
        Ok(z) => Ok(Some(z)),
        Err(Error::ThresholdUndefined(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Optimal policy with `delta_sp = 0`.
pub fn solve_no_cooperation(params: &SystemParams, slot: &SlotData) -> Result<SingleSlotSolution> {
    let zeta = threshold_or_none(params, slot)?;
    let omega = params.omega();
    let sigma2 = params.sigma2;
    let (e_p, e_s) = slot.effective_budgets(params.e_max);

    let (p_p, p_s) = if omega <= 0.0 {
        (0.0, e_s)
    } else {
        if !(slot.h_pp * e_p / sigma2 >= omega) {
            return Ok(SingleSlotSolution::infeasible(zeta));
        }
        let headroom = e_p - omega * sigma2 / slot.h_pp;
        let p_s = if slot.h_sp > 0.0 {
            (slot.h_pp / (omega * slot.h_sp) * headroom).min(e_s).max(0.0)
        } else {
            e_s
        };
        let p_p = slot.h_sp / slot.h_pp * omega * p_s + omega * sigma2 / slot.h_pp;
        (p_p.min(e_p), p_s)
    };

    Ok(SingleSlotSolution {
        p_p,
        p_s,
        delta_sp: 0.0,
        su_bits: su_bits(slot, p_p, p_s, sigma2),
        mode: Mode::NoCooperation,
        zeta,
    })
}

/// Policy with the rate, secondary budget and primary budget all tight.
/// Requires `zeta < 1` and a feasible instance.
pub fn solve_cooperative_closed_form(
    params: &SystemParams,
    slot: &SlotData,
) -> Result<SingleSlotSolution> {
    let zeta = cooperation_threshold(params, slot)?;
    if !(zeta < 1.0) {
        return Err(Error::Contract(format!("cooperation needs zeta < 1, got {zeta}")));
    }
    if !single_slot_feasible(params, slot) {
        return Err(Error::Contract("primary target unreachable".into()));
    }
    let omega = params.omega();
    let sigma2 = params.sigma2;
    let (e_p, e_s) = slot.effective_budgets(params.e_max);

    let den = params.alpha * slot.h_pp + omega * slot.h_sp;
    let delta = (omega * slot.h_sp * e_s + omega * sigma2 - slot.h_pp * e_p) / den;
    let p_s = e_s - delta;
    let p_p = e_p + params.alpha * delta;

    // Rounding can leave a component a few ulps below zero.
    let slack = 1e-12 * (1.0 + e_p.max(e_s));
    if !(delta > -slack && p_s > -slack && p_p > -slack) {
        return Err(Error::Contract(format!(
            "cooperative system gave negative component: p_p={p_p}, p_s={p_s}, delta={delta}"
        )));
    }
    let (p_p, p_s, delta) = (p_p.max(0.0), p_s.max(0.0), delta.max(0.0));
    Ok(SingleSlotSolution {
        p_p,
        p_s,
        delta_sp: delta,
        su_bits: su_bits(slot, p_p, p_s, sigma2),
        mode: Mode::Cooperation,
        zeta: Some(zeta),
    })
}

/// Solution obtained through Charnes-Cooper and the simplex solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpRouteSolution {
    pub x: [f64; 3],
    pub su_bits: f64,
    pub lp_objective: f64,
}

/// Solves the single-slot problem as an LFP. `Ok(None)` means the LP is
/// infeasible.
pub fn solve_via_lp(params: &SystemParams, slot: &SlotData) -> Result<Option<LpRouteSolution>> {
    validated(params, slot)?;
    let lfp = build_lfp(params, slot);
    let lp = charnes_cooper(&lfp)?;
    let sol = simplex_solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let x = recover_x(&sol)?;
            Ok(Some(LpRouteSolution {
                x,
                su_bits: su_bits(slot, x[0], x[1], params.sigma2),
                lp_objective: sol.objective,
            }))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::InternalConsistency(
            "single-slot LP reported unbounded".into(),
        )),
    }
}

pub fn solve_single_slot(params: &SystemParams, slot: &SlotData) -> Result<SingleSlotSolution> {
    solve_single_slot_with(params, slot, &SingleSlotOptions::default())
}

/// Exact single-slot optimum: cooperative closed form when `zeta < 1`,
/// no-cooperation closed form otherwise.
pub fn solve_single_slot_with(
    params: &SystemParams,
    slot: &SlotData,
    opts: &SingleSlotOptions,
) -> Result<SingleSlotSolution> {
    validated(params, slot)?;
    let zeta = threshold_or_none(params, slot)?;
    if !single_slot_feasible(params, slot) {
        return Ok(SingleSlotSolution::infeasible(zeta));
    }
    let sol = match zeta {
        Some(z) if z < 1.0 => solve_cooperative_closed_form(params, slot)?,
        _ => solve_no_cooperation(params, slot)?,
    };

    if opts.cross_check {
        let lp = solve_via_lp(params, slot)?.ok_or_else(|| {
            Error::InternalConsistency(format!(
                "closed form feasible but LP infeasible: {params:?} {slot:?}"
            ))
        })?;
        if (lp.su_bits - sol.su_bits).abs() > CROSS_CHECK_TOL {
            return Err(Error::InternalConsistency(format!(
                "closed form {} bits vs LP {} bits: {params:?} {slot:?}",
                sol.su_bits, lp.su_bits
            )));
        }
    }
    Ok(sol)
}

/// Achieved primary rate of a single-slot solution.
pub fn achieved_pu_bits(params: &SystemParams, slot: &SlotData, sol: &SingleSlotSolution) -> f64 {
    pu_bits(slot, sol.p_p, sol.p_s, params.sigma2)
}
