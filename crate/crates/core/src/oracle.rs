//! Brute-force reference solvers and an independent constraint checker.
//!
//! Nothing here calls the single-slot or multi-slot solvers, and the
//! constraint checker shares no helpers with [`crate::model`].
//!
//! Along the primary power axis the scans stop at the first grid index that
//! meets every lower bound on `p_p` (rate target, battery overflow). SU bits
//! fall as `p_p` grows, so that index is the best one on its line and the
//! search stays exhaustive in effect.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::model::{FeasibilityReport, Policy, SlotData, SystemParams, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(points_per_axis: usize) -> Result<Self> {
        if points_per_axis < 2 {
            return Err(Error::Contract("a grid needs at least 2 points per axis".into()));
        }
        Ok(Self { points_per_axis })
    }
}

/// Result of a grid scan.
///
/// `strict` meets every constraint exactly at a grid point. `relaxed` only
/// needs the rate target one primary-power step further up, so it may sit a
/// little outside the feasible set; `error_bound` caps how far any grid
/// incumbent can be from the continuous optimum in SU bits.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub strict: Option<(Policy, f64)>,
    pub relaxed: Option<(Policy, f64)>,
    pub error_bound: f64,
    pub points_per_axis: usize,
}

impl GridOutcome {
    pub fn best_bits(&self) -> Option<f64> {
        self.strict.as_ref().map(|(_, b)| *b)
    }
}

fn axis(hi: f64, points: usize) -> (Vec<f64>, f64) {
    let step = hi / (points - 1) as f64;
    ((0..points).map(|k| k as f64 * step).collect(), step)
}

fn su(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> f64 {
    (1.0 + slot.h_ss * p_s / (sigma2 + slot.h_ps * p_p)).log2()
}

fn pu(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> f64 {
    (1.0 + slot.h_pp * p_p / (sigma2 + slot.h_sp * p_s)).log2()
}

/// Smallest `k` in `[lo, n]` with `ok(k)`, for `ok` monotone in `k`; `n`
/// when none qualifies.
fn first_index(lo: usize, n: usize, ok: impl Fn(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (lo, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Smallest grid index at or above `bound`, tolerating rounding.
fn index_at_least(bound: f64, step: f64) -> usize {
    if bound <= 0.0 {
        0
    } else {
        ((bound / step) - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Incumbent {
    bits: f64,
    /// Grid indices, compared lexicographically to break ties.
    key: [usize; 6],
}

fn better(a: Option<Incumbent>, b: Option<Incumbent>) -> Option<Incumbent> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            if y.bits > x.bits || (y.bits == x.bits && y.key < x.key) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

fn slope_bound(slot: &SlotData, step_pp: f64, step_ps: f64, sigma2: f64) -> f64 {
    (step_pp * slot.h_ps + step_ps * slot.h_ss) / (sigma2 * LN_2)
}

/// Scans `(p_p, p_s, delta)` over `[0, E'_p + alpha E'_s] x [0, E'_s]^2` under
/// the single-slot constraints with clipped budgets.
pub fn grid_search_n1(params: &SystemParams, slot: &SlotData, grid: GridSpec) -> Result<GridOutcome> {
    params.validate()?;
    slot.validate()?;
    if params.n_slots != 1 {
        return Err(Error::Contract("grid_search_n1 needs n_slots = 1".into()));
    }
    let g = GridSpec::new(grid.points_per_axis)?.points_per_axis;
    let sigma2 = params.sigma2;
    let b_p = params.b_p;
    let e_p = slot.e_p.min(params.e_max);
    let e_s = slot.e_s.min(params.e_max);
    let (pp_axis, step_pp) = axis(e_p + params.alpha * e_s, g);
    let (ps_axis, step_ps) = axis(e_s, g);
    let slack = 1e-12 * (1.0 + e_p + e_s);

    let scan = |i_s: usize| -> (Option<Incumbent>, Option<Incumbent>) {
        let p_s = ps_axis[i_s];
        let rate_ok = |k: usize| pu(slot, pp_axis[k], p_s, sigma2) >= b_p;
        let shifted_ok = |k: usize| pu(slot, pp_axis[k] + step_pp, p_s, sigma2) >= b_p;
        let k_strict = first_index(0, g, rate_ok);
        let k_relaxed = first_index(0, g, shifted_ok);
        let (mut strict, mut relaxed) = (None, None);
        for (i_d, &delta) in ps_axis.iter().enumerate() {
            if p_s + delta > e_s + slack {
                break;
            }
            let cap = e_p + params.alpha * delta + slack;
            for (k, into) in [(k_strict, &mut strict), (k_relaxed, &mut relaxed)] {
                if k < g && pp_axis[k] <= cap {
                    let cand = Incumbent {
                        bits: su(slot, pp_axis[k], p_s, sigma2),
                        key: [k, i_s, i_d, 0, 0, 0],
                    };
                    *into = better(*into, Some(cand));
                }
            }
        }
        (strict, relaxed)
    };

    let (strict, relaxed) = (0..g)
        .into_par_iter()
        .map(scan)
        .reduce(|| (None, None), |a, b| (better(a.0, b.0), better(a.1, b.1)));
    let to_policy = |inc: Incumbent| {
        let [k, i_s, i_d, ..] = inc.key;
        (Policy { p_p: vec![pp_axis[k]], p_s: vec![ps_axis[i_s]], delta_sp: vec![ps_axis[i_d]] }, inc.bits)
    };
    Ok(GridOutcome {
        strict: strict.map(to_policy),
        relaxed: relaxed.map(to_policy),
        error_bound: slope_bound(slot, step_pp, step_ps, sigma2),
        points_per_axis: g,
    })
}

/// Scans all six decisions of a two-slot horizon under the prefix causality
/// and overflow constraints, pruning first-slot choices that already break a
/// prefix constraint.
pub fn grid_search_n2(params: &SystemParams, trace: &Trace, grid: GridSpec) -> Result<GridOutcome> {
    params.validate()?;
    trace.check_against(params)?;
    if params.n_slots != 2 {
        return Err(Error::Contract("grid_search_n2 needs n_slots = 2".into()));
    }
    let g = GridSpec::new(grid.points_per_axis)?.points_per_axis;
    let (s1, s2) = (&trace.slots[0], &trace.slots[1]);
    let (sigma2, alpha, e_max, b_p) = (params.sigma2, params.alpha, params.e_max, params.b_p);

    // A slot can consume at most what is stored from earlier slots (never
    // above the battery) plus its own arrival.
    let st_hi = [s1.e_s, s1.e_s.min(e_max) + s2.e_s];
    let pt_hi = [
        s1.e_p + alpha * st_hi[0],
        (s1.e_p + alpha * st_hi[0]).min(e_max) + s2.e_p + alpha * st_hi[1],
    ];
    let (ps1, step_ps1) = axis(st_hi[0], g);
    let (ps2, step_ps2) = axis(st_hi[1], g);
    let (pp1, step_pp1) = axis(pt_hi[0], g);
    let (pp2, step_pp2) = axis(pt_hi[1], g);
    let slack = 1e-12 * (1.0 + st_hi[1] + pt_hi[1]);

    let scan = |i_s1: usize| -> (Option<Incumbent>, Option<Incumbent>) {
        let (mut strict, mut relaxed) = (None, None);
        let p_s1 = ps1[i_s1];
        for (i_d1, &d1) in ps1.iter().enumerate() {
            let st1 = s1.e_s - p_s1 - d1;
            if st1 < -slack {
                break;
            }
            if st1 > e_max + slack {
                continue;
            }
            for (i_p1, &p_p1) in pp1.iter().enumerate() {
                let pt1 = s1.e_p + alpha * d1 - p_p1;
                if pt1 < -slack {
                    break;
                }
                if pt1 > e_max + slack {
                    continue;
                }
                let su1 = su(s1, p_p1, p_s1, sigma2);
                let pu1 = pu(s1, p_p1, p_s1, sigma2);
                for (i_s2, &p_s2) in ps2.iter().enumerate() {
                    let rate_ok = |k: usize| pu1 + pu(s2, pp2[k], p_s2, sigma2) >= b_p;
                    let shifted_ok =
                        |k: usize| pu1 + pu(s2, pp2[k] + step_pp2, p_s2, sigma2) >= b_p;
                    let k_rate = first_index(0, g, rate_ok);
                    let k_shift = first_index(0, g, shifted_ok);
                    let su2_base = |k: usize| su(s2, pp2[k], p_s2, sigma2);
                    for (i_d2, &d2) in ps2.iter().enumerate() {
                        let st2 = st1 + s2.e_s - p_s2 - d2;
                        if st2 < -slack {
                            break;
                        }
                        if st2 > e_max + slack {
                            continue;
                        }
                        let pt_avail = pt1 + s2.e_p + alpha * d2;
                        let k_full = index_at_least(pt_avail - e_max, step_pp2);
                        for (k, into) in
                            [(k_rate.max(k_full), &mut strict), (k_shift.max(k_full), &mut relaxed)]
                        {
                            if k < g && pp2[k] <= pt_avail + slack {
                                let cand = Incumbent {
                                    bits: su1 + su2_base(k),
                                    key: [i_p1, i_s1, i_d1, k, i_s2, i_d2],
                                };
                                *into = better(*into, Some(cand));
                            }
                        }
                    }
                }
            }
        }
        (strict, relaxed)
    };

    let (strict, relaxed) = (0..g)
        .into_par_iter()
        .map(scan)
        .reduce(|| (None, None), |a, b| (better(a.0, b.0), better(a.1, b.1)));
    let to_policy = |inc: Incumbent| {
        let [i_p1, i_s1, i_d1, i_p2, i_s2, i_d2] = inc.key;
        (
            Policy {
                p_p: vec![pp1[i_p1], pp2[i_p2]],
                p_s: vec![ps1[i_s1], ps2[i_s2]],
                delta_sp: vec![ps1[i_d1], ps2[i_d2]],
            },
            inc.bits,
        )
    };
    Ok(GridOutcome {
        strict: strict.map(to_policy),
        relaxed: relaxed.map(to_policy),
        error_bound: slope_bound(s1, step_pp1, step_ps1, sigma2)
            + slope_bound(s2, step_pp2, step_ps2, sigma2),
        points_per_axis: g,
    })
}

/// Re-evaluates every constraint from scratch: battery levels are summed
/// directly for each prefix rather than accumulated.
pub fn independent_constraint_check(
    params: &SystemParams,
    trace: &Trace,
    policy: &Policy,
    tol: f64,
) -> Result<FeasibilityReport> {
    let n = trace.slots.len();
    if [policy.p_p.len(), policy.p_s.len(), policy.delta_sp.len()] != [n, n, n] {
        return Err(Error::Contract("policy and trace lengths disagree".into()));
    }
    let worst = |vals: &mut dyn Iterator<Item = f64>| vals.fold(0.0f64, f64::max);
    let level = |j: usize, st: bool| -> f64 {
        (0..=j)
            .map(|i| {
                let s = &trace.slots[i];
                if st {
                    s.e_s - policy.p_s[i] - policy.delta_sp[i]
                } else {
                    s.e_p + params.alpha * policy.delta_sp[i] - policy.p_p[i]
                }
            })
            .sum()
    };
    let st: Vec<f64> = (0..n).map(|j| level(j, true)).collect();
    let pt: Vec<f64> = (0..n).map(|j| level(j, false)).collect();

    let st_causality = worst(&mut st.iter().map(|b| -b));
    let st_overflow = worst(&mut st.iter().map(|b| b - params.e_max));
    let pt_causality = worst(&mut pt.iter().map(|b| -b));
    let pt_overflow = worst(&mut pt.iter().map(|b| b - params.e_max));
    let negative = worst(
        &mut policy.p_p.iter().chain(&policy.p_s).chain(&policy.delta_sp).map(|v| -v),
    );
    let pu_total: f64 = (0..n)
        .map(|i| pu(&trace.slots[i], policy.p_p[i], policy.p_s[i], params.sigma2))
        .sum();

    Ok(FeasibilityReport {
        pu_rate_ok: pu_total >= params.b_p - tol,
        pu_sum_rate: pu_total,
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
