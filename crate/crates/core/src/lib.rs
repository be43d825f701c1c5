//! Offline transmit-power and energy-transfer policies for a primary and a
//! secondary transmitter that both harvest energy and share spectrum in
//! underlay mode. The secondary may hand part of its harvest to the primary.
//!
//! * [`single_slot`]: exact closed-form policies and the cooperation threshold,
//!   cross-checked against an LP route through [`lp_core`].
//! * [`multi_slot`]: projected primal-dual subgradient method with a repair pass.
//! * [`oracle`]: brute-force grid searches and an independent constraint checker.
//! * [`experiments`]: seeded Monte-Carlo sweeps with common random numbers.

pub mod error;
pub mod experiments;
pub mod lp_core;
pub mod model;
pub mod multi_slot;
pub mod oracle;
pub mod single_slot;

pub use error::{Error, Result};
pub use model::{
    check_feasibility, pu_rate, pu_sum_rate, single_slot_feasible, su_rate, su_sum_rate,
    FeasibilityReport, Policy, SlotData, SystemParams, Trace, DEFAULT_TOL,
};
pub use multi_slot::{
    solve_multi_slot, solve_subgradient, DualState, MultiSlotReport, SubgradientConfig,
};
pub use single_slot::{solve_single_slot, Mode, SingleSlotSolution};
pub use experiments::{
    run_sweep, ChannelModel, Cooperation, EnergySpec, GainSpec, Regime, SweepAxis, SweepConfig,
    SweepResult,
};
pub use oracle::{grid_search_n1, grid_search_n2, independent_constraint_check, GridSpec};
