//! Benchmark fixtures shared by the criterion targets.

use ehcrn_core::{SlotData, SystemParams, Trace};

/// Cooperative single-slot instance with unit gains.
pub fn hand_instance() -> (SystemParams, SlotData) {
    let params = SystemParams::new(1.0, 6.0, 0.1, 1.0, 1).expect("valid parameters");
    let slot = SlotData { h_pp: 1.0, h_ps: 1.0, h_ss: 1.0, h_sp: 1.0, e_p: 0.6, e_s: 1.0 };
    (params, slot)
}

/// Four slots with the standard harvest profile and fixed gains.
pub fn four_slots() -> (SystemParams, Trace) {
    let harvest = [(2.0, 4.0), (3.0, 5.0), (2.0, 5.0), (2.0, 3.0)];
    let gains = [[0.12, 0.05, 0.3, 0.08], [0.07, 0.11, 0.2, 0.15], [0.2, 0.02, 0.09, 0.1], [0.05, 0.1, 0.25, 0.03]];
    let slots = harvest
        .iter()
        .zip(gains)
        .map(|(&(e_p, e_s), h)| SlotData { h_pp: h[0], h_ps: h[1], h_ss: h[2], h_sp: h[3], e_p, e_s })
        .collect();
    let params = SystemParams::new(0.8, 6.0, 0.1, 2.0, 4).expect("valid parameters");
    (params, Trace::new(slots).expect("non-empty trace"))
}
