#![allow(dead_code)]

use ehcrn_core::{SlotData, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Power gain of a Rayleigh link with the given mean.
pub fn gain(rng: &mut impl Rng, mean: f64) -> f64 {
    Exp::new(1.0 / mean).unwrap().sample(rng)
}

pub fn random_slot(rng: &mut impl Rng) -> SlotData {
    SlotData {
        h_pp: gain(rng, 0.1),
        h_ps: gain(rng, 0.1),
        h_ss: gain(rng, 0.1),
        h_sp: gain(rng, 0.1),
        e_p: rng.random_range(0.0..5.0),
        e_s: rng.random_range(0.0..5.0),
    }
}

pub fn random_params(rng: &mut impl Rng, n_slots: usize) -> SystemParams {
    SystemParams::new(rng.random_range(0.0..1.0), 6.0, 0.1, rng.random_range(0.5..3.0), n_slots).unwrap()
}

/// SU bits written as a difference of logs, not through the SINR.
pub fn su_bits_ref(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> f64 {
    let interference = sigma2 + slot.h_ps * p_p;
    (interference + slot.h_ss * p_s).log2() - interference.log2()
}

pub fn pu_bits_ref(slot: &SlotData, p_p: f64, p_s: f64, sigma2: f64) -> f64 {
    let interference = sigma2 + slot.h_sp * p_s;
    (interference + slot.h_pp * p_p).log2() - interference.log2()
}
