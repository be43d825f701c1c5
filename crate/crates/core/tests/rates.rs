//! Rate functions against exact values and a second formulation.

mod common;

use common::{pu_bits_ref, su_bits_ref};
use ehcrn_core::{pu_rate, su_rate, SlotData};
use proptest::prelude::*;

fn slot(h_pp: f64, h_ps: f64, h_ss: f64, h_sp: f64) -> SlotData {
    SlotData { h_pp, h_ps, h_ss, h_sp, e_p: 0.0, e_s: 0.0 }
}

#[test]
fn dyadic_sinr_gives_integer_bits() {
    // SINR = 2^k - 1 must give exactly k bits.
    for k in 0..12 {
        let target = 2f64.powi(k) - 1.0;
        let s = slot(1.0, 0.5, 1.0, 0.25);
        // sigma2 + h_ps p_p = 0.1 + 0.5 * 1.8 = 1.0
        let p_s = target;
        assert_eq!(su_rate(&s, 1.8, p_s, 0.1).unwrap(), k as f64);
        // sigma2 + h_sp p_s = 0.5 + 0.25 * 2 = 1.0
        assert_eq!(pu_rate(&s, target, 2.0, 0.5).unwrap(), k as f64);
    }
}

#[test]
fn silence_gives_zero_bits() {
    let s = slot(0.3, 0.2, 0.4, 0.1);
    assert_eq!(su_rate(&s, 5.0, 0.0, 0.1).unwrap(), 0.0);
    assert_eq!(pu_rate(&s, 0.0, 5.0, 0.1).unwrap(), 0.0);
}

#[test]
fn negative_power_is_rejected() {
    let s = slot(0.3, 0.2, 0.4, 0.1);
    assert!(su_rate(&s, -1.0, 1.0, 0.1).is_err());
    assert!(pu_rate(&s, 1.0, -1.0, 0.1).is_err());
}

fn gains() -> impl Strategy<Value = SlotData> {
    (1e-4..10.0f64, 1e-4..10.0f64, 1e-4..10.0f64, 1e-4..10.0f64).prop_map(|(a, b, c, d)| slot(a, b, c, d))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, max_global_rejects: 1 << 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rates_match_log_difference(s in gains(), p_p in 0.0..20.0f64, p_s in 0.0..20.0f64, sigma2 in 1e-3..2.0f64) {
        let su = su_rate(&s, p_p, p_s, sigma2).unwrap();
        let pu = pu_rate(&s, p_p, p_s, sigma2).unwrap();
        prop_assert!((su - su_bits_ref(&s, p_p, p_s, sigma2)).abs() <= 1e-12 * (1.0 + su));
        prop_assert!((pu - pu_bits_ref(&s, p_p, p_s, sigma2)).abs() <= 1e-12 * (1.0 + pu));
    }

    #[test]
    fn rates_are_monotone_in_both_powers(
        s in gains(), p_p in 0.0..20.0f64, p_s in 0.0..20.0f64, d in 1e-6..5.0f64, sigma2 in 1e-3..2.0f64,
    ) {
        let su = su_rate(&s, p_p, p_s, sigma2).unwrap();
        let pu = pu_rate(&s, p_p, p_s, sigma2).unwrap();
        prop_assert!(su_rate(&s, p_p, p_s + d, sigma2).unwrap() >= su);
        prop_assert!(su_rate(&s, p_p + d, p_s, sigma2).unwrap() <= su);
        prop_assert!(pu_rate(&s, p_p + d, p_s, sigma2).unwrap() >= pu);
        prop_assert!(pu_rate(&s, p_p, p_s + d, sigma2).unwrap() <= pu);
    }

    #[test]
    fn scaling_gains_and_noise_together_leaves_rates_unchanged(
        s in gains(), p_p in 0.0..20.0f64, p_s in 0.0..20.0f64, sigma2 in 1e-3..2.0f64, k in 0.01..100.0f64,
    ) {
        let scaled = slot(k * s.h_pp, k * s.h_ps, k * s.h_ss, k * s.h_sp);
        let su = su_rate(&s, p_p, p_s, sigma2).unwrap();
        let pu = pu_rate(&s, p_p, p_s, sigma2).unwrap();
        prop_assert!((su_rate(&scaled, p_p, p_s, k * sigma2).unwrap() - su).abs() <= 1e-10 * (1.0 + su));
        prop_assert!((pu_rate(&scaled, p_p, p_s, k * sigma2).unwrap() - pu).abs() <= 1e-10 * (1.0 + pu));
    }

    #[test]
    fn trading_gain_for_power_leaves_rates_unchanged(
        s in gains(), p_p in 0.0..20.0f64, p_s in 0.0..20.0f64, sigma2 in 1e-3..2.0f64, k in 0.01..100.0f64,
    ) {
        // Only the products h p enter the rates.
        let scaled = slot(s.h_pp / k, s.h_ps / k, s.h_ss, s.h_sp);
        let su = su_rate(&s, p_p, p_s, sigma2).unwrap();
        prop_assert!((su_rate(&scaled, k * p_p, p_s, sigma2).unwrap() - su).abs() <= 1e-10 * (1.0 + su));
    }
}
