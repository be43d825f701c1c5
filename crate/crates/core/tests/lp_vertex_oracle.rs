//! Linear programs checked against brute-force vertex enumeration.

mod common;

use common::{random_params, random_slot, rng, su_bits_ref};
use ehcrn_core::lp_core::{simplex_solve, LinearProgram, LpStatus};
use ehcrn_core::single_slot::{build_lfp, solve_via_lp};
use ehcrn_core::{single_slot_feasible, solve_single_slot};
use nalgebra::{Matrix3, Vector3};
use rand::Rng;

/// Every basic feasible point of `A x <= b` in three variables.
fn vertices(a: &[[f64; 3]], b: &[f64]) -> Vec<[f64; 3]> {
    let m = a.len();
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let (ri, rj, rk) = (a[i], a[j], a[k]);
                let mat = Matrix3::new(ri[0], ri[1], ri[2], rj[0], rj[1], rj[2], rk[0], rk[1], rk[2]);
                let Some(inv) = mat.try_inverse() else { continue };
                let x = inv * Vector3::new(b[i], b[j], b[k]);
                let feasible = a.iter().zip(b).all(|(row, rhs)| {
                    row[0] * x[0] + row[1] * x[1] + row[2] * x[2] <= rhs + 1e-9 * (1.0 + rhs.abs())
                });
                if feasible {
                    out.push([x[0], x[1], x[2]]);
                }
            }
        }
    }
    out
}

#[test]
fn closed_form_lp_and_vertices_agree() {
    let mut r = rng(101);
    let mut checked = 0;
    while checked < 1000 {
        let params = random_params(&mut r, 1);
        let slot = random_slot(&mut r);
        if !single_slot_feasible(&params, &slot) {
            continue;
        }
        checked += 1;
        let lfp = build_lfp(&params, &slot);
        // The ratio is quasi-linear, so its maximum over the polytope sits
        // at a vertex.
        let best = vertices(&lfp.matrix_a, &lfp.beta)
            .iter()
            .map(|x| su_bits_ref(&slot, x[0], x[1], params.sigma2))
            .fold(f64::NEG_INFINITY, f64::max);
        let closed = solve_single_slot(&params, &slot).unwrap().su_bits;
        let lp = solve_via_lp(&params, &slot).unwrap().expect("feasible LP").su_bits;
        assert!((closed - best).abs() < 1e-6, "closed {closed} vertices {best} {params:?} {slot:?}");
        assert!((lp - best).abs() < 1e-6, "lp {lp} vertices {best} {params:?} {slot:?}");
    }
}

#[test]
fn infeasible_instances_have_no_vertices() {
    let mut r = rng(102);
    let mut checked = 0;
    while checked < 200 {
        let params = random_params(&mut r, 1);
        let slot = random_slot(&mut r);
        if single_slot_feasible(&params, &slot) {
            continue;
        }
        checked += 1;
        let lfp = build_lfp(&params, &slot);
        assert!(vertices(&lfp.matrix_a, &lfp.beta).is_empty(), "{params:?} {slot:?}");
        assert!(solve_via_lp(&params, &slot).unwrap().is_none());
    }
}

#[test]
fn random_box_constrained_lps_match_vertex_enumeration() {
    let mut r = rng(103);
    for _ in 0..2000 {
        let m = r.random_range(1..=4);
        let mut a: Vec<[f64; 3]> = (0..m).map(|_| [0; 3].map(|_: i32| r.random_range(-2.0..2.0))).collect();
        let mut b: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..3.0)).collect();
        // Box 0 <= x <= u keeps the region bounded.
        for d in 0..3 {
            let mut lo = [0.0; 3];
            lo[d] = -1.0;
            a.push(lo);
            b.push(0.0);
            let mut hi = [0.0; 3];
            hi[d] = 1.0;
            a.push(hi);
            b.push(r.random_range(0.5..4.0));
        }
        let c = [0; 3].map(|_: i32| r.random_range(-1.0..1.0));

        let verts = vertices(&a, &b);
        let lp = LinearProgram::canonical(c.to_vec(), a.iter().map(|row| row.to_vec()).collect(), b.clone()).unwrap();
        let sol = simplex_solve(&lp).unwrap();
        if verts.is_empty() {
            assert_eq!(sol.status, LpStatus::Infeasible, "{a:?} {b:?}");
            continue;
        }
        assert_eq!(sol.status, LpStatus::Optimal, "{a:?} {b:?}");
        let best = verts.iter().map(|x| c[0] * x[0] + c[1] * x[1] + c[2] * x[2]).fold(f64::NEG_INFINITY, f64::max);
        assert!((sol.objective - best).abs() < 1e-8 * (1.0 + best.abs()), "{} vs {best}", sol.objective);
        assert!((sol.dual_bound - best).abs() < 1e-8 * (1.0 + best.abs()));
    }
}
