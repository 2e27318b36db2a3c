//! Structural invariants checked on random inputs.

use cpt_core::bath::{Sign, SusceptivitySet, SusceptivityDocument};
use cpt_core::generator::{apply, build_generator, decompose_blocks, evolve_exact, master_rhs};
use cpt_core::state::{CMatrix3, DensityMatrix3, V0, V1};
use cpt_core::stationary::{
    admissible_interval, conserved_c, family_state, family_state_unchecked,
    min_ground_population,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Random susceptivities with the structure produced by real formfactors:
/// symmetric in the transition indices, non-negative diagonal real parts.
fn any_set() -> impl Strategy<Value = SusceptivitySet> {
    (prop::collection::vec(complex(), 12), 0.1..3.0f64).prop_map(|(v, omega)| {
        let mut values = [[[[Complex64::new(0.0, 0.0); 2]; 2]; 2]; 2];
        let mut k = 0;
        for block in values.iter_mut() {
            for sign in 0..2 {
                let (d0, d1, x) = (v[k], v[k + 1], v[k + 2]);
                k += 3;
                block[0][0][sign] = Complex64::new(d0.re.abs(), d0.im);
                block[1][1][sign] = Complex64::new(d1.re.abs(), d1.im);
                block[0][1][sign] = x;
                block[1][0][sign] = x;
            }
        }
        SusceptivitySet::from_values(omega, values)
    })
}

/// Transition-independent set with `0 ≤ Re⁺ ≤ Re⁻`.
fn equal_set() -> impl Strategy<Value = SusceptivitySet> {
    (0.0..1.0f64, 0.05..2.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(ratio, am, bp, bm)| {
        SusceptivitySet::uniform(
            1.0,
            Complex64::new(ratio * am, bp),
            Complex64::new(am, bm),
        )
    })
}

fn density() -> impl Strategy<Value = DensityMatrix3> {
    prop::collection::vec(complex(), 9).prop_map(|v| {
        let g = CMatrix3::from_iterator(v);
        let m = g * g.adjoint();
        let tr = m.trace();
        DensityMatrix3::from_matrix_unchecked(m / tr).hermitized()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rhs_is_hermitian_and_traceless(set in any_set(), rho in density()) {
        let d = master_rhs(&set, rho.matrix());
        let scale = set.scale().max(1.0);
        prop_assert!(d.trace().norm() <= 1e-13 * scale);
        prop_assert!((d - d.adjoint()).norm() <= 1e-13 * scale);
    }

    #[test]
    fn generator_reproduces_rhs(set in any_set(), rho in density()) {
        let l = build_generator(&set);
        let diff = apply(&l, &rho) - master_rhs(&set, rho.matrix());
        prop_assert!(diff.norm() <= 1e-13 * set.scale().max(1.0));
    }

    #[test]
    fn blocks_do_not_mix(set in any_set()) {
        let l = build_generator(&set);
        let m = l.matrix();
        for &r in &V1 {
            for &c in &V0 {
                prop_assert_eq!(m[(r, c)], 0.0);
                prop_assert_eq!(m[(c, r)], 0.0);
            }
        }
    }

    #[test]
    fn conserved_quantity_is_constant(set in equal_set(), rho in density(), t in 0.0..5.0f64) {
        let l = build_generator(&set);
        let later = evolve_exact(&l, &rho, t).unwrap();
        prop_assert!((conserved_c(&later) - conserved_c(&rho)).abs() <= 1e-11);
    }

    #[test]
    fn evolution_preserves_trace_and_positivity(set in equal_set(), rho in density(), t in 0.0..5.0f64) {
        let later = evolve_exact(&build_generator(&set), &rho, t).unwrap();
        prop_assert!((later.trace() - 1.0).abs() <= 1e-12);
        prop_assert!(later.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn family_is_stationary(set in equal_set(), u in 0.0..=1.0f64) {
        let r = set.ratio().unwrap();
        let (lo, hi) = admissible_interval(r).unwrap();
        let rho = family_state(r, lo + u * (hi - lo)).unwrap();
        let l = build_generator(&set);
        prop_assert!(apply(&l, &rho).norm() <= 1e-13 * l.norm_frobenius());
    }

    #[test]
    fn admissible_interval_is_the_positivity_range(r in 0.0..=1.0f64, s in -1.0..1.0f64) {
        let (lo, hi) = admissible_interval(r).unwrap();
        let rho = family_state_unchecked(r, s);
        prop_assert!((rho.trace() - 1.0).abs() < 1e-15);
        let margin = 1e-9;
        if s > lo + margin && s < hi - margin {
            prop_assert!(rho.check().valid);
            prop_assert!(family_state(r, s).is_ok());
        } else if s < lo - margin || s > hi + margin {
            prop_assert!(!rho.check().valid);
            prop_assert!(family_state(r, s).is_err());
        }
    }

    #[test]
    fn ground_population_floor_is_monotone(n in 0.0..1e3f64, dn in 1e-3..10.0f64) {
        let a = min_ground_population(n).unwrap();
        let b = min_ground_population(n + dn).unwrap();
        prop_assert!(b < a && b > 0.25 && a <= 0.5);
    }

    #[test]
    fn relaxation_gap_of_thermal_sets(set in equal_set()) {
        let plus = set.sum(0, 0, Sign::Plus);
        let report = decompose_blocks(&build_generator(&set)).unwrap();
        if plus.re > 1e-6 {
            prop_assert!((report.v1_spectral_gap - 2.0 * plus.re).abs() <= 1e-8 * set.scale());
        }
    }

    #[test]
    fn susceptivity_document_round_trips(set in any_set()) {
        let doc = set.to_document(Some(7.5));
        let text = serde_json::to_string(&doc).unwrap();
        let back: SusceptivityDocument = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_set().unwrap(), set);
    }
}
