//! Susceptivities against independent quadrature oracles.

use std::f64::consts::PI;

use cpt_core::bath::{
    build_susceptivity_set, einstein_ratio, susceptivity, BathConfig, DispersionSpec,
    OccupationSpectrum, Quadrature, RadialProfile, Sign,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Composite Simpson rule with `n` (even) intervals.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let c = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += c * f(a + h * k as f64);
    }
    sum * h / 3.0
}

fn weight(sign: Sign, n: f64) -> f64 {
    match sign {
        Sign::Plus => n,
        Sign::Minus => n + 1.0,
    }
}

fn reference_bath() -> BathConfig {
    BathConfig {
        cutoff: Some(10.0),
        ..BathConfig::uniform(
            RadialProfile::Gaussian {
                amplitude: 1.0,
                center: 1.0,
                width: 0.5,
            },
            OccupationSpectrum::Flat { n: 1.0 },
        )
    }
}

/// `PV ∫_0^Λ h(r) dr` for `h` with a simple pole at `r*`, from symmetric
/// excision of `(r* - ε, r* + ε)` and Richardson extrapolation in `ε`.
/// Each side is integrated in `u = ln |r - r*|`, where the integrand is
/// smooth.
fn excised_pv<F: Fn(f64) -> f64>(h: &F, r_star: f64, cutoff: f64) -> f64 {
    let n = 20_000;
    let excised = |eps: f64| {
        let left = |u: f64| {
            let d = u.exp();
            h(r_star - d) * d
        };
        let right = |u: f64| {
            let d = u.exp();
            h(r_star + d) * d
        };
        simpson(&left, eps.ln(), r_star.ln(), n) + simpson(&right, eps.ln(), (cutoff - r_star).ln(), n)
    };
    let eps = 2e-3;
    // I(ε) = PV - 2Bε + O(ε³)
    2.0 * excised(eps / 2.0) - excised(eps)
}

#[test]
fn principal_part_matches_excision_oracle() {
    let bath = reference_bath();
    let g = |r: f64| (-(r - 1.0f64).powi(2) / (2.0 * 0.25)).exp();
    for sign in Sign::BOTH {
        let w = weight(sign, 1.0);
        let h = |r: f64| 4.0 * PI * r * r * g(r) * g(r) * w / (r - 1.0);
        let oracle = -excised_pv(&h, 1.0, 10.0);
        let value = susceptivity(0, 0, 1, sign, &bath).unwrap().principal.value;
        assert!(
            (value - oracle).abs() <= 1e-6 * oracle.abs(),
            "{sign:?}: {value} vs oracle {oracle}"
        );
    }
}

#[test]
fn principal_part_matches_oracle_for_quadratic_dispersion() {
    let bath = BathConfig {
        dispersion: DispersionSpec { p: 2.0 },
        bohr_frequency: 1.7,
        cutoff: Some(6.0),
        ..BathConfig::uniform(
            RadialProfile::Lorentzian {
                amplitude: 0.8,
                center: 1.1,
                halfwidth: 0.4,
            },
            OccupationSpectrum::Planck { beta: 0.7 },
        )
    };
    let r_star = 1.7f64.sqrt();
    let g = |r: f64| 0.8 * 0.16 / ((r - 1.1f64).powi(2) + 0.16);
    let n = |r: f64| 1.0 / (0.7 * r * r).exp_m1();
    for sign in Sign::BOTH {
        let h = |r: f64| 4.0 * PI * r * r * g(r) * g(r) * weight(sign, n(r)) / (r * r - 1.7);
        // N(r) is singular at r = 0 but r² N(r) has a finite limit.
        let h0 = |r: f64| h(r.max(1e-12));
        let oracle = -excised_pv(&h0, r_star, 6.0);
        let value = susceptivity(1, 1, 1, sign, &bath).unwrap().principal.value;
        assert!(
            (value - oracle).abs() <= 1e-6 * oracle.abs(),
            "{sign:?}: {value} vs oracle {oracle}"
        );
    }
}

#[test]
fn principal_part_with_occupation_window() {
    // The window edges make the integrand discontinuous away from r*.
    let mut bath = reference_bath();
    bath.occupation = OccupationSpectrum::ShiftedWindow {
        n: 1.5,
        lower: 1.6,
        upper: 2.7,
    };
    let g = |r: f64| (-(r - 1.0f64).powi(2) / (2.0 * 0.25)).exp();
    let n = |r: f64| if (1.6..=2.7).contains(&r) { 1.5 } else { 0.0 };
    let h = |r: f64| 4.0 * PI * r * r * g(r) * g(r) * n(r) / (r - 1.0);
    let oracle = -simpson(&h, 1.6, 2.7, 4000);
    let c = susceptivity(0, 0, 0, Sign::Plus, &bath).unwrap();
    assert_eq!(c.resonant, 0.0);
    assert!((c.principal.value - oracle).abs() <= 1e-9 * oracle.abs());
}

/// `π ∫ dk g² W δ_ε(ω(k) - ω)` with a Gaussian mollifier, extrapolated to
/// `ε → 0`.
fn mollified_resonant<F: Fn(f64) -> f64, W: Fn(f64) -> f64>(
    g: &F,
    w: &W,
    p: f64,
    omega: f64,
) -> f64 {
    let r_star = omega.powf(1.0 / p);
    let slope = p * r_star.powf(p - 1.0);
    let at = |eps: f64| {
        let h = |r: f64| {
            let x = r.powf(p) - omega;
            let delta = (-x * x / (2.0 * eps * eps)).exp() / (eps * (2.0 * PI).sqrt());
            PI * 4.0 * PI * r * r * g(r) * g(r) * w(r) * delta
        };
        let half = 12.0 * eps / slope;
        simpson(&h, r_star - half, r_star + half, 4000)
    };
    let eps = 1e-2;
    (4.0 * at(eps / 2.0) - at(eps)) / 3.0
}

#[test]
fn resonant_part_matches_mollified_delta() {
    let cases = [
        (1.0, 1.0, OccupationSpectrum::Planck { beta: 1.0 }),
        (2.0, 1.3, OccupationSpectrum::Flat { n: 0.4 }),
        (1.5, 0.8, OccupationSpectrum::Planck { beta: 2.0 }),
    ];
    for (p, omega, occupation) in cases {
        let profile = RadialProfile::Gaussian {
            amplitude: 1.2,
            center: 0.9,
            width: 0.6,
        };
        let bath = BathConfig {
            dispersion: DispersionSpec { p },
            bohr_frequency: omega,
            ..BathConfig::uniform(profile, occupation)
        };
        let g = |r: f64| profile.eval(r);
        let disp = DispersionSpec { p };
        for sign in Sign::BOTH {
            let w = |r: f64| weight(sign, occupation.eval(r, &disp));
            let oracle = mollified_resonant(&g, &w, p, omega);
            let value = susceptivity(0, 1, 1, sign, &bath).unwrap().resonant;
            assert!(
                (value - oracle).abs() <= 1e-6 * oracle.abs(),
                "p = {p}, {sign:?}: {value} vs {oracle}"
            );
        }
    }
}

fn random_profile(rng: &mut ChaCha8Rng) -> RadialProfile {
    let amplitude = rng.gen_range(-1.5..1.5);
    match rng.gen_range(0..3) {
        0 => RadialProfile::Gaussian {
            amplitude,
            center: rng.gen_range(0.5..1.8),
            width: rng.gen_range(0.2..1.0),
        },
        1 => RadialProfile::Lorentzian {
            amplitude,
            center: rng.gen_range(0.5..1.8),
            halfwidth: rng.gen_range(0.2..0.8),
        },
        _ => RadialProfile::ShellConstant {
            amplitude,
            inner: rng.gen_range(0.0..0.7),
            outer: rng.gen_range(1.4..3.0),
        },
    }
}

fn random_bath(rng: &mut ChaCha8Rng) -> BathConfig {
    let mut bath = BathConfig {
        dispersion: DispersionSpec {
            p: rng.gen_range(0.8..2.5),
        },
        bohr_frequency: rng.gen_range(0.6..1.5),
        occupation: if rng.gen_bool(0.5) {
            OccupationSpectrum::Planck {
                beta: rng.gen_range(0.3..3.0),
            }
        } else {
            OccupationSpectrum::Flat {
                n: rng.gen_range(0.0..3.0),
            }
        },
        ..BathConfig::default()
    };
    for row in &mut bath.formfactors {
        for profile in row.iter_mut() {
            *profile = random_profile(rng);
        }
    }
    bath
}

#[test]
fn exchange_symmetry_on_random_configs() {
    // Real profiles make every susceptivity symmetric in the transition
    // indices.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let set = build_susceptivity_set(&random_bath(&mut rng)).unwrap();
        for i in 0..2 {
            for s in Sign::BOTH {
                let ab = set.get(i, 0, 1, s);
                let ba = set.get(i, 1, 0, s);
                assert!((ab - ba).norm() <= 1e-12 * ab.norm().max(1.0), "{ab} vs {ba}");
            }
        }
    }
}

#[test]
fn resonant_parts_obey_cauchy_schwarz_and_emission_dominates() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let set = build_susceptivity_set(&random_bath(&mut rng)).unwrap();
        for i in 0..2 {
            for s in Sign::BOTH {
                let aa = set.get(i, 0, 0, s).re;
                let bb = set.get(i, 1, 1, s).re;
                let ab = set.get(i, 0, 1, s).re;
                assert!(aa >= 0.0 && bb >= 0.0);
                assert!(ab * ab <= aa * bb * (1.0 + 1e-12) + 1e-300);
            }
            for a in 0..2 {
                assert!(set.get(i, a, a, Sign::Minus).re >= set.get(i, a, a, Sign::Plus).re);
            }
        }
    }
}

#[test]
fn einstein_ratio_does_not_depend_on_formfactors() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..10 {
        let beta: f64 = rng.gen_range(0.3..3.0);
        let omega: f64 = rng.gen_range(0.5..2.0);
        let expected = (-beta * omega).exp();
        for _ in 0..3 {
            let mut profile = random_profile(&mut rng);
            if let RadialProfile::ShellConstant { inner, outer, .. } = &mut profile {
                *inner = 0.0;
                *outer = 3.0;
            }
            let bath = BathConfig {
                bohr_frequency: omega,
                cutoff: Some(20.0 * omega.max(1.0)),
                ..BathConfig::uniform(profile, OccupationSpectrum::Planck { beta })
            };
            let r = einstein_ratio(&build_susceptivity_set(&bath).unwrap()).unwrap();
            assert!((r - expected).abs() <= 1e-12, "{r} vs {expected}");
        }
    }
}

#[test]
fn tightening_the_quadrature_stays_within_the_error_estimate() {
    let mut bath = reference_bath();
    bath.formfactors[0][1] = RadialProfile::Lorentzian {
        amplitude: 0.7,
        center: 1.4,
        halfwidth: 0.3,
    };
    let coarse = susceptivity(0, 0, 1, Sign::Minus, &bath).unwrap();
    bath.quadrature = Quadrature::with_tolerance(1e-13);
    let fine = susceptivity(0, 0, 1, Sign::Minus, &bath).unwrap();
    let diff = (coarse.principal.value - fine.principal.value).abs();
    assert!(diff <= 1e-8, "difference {diff:e}");
    assert!(coarse.principal.error <= 1e-8);
}

#[test]
fn panel_budget_exhaustion_is_numerical_error() {
    let mut bath = reference_bath();
    bath.quadrature = Quadrature {
        abs_tol: 1e-15,
        rel_tol: 0.0,
        max_panels: 3,
    };
    let err = susceptivity(0, 0, 0, Sign::Minus, &bath).unwrap_err();
    assert_eq!(err.exit_code(), 5);
}
