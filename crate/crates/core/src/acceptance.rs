//! End-to-end verification suite behind `cpt selftest`.
//!
//! Every criterion draws its random baths and states from its own ChaCha
//! stream of the suite seed, so the report is a pure function of the seed.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bath::{
    build_susceptivity_set, einstein_ratio, BathConfig, DispersionSpec, OccupationSpectrum,
    RadialProfile, Sign,
};
use crate::cli::{family_table, trajectory_table};
use crate::error::Result;
use crate::generator::evolve::exact_trajectory;
use crate::generator::{
    apply, build_generator, decompose_blocks, evolve_exact, evolve_rk, v0_decay_check,
};
use crate::state::{CMatrix3, DensityMatrix3, Preset, V1};
use crate::stationary::{
    admissible_interval, beats, conserved_c, family_state, min_ground_population,
    orthogonal_population_determinant, population_determinant, predict_stationary,
    solve_nullspace, v1_kernel, FamilyDescriptor, Stationary,
};

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn failed(&self) -> usize {
        self.criteria.iter().filter(|c| !c.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.failed() == 0
    }

    /// One line per criterion.
    pub fn render(&self) -> String {
        let mut out = format!("selftest seed {}\n", self.seed);
        for c in &self.criteria {
            out.push_str(&c.line());
            out.push('\n');
        }
        out
    }
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

type Check = fn(&mut ChaCha8Rng) -> Result<(bool, String)>;

const CHECKS: [(&str, Check); 12] = [
    ("family members are fixed points", fixed_points),
    ("convergence to the predicted member", convergence),
    ("extremal states", extremal),
    ("Einstein ratio at beta = omega = 1", einstein),
    ("invariant-subspace block structure", blocks),
    ("optical-coherence decay bound", coherence_decay),
    ("Runge-Kutta versus matrix exponential", oracle_equivalence),
    ("kernel plane versus analytic family", kernel_plane),
    ("orthogonal transitions: unique stationary state", orthogonal),
    ("vacuum reservoir", vacuum),
    ("quantum beats", quantum_beats),
    ("ground-population floor", population_floor),
];

/// Number of criteria in the suite.
pub const CRITERIA: usize = CHECKS.len() + 1;

fn stream(seed: u64, id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id as u64);
    rng
}

fn run_checks(seed: u64) -> Vec<CriterionResult> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(k, (name, check))| {
            let id = k + 1;
            let (passed, detail) = match check(&mut stream(seed, id)) {
                Ok(outcome) => outcome,
                Err(e) => (false, format!("error: {e}")),
            };
            CriterionResult {
                id,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

/// Artifacts whose bytes must not depend on the run.
fn artifacts(seed: u64) -> Result<String> {
    let mut rng = stream(seed, CRITERIA + 1);
    let set = build_susceptivity_set(&{
        let occupation = thermal_occupation(&mut rng, true);
        equal_bath(&mut rng, occupation)
    })?;
    let rho0 = random_state(&mut rng);
    let traj = exact_trajectory(&build_generator(&set), &rho0, 5.0, 51)?;
    let mut out = trajectory_table(&traj).to_csv();
    out.push_str(&family_table(1.0, 7)?.to_csv());
    out.push_str(&serde_json::to_string(&set.to_document(None)).expect("serializable"));
    Ok(out)
}

/// Runs the suite. The last criterion repeats the others and compares the
/// rendered output byte for byte.
pub fn run(seed: u64) -> SuiteReport {
    let criteria = run_checks(seed);
    let first = SuiteReport {
        seed,
        criteria: criteria.clone(),
    }
    .render();
    let second = SuiteReport {
        seed,
        criteria: run_checks(seed),
    }
    .render();
    let (passed, detail) = match (artifacts(seed), artifacts(seed)) {
        (Ok(a), Ok(b)) => {
            let same = first == second && a == b;
            (
                same,
                format!(
                    "{} report bytes and {} artifact bytes {}",
                    first.len(),
                    a.len(),
                    if same { "identical across runs" } else { "differ between runs" }
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => (false, format!("error: {e}")),
    };
    let mut criteria = criteria;
    criteria.push(CriterionResult {
        id: CRITERIA,
        name: "determinism under a fixed seed",
        passed,
        detail,
    });
    SuiteReport { seed, criteria }
}

// ---------------------------------------------------------------------------
// random inputs

fn random_profile(rng: &mut ChaCha8Rng) -> RadialProfile {
    let amplitude = rng.gen_range(0.5..1.5);
    match rng.gen_range(0..3) {
        0 => RadialProfile::Gaussian {
            amplitude,
            center: rng.gen_range(0.6..1.6),
            width: rng.gen_range(0.3..0.8),
        },
        1 => RadialProfile::Lorentzian {
            amplitude,
            center: rng.gen_range(0.6..1.6),
            halfwidth: rng.gen_range(0.2..0.6),
        },
        _ => RadialProfile::ShellConstant {
            amplitude,
            inner: rng.gen_range(0.1..0.6),
            outer: rng.gen_range(1.5..2.5),
        },
    }
}

fn thermal_occupation(rng: &mut ChaCha8Rng, planck: bool) -> OccupationSpectrum {
    if planck {
        OccupationSpectrum::Planck {
            beta: rng.gen_range(0.5..2.0),
        }
    } else {
        OccupationSpectrum::Flat {
            n: rng.gen_range(0.2..2.0),
        }
    }
}

fn base_bath(rng: &mut ChaCha8Rng, occupation: OccupationSpectrum) -> BathConfig {
    BathConfig {
        dispersion: DispersionSpec {
            p: if rng.gen_bool(0.5) { 1.0 } else { 2.0 },
        },
        occupation,
        bohr_frequency: rng.gen_range(0.7..1.4),
        ..BathConfig::default()
    }
}

fn equal_bath(rng: &mut ChaCha8Rng, occupation: OccupationSpectrum) -> BathConfig {
    let profile = random_profile(rng);
    BathConfig {
        formfactors: [[profile; 2]; 2],
        ..base_bath(rng, occupation)
    }
}

fn varied_bath(rng: &mut ChaCha8Rng, occupation: OccupationSpectrum) -> BathConfig {
    let mut bath = base_bath(rng, occupation);
    for row in &mut bath.formfactors {
        for profile in row.iter_mut() {
            *profile = random_profile(rng);
        }
    }
    bath
}

fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix3 {
    let g = CMatrix3::from_fn(|_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let m = g * g.adjoint();
    let tr = m.trace();
    DensityMatrix3::from_matrix_unchecked(m / tr).hermitized()
}

fn max_entry_diff(a: &DensityMatrix3, b: &DensityMatrix3) -> f64 {
    (a.matrix() - b.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn v1_vector(rho: &DensityMatrix3) -> SVector<f64, 5> {
    let x = rho.coords();
    SVector::<f64, 5>::from_fn(|k, _| x[V1[k]])
}

fn verdict(ok: bool, value: f64, bound: f64, what: &str) -> (bool, String) {
    (ok, format!("{what} {value:.3e} (bound {bound:.0e})"))
}

// ---------------------------------------------------------------------------
// criteria

fn fixed_points(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for k in 0..50 {
        let occupation = thermal_occupation(rng, k % 2 == 0);
        let set = build_susceptivity_set(&equal_bath(rng, occupation))?;
        let r = einstein_ratio(&set)?;
        let (lo, hi) = admissible_interval(r)?;
        let s = rng.gen_range(lo..=hi);
        let l = build_generator(&set);
        let rho = family_state(r, s)?;
        worst = worst.max(apply(&l, &rho).norm() / l.norm_frobenius());
    }
    Ok(verdict(worst < 1e-9, worst, 1e-9, "50 baths, worst relative residual"))
}

fn convergence(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst_state = 0.0f64;
    let mut worst_drift = 0.0f64;
    for _ in 0..10 {
        let set = build_susceptivity_set(&{
            let occupation = thermal_occupation(rng, true);
            equal_bath(rng, occupation)
        })?;
        let l = build_generator(&set);
        let horizon = 40.0 / decompose_blocks(&l)?.relaxation_gap();
        for _ in 0..10 {
            let rho0 = random_state(rng);
            let predicted = predict_stationary(&rho0, &set)?;
            let reached = evolve_exact(&l, &rho0, horizon)?;
            worst_state = worst_state.max(max_entry_diff(&reached, &predicted));
            let c0 = conserved_c(&rho0);
            let traj = exact_trajectory(&l, &rho0, horizon, 41)?;
            for c in traj.conserved() {
                worst_drift = worst_drift.max((c - c0).abs());
            }
        }
    }
    let ok = worst_state <= 1e-6 && worst_drift < 1e-9;
    Ok((
        ok,
        format!(
            "100 states, worst entry error {worst_state:.3e} (bound 1e-6), C drift {worst_drift:.3e} (bound 1e-9)"
        ),
    ))
}

fn extremal(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let nc = DensityMatrix3::preset(Preset::NonCoupled);
    let mut ok = true;
    for r in [0.0, rng.gen_range(0.0..1.0), 1.0] {
        ok &= family_state(r, -0.5)? == nc;
    }
    let h = 0.5;
    let q = 0.25;
    ok &= nc.coords().as_slice() == [h, h, 0.0, -h, 0.0, 0.0, 0.0, 0.0, 0.0];
    let top = family_state(1.0, 0.25)?;
    ok &= top.coords().as_slice() == [q, q, h, q, 0.0, 0.0, 0.0, 0.0, 0.0];
    Ok((
        ok,
        if ok {
            "dark state and upper endpoint at R = 1 reproduced exactly".into()
        } else {
            "extremal states differ from the exact matrices".into()
        },
    ))
}

fn einstein(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let families = [
        RadialProfile::Gaussian {
            amplitude: rng.gen_range(0.5..1.5),
            center: 1.0,
            width: 0.5,
        },
        RadialProfile::Lorentzian {
            amplitude: rng.gen_range(0.5..1.5),
            center: 0.8,
            halfwidth: 0.3,
        },
        RadialProfile::ShellConstant {
            amplitude: rng.gen_range(0.5..1.5),
            inner: 0.5,
            outer: 2.0,
        },
    ];
    let expected = (-1.0f64).exp();
    let mut worst = 0.0f64;
    for profile in families {
        let bath = BathConfig::uniform(profile, OccupationSpectrum::Planck { beta: 1.0 });
        let r = einstein_ratio(&build_susceptivity_set(&bath)?)?;
        worst = worst.max((r - expected).abs());
    }
    Ok(verdict(worst < 1e-6, worst, 1e-6, "3 formfactor families, worst |R - 1/e|"))
}

fn blocks(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for k in 0..20 {
        let occupation = thermal_occupation(rng, k % 3 != 0);
        let bath = if k % 2 == 0 {
            equal_bath(rng, occupation)
        } else {
            varied_bath(rng, occupation)
        };
        let report = decompose_blocks(&build_generator(&build_susceptivity_set(&bath)?))?;
        worst = worst.max(report.v0_to_v1_leakage.max(report.v1_to_v0_leakage));
    }
    Ok(verdict(worst < 1e-12, worst, 1e-12, "20 baths, worst leakage"))
}

fn coherence_decay(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..10 {
        let set = build_susceptivity_set(&{
            let occupation = thermal_occupation(rng, true);
            equal_bath(rng, occupation)
        })?;
        let l = build_generator(&set);
        let c = l.decay_bound();
        if !(c > 0.0) {
            continue;
        }
        for _ in 0..3 {
            let report = v0_decay_check(&l, &random_state(rng), 5.0 / c)?;
            worst = worst.max(report.max_bound_ratio);
            checked += 1;
        }
    }
    let ok = checked > 0 && worst <= 1.0 + 1e-6;
    Ok((
        ok,
        format!("{checked} trajectories, worst norm over envelope {worst:.9} (bound 1 + 1e-6)"),
    ))
}

fn oracle_equivalence(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst_rk = 0.0f64;
    let mut worst_group = 0.0f64;
    for k in 0..20 {
        let occupation = thermal_occupation(rng, k % 2 == 0);
        let bath = if k % 4 < 2 {
            equal_bath(rng, occupation)
        } else {
            varied_bath(rng, occupation)
        };
        let l = build_generator(&build_susceptivity_set(&bath)?);
        let rho0 = random_state(rng);
        let horizon = rng.gen_range(1.0..5.0);
        let dt = 0.005 / l.spectral_radius()?;
        let rk = evolve_rk(&l, &rho0, horizon, dt, 2)?;
        let exact = evolve_exact(&l, &rho0, horizon)?;
        worst_rk = worst_rk.max(max_entry_diff(rk.last().expect("two samples"), &exact));

        let (t, s) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
        let joint = evolve_exact(&l, &rho0, t + s)?;
        let split = evolve_exact(&l, &evolve_exact(&l, &rho0, s)?, t)?;
        worst_group = worst_group.max(max_entry_diff(&joint, &split));
    }
    let ok = worst_rk <= 1e-8 && worst_group <= 1e-10;
    Ok((
        ok,
        format!(
            "20 triples, worst RK error {worst_rk:.3e} (bound 1e-8), semigroup defect {worst_group:.3e} (bound 1e-10)"
        ),
    ))
}

/// Orthonormal basis of the span of `vs` by modified Gram-Schmidt.
fn orthonormal(vs: &[SVector<f64, 5>]) -> SMatrix<f64, 5, 2> {
    let mut q = SMatrix::<f64, 5, 2>::zeros();
    for (k, v) in vs.iter().enumerate().take(2) {
        let mut w = *v;
        for j in 0..k {
            let qj = q.column(j).into_owned();
            w -= qj * qj.dot(&w);
        }
        q.set_column(k, &w.normalize());
    }
    q
}

/// Sine of the largest principal angle between two 2-planes.
fn largest_angle_sine(q1: &SMatrix<f64, 5, 2>, q2: &SMatrix<f64, 5, 2>) -> f64 {
    let residual = q2 - q1 * (q1.transpose() * q2);
    residual.singular_values().max()
}

fn kernel_plane(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst_angle = 0.0f64;
    let mut worst_coef = 0.0f64;
    let mut dims_ok = true;
    for k in 0..10 {
        let set = build_susceptivity_set(&{
            let occupation = thermal_occupation(rng, k % 2 == 0);
            equal_bath(rng, occupation)
        })?;
        let r = einstein_ratio(&set)?;
        let l = build_generator(&set);
        let kernel = v1_kernel(&l)?;
        if kernel.len() != 2 {
            dims_ok = false;
            continue;
        }
        let (lo, hi) = admissible_interval(r)?;
        let analytic = orthonormal(&[
            v1_vector(&family_state(r, lo)?),
            v1_vector(&family_state(r, hi)?),
        ]);
        let numeric = SMatrix::<f64, 5, 2>::from_columns(&[kernel[0], kernel[1]]);
        worst_angle = worst_angle.max(largest_angle_sine(&analytic, &numeric));

        let desc = FamilyDescriptor::new(r)?;
        match solve_nullspace(&l)?.solution {
            Stationary::Family(fam) => match fam.fit {
                Some(fit) => {
                    let (e0, e1) = desc.excited_coefficients();
                    let (g0, g1) = desc.ground_coefficients();
                    for d in [
                        fit.rho_e.0 - e0,
                        fit.rho_e.1 - e1,
                        fit.rho_g.0 - g0,
                        fit.rho_g.1 - g1,
                    ] {
                        worst_coef = worst_coef.max(d.abs());
                    }
                }
                None => dims_ok = false,
            },
            _ => dims_ok = false,
        }
    }
    let ok = dims_ok && worst_angle < 1e-8 && worst_coef <= 1e-9;
    Ok((
        ok,
        format!(
            "10 baths, kernel dimension 2: {dims_ok}, worst angle sine {worst_angle:.3e} (bound 1e-8), worst coefficient error {worst_coef:.3e} (bound 1e-9)"
        ),
    ))
}

fn orthogonal(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut dims_ok = true;
    let mut worst = 0.0f64;
    for k in 0..5 {
        let occupation = thermal_occupation(rng, k % 2 == 0);
        let mut bath = base_bath(rng, occupation);
        let zero = RadialProfile::Gaussian {
            amplitude: 0.0,
            center: 1.0,
            width: 0.5,
        };
        bath.formfactors = [[random_profile(rng), zero], [zero, random_profile(rng)]];
        let set = build_susceptivity_set(&bath)?;
        let l = build_generator(&set);
        dims_ok &= solve_nullspace(&l)?.kernel_dimension == 1;
        let det = population_determinant(&l);
        let closed = orthogonal_population_determinant(&set);
        worst = worst.max((det - closed).abs() / closed.abs().max(1.0));
    }
    let ok = dims_ok && worst <= 1e-10;
    Ok((
        ok,
        format!(
            "5 baths, kernel dimension 1: {dims_ok}, worst determinant error {worst:.3e} (bound 1e-10)"
        ),
    ))
}

fn vacuum(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut structure_ok = true;
    let mut worst_residual = 0.0f64;
    let mut worst_rate = 0.0f64;
    for _ in 0..5 {
        let set = build_susceptivity_set(&equal_bath(rng, OccupationSpectrum::Fock))?;
        let l = build_generator(&set);
        match solve_nullspace(&l)?.solution {
            Stationary::Family(fam) => structure_ok &= fam.dimension == 3,
            _ => structure_ok = false,
        }
        for _ in 0..5 {
            let mut x = random_state(rng).coords();
            x[2] = 0.0;
            for k in 5..9 {
                x[k] = 0.0;
            }
            let tr = x[0] + x[1];
            let rho = DensityMatrix3::from_coords_unchecked(&(x / tr));
            worst_residual = worst_residual.max(apply(&l, &rho).norm() / l.norm_frobenius());
        }
        let rate = 4.0 * set.sum(0, 0, Sign::Minus).re;
        let rho0 = random_state(rng);
        let traj = exact_trajectory(&l, &rho0, 3.0 / rate, 101)?;
        let pts: Vec<(f64, f64)> = traj
            .times
            .iter()
            .zip(&traj.states)
            .map(|(&t, r)| (t, r.entry(2, 2).re.ln()))
            .collect();
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        let fitted = -sxy / sxx;
        worst_rate = worst_rate.max((fitted - rate).abs() / rate);
    }
    let ok = structure_ok && worst_residual <= 1e-12 && worst_rate < 0.01;
    Ok((
        ok,
        format!(
            "5 baths, kernel holds all rho33 = 0 states: {structure_ok}, residual {worst_residual:.3e}, worst relative rate error {worst_rate:.3e} (bound 1e-2)"
        ),
    ))
}

fn quantum_beats(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst_phase = 0.0f64;
    let mut worst_modulus = 0.0f64;
    let mut settled = true;
    for _ in 0..3 {
        let mut bath = equal_bath(rng, OccupationSpectrum::Fock);
        let r_star = bath.resonant_radius();
        bath.occupation = OccupationSpectrum::ShiftedWindow {
            n: rng.gen_range(0.5..2.0),
            lower: r_star + rng.gen_range(0.3..0.6),
            upper: r_star + rng.gen_range(1.0..2.0),
        };
        let set = build_susceptivity_set(&bath)?;
        let kappa = set.sum(0, 0, Sign::Plus).im;
        let mut rho0 = random_state(rng);
        while rho0.beat_combination().norm() < 1e-3 {
            rho0 = random_state(rng);
        }
        let report = beats(&set, &rho0)?;
        let measured = report.measured_frequency.unwrap_or(f64::NAN);
        worst_phase = worst_phase.max((measured - 2.0 * kappa).abs() / (2.0 * kappa).abs());
        worst_modulus = worst_modulus.max(report.modulus_drift);
        settled &= (-0.5..=0.5).contains(&report.s_final)
            && (report.s_final - report.s_limit).abs() < 1e-8;
    }
    let ok = worst_phase <= 1e-6 && worst_modulus <= 1e-8 && settled;
    Ok((
        ok,
        format!(
            "3 baths, worst phase-rate error {worst_phase:.3e} (bound 1e-6), modulus drift {worst_modulus:.3e} (bound 1e-8), s settled: {settled}"
        ),
    ))
}

fn population_floor(_rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let ns = [0.0, 0.5, 1.0, 10.0, 100.0, 1e6];
    let values: Vec<f64> = ns
        .iter()
        .map(|&n| min_ground_population(n))
        .collect::<Result<_>>()?;
    let above = values.iter().all(|&v| v > 0.25);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let start = values[0] == 0.5;
    let tail = (values[values.len() - 1] - 0.25).abs();
    let ok = above && decreasing && start && tail < 1e-6;
    Ok((
        ok,
        format!(
            "above 1/4: {above}, decreasing: {decreasing}, value at N = 0: {:.17}, distance to 1/4 at N = 1e6: {tail:.3e}",
            values[0]
        ),
    ))
}
