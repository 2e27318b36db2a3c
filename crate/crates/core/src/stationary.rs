//! The stationary set of the reduced dynamics.
//!
//! When the susceptivities do not depend on the transition indices the
//! quantity `C = ρ11 + ρ22 - ρ12 - ρ21 = 2⟨NC|ρ|NC⟩` is conserved and the
//! stationary states form a segment
//!
//! ```text
//!        ⎛ ρe  0   0  ⎞
//!    ρ = ⎜ 0   ρg  s  ⎟     ρe = (1 + 2s) R / (2 + R),  ρg = (1 - sR) / (2 + R)
//!        ⎝ 0   s   ρg ⎠     -1/2 ≤ s ≤ 1 / (2(1 + R))
//! ```
//!
//! written here in the `(|3⟩; |1⟩, |2⟩)` layout, with `R` the Einstein ratio.
//! The lower end is the dark state `|NC⟩⟨NC|`, the upper end mixes `|3⟩`
//! with the coupled state `|C⟩`.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{Sign, SusceptivitySet};
use crate::error::{Error, Result};
use crate::generator::evolve::exact_trajectory;
use crate::generator::{build_generator, eigenvalues, Superoperator, ZERO_RATE_TOL};
use crate::state::{CMatrix3, Coords, DensityCheck, DensityMatrix3, StateRecord, V1};

/// Slack on the admissible interval for parameters computed in floating point.
pub const INTERVAL_SLACK: f64 = 1e-12;
/// Relative tolerance for deciding that susceptivities do not depend on the
/// transition indices.
pub const TRANSITION_INDEPENDENCE_TOL: f64 = 1e-9;
/// Singular values below this fraction of the largest span the kernel.
pub const KERNEL_TOL: f64 = 1e-9;

/// `C = ρ11 + ρ22 - ρ12 - ρ21`.
pub fn conserved_c(rho: &DensityMatrix3) -> f64 {
    (rho.entry(0, 0) + rho.entry(1, 1) - rho.entry(0, 1) - rho.entry(1, 0)).re
}

fn check_ratio(r: f64) -> Result<()> {
    // R = 1 is the N → ∞ limit, reached only asymptotically but kept
    // admissible for the high-intensity formulas.
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Einstein ratio must lie in [0, 1], got {r}"
        )))
    }
}

/// Admissible values `[-1/2, 1/(2(1+R))]` of the family parameter.
pub fn admissible_interval(r: f64) -> Result<(f64, f64)> {
    check_ratio(r)?;
    Ok((-0.5, 1.0 / (2.0 * (1.0 + r))))
}

/// Family member without any range check.
pub fn family_state_unchecked(r: f64, s: f64) -> DensityMatrix3 {
    let rho_e = (1.0 + 2.0 * s) * r / (2.0 + r);
    let rho_g = (1.0 - s * r) / (2.0 + r);
    let c = |x: f64| Complex64::new(x, 0.0);
    let z = c(0.0);
    DensityMatrix3::from_matrix_unchecked(CMatrix3::new(
        c(rho_g),
        c(s),
        z,
        c(s),
        c(rho_g),
        z,
        z,
        z,
        c(rho_e),
    ))
}

/// Stationary family member with ground coherence `s`.
pub fn family_state(r: f64, s: f64) -> Result<DensityMatrix3> {
    let (lo, hi) = admissible_interval(r)?;
    if !(s >= lo - INTERVAL_SLACK && s <= hi + INTERVAL_SLACK) {
        return Err(Error::Domain(format!(
            "parameter s = {s} outside the admissible interval [{lo}, {hi}] for R = {r}"
        )));
    }
    Ok(family_state_unchecked(r, s))
}

/// `(ρ_min, ρ_max)`: the dark state and the opposite end of the family.
pub fn extremal_states(r: f64) -> Result<(DensityMatrix3, DensityMatrix3)> {
    let (lo, hi) = admissible_interval(r)?;
    Ok((family_state_unchecked(r, lo), family_state_unchecked(r, hi)))
}

/// Smallest ground-level diagonal `ρg` over the family at occupation `N`,
/// `½ (N+1)/(2N+1)`.
pub fn min_ground_population(n: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return Err(Error::Domain(format!(
            "occupation must be non-negative, got {n}"
        )));
    }
    // ¼ (1 + 1/(2N+1)) stays finite as N → ∞.
    Ok(0.25 * (1.0 + (2.0 * n + 1.0).recip()))
}

/// Density test with diagnostics; see [`DensityMatrix3::check`].
pub fn check_density(rho: &DensityMatrix3) -> DensityCheck {
    rho.check()
}

/// The one-parameter family for a given Einstein ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyDescriptor {
    pub r: f64,
    pub s_min: f64,
    pub s_max: f64,
}

impl FamilyDescriptor {
    pub fn new(r: f64) -> Result<Self> {
        let (s_min, s_max) = admissible_interval(r)?;
        Ok(FamilyDescriptor { r, s_min, s_max })
    }

    pub fn member(&self, s: f64) -> Result<DensityMatrix3> {
        family_state(self.r, s)
    }

    pub fn member_unchecked(&self, s: f64) -> DensityMatrix3 {
        family_state_unchecked(self.r, s)
    }

    /// `ρe(s)` as `(offset, slope)`.
    pub fn excited_coefficients(&self) -> (f64, f64) {
        let d = 2.0 + self.r;
        (self.r / d, 2.0 * self.r / d)
    }

    /// `ρg(s)` as `(offset, slope)`.
    pub fn ground_coefficients(&self) -> (f64, f64) {
        let d = 2.0 + self.r;
        (1.0 / d, -self.r / d)
    }
}

fn transition_independent_rates(set: &SusceptivitySet) -> Result<(f64, f64, f64)> {
    if !set.is_transition_independent(TRANSITION_INDEPENDENCE_TOL) {
        return Err(Error::Regime(
            "susceptivities depend on the transition indices; use the nullspace analysis".into(),
        ));
    }
    let plus = set.sum(0, 0, Sign::Plus);
    let minus = set.sum(0, 0, Sign::Minus);
    if !(minus.re > 0.0) {
        return Err(Error::Regime(format!(
            "Re (g|g)^- = {} is not positive: the formfactor misses the resonant surface",
            minus.re
        )));
    }
    Ok((plus.re, plus.im, minus.re))
}

/// Limit state reached from `rho0`, selected by its conserved `C`.
pub fn predict_stationary(rho0: &DensityMatrix3, set: &SusceptivitySet) -> Result<DensityMatrix3> {
    let (re_plus, im_plus, re_minus) = transition_independent_rates(set)?;
    if !(re_plus > ZERO_RATE_TOL * re_minus) {
        return Err(Error::Regime(format!(
            "Re (g|g)^+ = {re_plus:e} vanishes, so the state does not relax onto the family \
             (Im (g|g)^+ = {im_plus:e}); use the nullspace or beats analysis"
        )));
    }
    let report = rho0.check();
    if !report.valid {
        return Err(Error::Domain(format!(
            "initial state is not a density matrix: {}",
            report.violations.join("; ")
        )));
    }
    let r = re_plus / re_minus;
    let c = conserved_c(rho0);
    let s = (1.0 - c - c * r / 2.0) / (2.0 * (1.0 + r));
    let (lo, hi) = admissible_interval(r)?;
    // ρ0 passed the density test, so s is admissible up to rounding.
    family_state(r, s.clamp(lo, hi))
}

/// Undamped rotation of `D = ρ22 - ρ11 + ρ12 - ρ21`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatsDescriptor {
    /// `2 Im (g|g)^+`, rad per unit time.
    pub frequency: f64,
    /// `2 Re (g|g)^+`.
    pub damping: f64,
    /// `|D(0)|`, when an initial state is known.
    pub initial_modulus: Option<f64>,
}

/// [`BeatsDescriptor`] together with its verification along the exact
/// trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatsReport {
    pub descriptor: BeatsDescriptor,
    pub horizon: f64,
    /// Slope of the unwrapped phase of `D(t)`; `None` when `D(0) = 0`.
    pub measured_frequency: Option<f64>,
    /// `max_t | |D(t)| - |D(0)| |`
    pub modulus_drift: f64,
    /// `s(T)` at the horizon.
    pub s_final: f64,
    /// `(1 - C)/2`, the limit of `s(t)` without absorption.
    pub s_limit: f64,
    #[serde(skip)]
    pub trajectory: Option<crate::generator::Trajectory>,
}

pub const BEATS_PHASE_TOL: f64 = 1e-6;
pub const BEATS_MODULUS_TOL: f64 = 1e-8;
const SAMPLES_PER_PERIOD: f64 = 50.0;

fn unwrap_phases(values: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for z in values {
        let a = z.arg();
        if let Some(p) = prev {
            let mut d = a + offset - p;
            while d > std::f64::consts::PI {
                offset -= 2.0 * std::f64::consts::PI;
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                offset += 2.0 * std::f64::consts::PI;
                d += 2.0 * std::f64::consts::PI;
            }
        }
        let v = a + offset;
        out.push(v);
        prev = Some(v);
    }
    out
}

fn slope(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let sxx: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    sxy / sxx
}

/// Quantum-beat regime: `Re (g|g)^+ = 0`, `Re (g|g)^- > 0`.
pub fn beats(set: &SusceptivitySet, rho0: &DensityMatrix3) -> Result<BeatsReport> {
    let (re_plus, im_plus, re_minus) = transition_independent_rates(set)?;
    if re_plus.abs() > 1e-12 * set.scale().max(1.0) {
        return Err(Error::Regime(format!(
            "Re (g|g)^+ = {re_plus:e} is not zero: the state converges onto the stationary family"
        )));
    }
    let frequency = 2.0 * im_plus;
    let d0 = rho0.beat_combination();
    let descriptor = BeatsDescriptor {
        frequency,
        damping: 2.0 * re_plus,
        initial_modulus: Some(d0.norm()),
    };

    let periods_horizon = if frequency != 0.0 {
        10.0 * 2.0 * std::f64::consts::PI / frequency.abs()
    } else {
        0.0
    };
    let horizon = periods_horizon.max(10.0 / re_minus);
    let periods = frequency.abs() * horizon / (2.0 * std::f64::consts::PI);
    let samples = ((periods * SAMPLES_PER_PERIOD).ceil() as usize + 1).max(1001);

    let l = build_generator(set);
    let traj = exact_trajectory(&l, rho0, horizon, samples)?;
    let ds: Vec<Complex64> = traj.states.iter().map(|r| r.beat_combination()).collect();
    let modulus_drift = ds
        .iter()
        .map(|d| (d.norm() - d0.norm()).abs())
        .fold(0.0, f64::max);
    if modulus_drift > BEATS_MODULUS_TOL {
        return Err(Error::Consistency(format!(
            "|D(t)| drifted by {modulus_drift:.3e} in the undamped regime"
        )));
    }
    let measured_frequency = if d0.norm() > 1e-12 {
        let phases = unwrap_phases(&ds);
        let w = slope(&traj.times, &phases);
        if frequency != 0.0 {
            if (w - frequency).abs() > BEATS_PHASE_TOL * frequency.abs() {
                return Err(Error::Consistency(format!(
                    "phase of D advances at {w:.12e}, expected {frequency:.12e}"
                )));
            }
        } else {
            let max_dev = ds.iter().map(|d| (d - d0).norm()).fold(0.0, f64::max);
            if max_dev > BEATS_MODULUS_TOL {
                return Err(Error::Consistency(format!(
                    "D(t) moved by {max_dev:.3e} although the beat frequency is zero"
                )));
            }
        }
        Some(w)
    } else {
        None
    };
    let c = conserved_c(rho0);
    let s_limit = 0.5 * (1.0 - c);
    let s_final = traj.states.last().map(|r| r.ground_coherence()).unwrap_or(f64::NAN);
    if (s_final - s_limit).abs() > 1e-8 || !(-0.5 - 1e-10..=0.5 + 1e-10).contains(&s_limit) {
        return Err(Error::Consistency(format!(
            "s(t) settled at {s_final:.12e}, expected {s_limit:.12e} within [-1/2, 1/2]"
        )));
    }
    Ok(BeatsReport {
        descriptor,
        horizon,
        measured_frequency,
        modulus_drift,
        s_final,
        s_limit,
        trajectory: Some(traj),
    })
}

/// Affine fit `ρe(s)`, `ρg(s)` of a two-dimensional kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    /// `(offset, slope)` of `ρ33` in `s = Re ρ12`.
    pub rho_e: (f64, f64),
    /// `(offset, slope)` of `ρ11 = ρ22`.
    pub rho_g: (f64, f64),
    /// Einstein ratio implied by the fit, `ρe(0)/ρg(0)`.
    pub r: f64,
}

/// Affine set of stationary `V1` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFamily {
    /// Dimension of the affine set of trace-one stationary states.
    pub dimension: usize,
    /// Minimum-norm stationary point with unit trace.
    pub particular: StateRecord,
    /// Orthonormal traceless stationary directions.
    pub directions: Vec<StateRecord>,
    /// Present when the kernel has the single-parameter form of the
    /// trapped-state family.
    pub fit: Option<AffineFit>,
    pub descriptor: Option<FamilyDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum Stationary {
    Unique(StateRecord),
    Family(KernelFamily),
    Oscillatory(BeatsDescriptor),
    Frozen,
}

/// Classified stationary set of a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryResult {
    pub schema_version: u32,
    #[serde(flatten)]
    pub solution: Stationary,
    /// `‖L x‖` for the reported stationary point(s).
    pub residual: f64,
    /// Dimension of the kernel of the generator restricted to `V1`.
    pub kernel_dimension: usize,
}

fn v1_to_coords(v: &SVector<f64, 5>) -> Coords {
    let mut x = Coords::zeros();
    for (k, &i) in V1.iter().enumerate() {
        x[i] = v[k];
    }
    x
}

fn record(v: &SVector<f64, 5>) -> StateRecord {
    StateRecord::from(&DensityMatrix3::from_coords_unchecked(&v1_to_coords(v)))
}

/// Orthonormal basis of the kernel of the `V1` block, as columns.
pub fn v1_kernel(l: &Superoperator) -> Result<Vec<SVector<f64, 5>>> {
    let block = l.v1_block();
    let svd = nalgebra::SVD::try_new(block, false, true, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("SVD of the V1 block did not converge".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD returned no right singular vectors".into()))?;
    let sigma_max = svd.singular_values.max();
    let tol = KERNEL_TOL * sigma_max;
    let mut basis: Vec<SVector<f64, 5>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| sigma_max == 0.0 || s <= tol)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    // deterministic orientation
    for v in &mut basis {
        let pivot = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        if pivot < 0.0 {
            *v = -*v;
        }
    }
    Ok(basis)
}

fn fit_trapped_family(basis: &[SVector<f64, 5>]) -> Option<AffineFit> {
    let trace = |v: &SVector<f64, 5>| v[0] + v[1] + v[2];
    let a = SMatrix::<f64, 2, 2>::new(trace(&basis[0]), trace(&basis[1]), basis[0][3], basis[1][3]);
    let inv = a.try_inverse()?;
    let p_coef = inv * SVector::<f64, 2>::new(1.0, 0.0);
    let d_coef = inv * SVector::<f64, 2>::new(0.0, 1.0);
    let p = basis[0] * p_coef[0] + basis[1] * p_coef[1];
    let d = basis[0] * d_coef[0] + basis[1] * d_coef[1];
    let tol = 1e-9;
    let shaped = (p[0] - p[1]).abs() <= tol
        && (d[0] - d[1]).abs() <= tol
        && p[4].abs() <= tol
        && d[4].abs() <= tol
        && p[0] > tol;
    if !shaped {
        return None;
    }
    Some(AffineFit {
        rho_e: (p[2], d[2]),
        rho_g: (0.5 * (p[0] + p[1]), 0.5 * (d[0] + d[1])),
        r: p[2] / (0.5 * (p[0] + p[1])),
    })
}

/// Kernel of the generator on `V1` intersected with the unit-trace slice,
/// classified as unique, family, oscillatory or frozen.
pub fn solve_nullspace(l: &Superoperator) -> Result<StationaryResult> {
    let scale = l.norm_inf();
    if l.is_zero() {
        return Ok(StationaryResult {
            schema_version: crate::config::SCHEMA_VERSION,
            solution: Stationary::Frozen,
            residual: 0.0,
            kernel_dimension: 5,
        });
    }
    let block = l.v1_block();
    let eigs = eigenvalues(nalgebra::DMatrix::from_column_slice(5, 5, block.as_slice()))?;
    let tol = ZERO_RATE_TOL * scale;
    let rotation = eigs
        .iter()
        .filter(|z| z.re.abs() <= tol && z.im.abs() > tol)
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);

    let basis = v1_kernel(l)?;
    let k = basis.len();
    if k == 0 {
        return Err(Error::Consistency(
            "generator has no stationary state in V1 (trace preservation broken)".into(),
        ));
    }
    let trace_fn = SVector::<f64, 5>::new(1.0, 1.0, 1.0, 0.0, 0.0);
    let proj: Vec<f64> = basis.iter().map(|v| v.dot(&trace_fn)).collect();
    let pn2: f64 = proj.iter().map(|x| x * x).sum();
    if pn2 < 1e-20 {
        return Err(Error::Consistency(
            "kernel of the generator contains no unit-trace state".into(),
        ));
    }
    let particular = basis
        .iter()
        .zip(&proj)
        .fold(SVector::<f64, 5>::zeros(), |acc, (v, &c)| acc + v * (c / pn2));
    let u = particular.normalize();
    let mut directions: Vec<SVector<f64, 5>> = Vec::new();
    for v in &basis {
        let mut w = v - u * u.dot(v);
        for d in &directions {
            w -= d * d.dot(&w);
        }
        let n = w.norm();
        if n > 1e-8 {
            directions.push(w / n);
        }
    }
    let mut residual = (block * particular).norm();
    for d in &directions {
        residual = residual.max((block * d).norm());
    }

    let solution = if rotation > 0.0 {
        Stationary::Oscillatory(BeatsDescriptor {
            frequency: rotation,
            damping: 0.0,
            initial_modulus: None,
        })
    } else if k == 1 {
        let rho = DensityMatrix3::from_coords_unchecked(&v1_to_coords(&particular));
        let report = rho.check();
        if !report.valid {
            return Err(Error::Consistency(format!(
                "unique stationary point is not a density matrix: {}",
                report.violations.join("; ")
            )));
        }
        Stationary::Unique(StateRecord::from(&rho))
    } else {
        let fit = if k == 2 { fit_trapped_family(&basis) } else { None };
        let descriptor = fit.and_then(|f| FamilyDescriptor::new(f.r).ok());
        Stationary::Family(KernelFamily {
            dimension: k - 1,
            particular: record(&particular),
            directions: directions.iter().map(record).collect(),
            fit,
            descriptor,
        })
    };
    Ok(StationaryResult {
        schema_version: crate::config::SCHEMA_VERSION,
        solution,
        residual,
        kernel_dimension: k,
    })
}

/// Determinant of the stationary population equations for `(ρ11, ρ22)`
/// after eliminating `ρ33 = 1 - ρ11 - ρ22`, read off the generator.
pub fn population_determinant(l: &Superoperator) -> f64 {
    let m = l.matrix();
    let a = |row: usize, col: usize| m[(row, col)] - m[(row, 2)];
    a(1, 0) * a(0, 1) - a(1, 1) * a(0, 0)
}

/// Closed form of [`population_determinant`] when the transitions are
/// orthogonal: `-(4 R2+ R1- + 4 R2- R1+ + 4 R2+ R1+)` with `Rα± = Re (gα|gα)^±`.
pub fn orthogonal_population_determinant(set: &SusceptivitySet) -> f64 {
    let re = |a: usize, s: Sign| set.sum(a, a, s).re;
    let (p1, m1) = (re(0, Sign::Plus), re(0, Sign::Minus));
    let (p2, m2) = (re(1, Sign::Plus), re(1, Sign::Minus));
    -(2.0 * p2 * 2.0 * m1 + 2.0 * m2 * 2.0 * p1 + 2.0 * p2 * 2.0 * p1)
}
