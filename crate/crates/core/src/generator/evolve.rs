//! Time evolution: fixed-step RK4 and the exact propagator.

use serde::{Deserialize, Serialize};

use super::expm::expm;
use super::{Matrix9, Superoperator};
use crate::error::{Error, Result};
use crate::state::{Coords, DensityMatrix3};
use crate::stationary::conserved_c;

/// Samples below this minimal eigenvalue raise a positivity warning.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Sampled states along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix3>,
    pub min_eigenvalues: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    fn with_capacity(n: usize) -> Self {
        Trajectory {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            min_eigenvalues: Vec::with_capacity(n),
            warnings: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, x: &Coords) {
        let rho = DensityMatrix3::from_coords_unchecked(x).hermitized();
        let min = rho.min_eigenvalue();
        if min < -POSITIVITY_TOL {
            self.warnings
                .push(format!("positivity violated at t = {t:.6e}: min eigenvalue {min:.3e}"));
        }
        self.times.push(t);
        self.states.push(rho);
        self.min_eigenvalues.push(min);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix3> {
        self.states.last()
    }

    pub fn populations(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.states.iter().map(|r| {
            [
                r.entry(0, 0).re,
                r.entry(1, 1).re,
                r.entry(2, 2).re,
            ]
        })
    }

    /// `s(t) = (ρ12 + ρ21)/2`
    pub fn ground_coherence(&self) -> Vec<f64> {
        self.states.iter().map(|r| r.ground_coherence()).collect()
    }

    /// `C(t) = ρ11 + ρ22 - ρ12 - ρ21`
    pub fn conserved(&self) -> Vec<f64> {
        self.states.iter().map(conserved_c).collect()
    }

    /// `⟨A⟩(t) = ρ12 + ρ21`
    pub fn observable_a(&self) -> Vec<f64> {
        self.states.iter().map(|r| r.observable_a()).collect()
    }
}

fn check_time(name: &str, t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and non-negative, got {t}")))
    }
}

/// Classical RK4 with constant step, sampled at `samples` evenly spaced
/// times in `[0, horizon]`.
///
/// The step is the largest value `≤ dt` that lands on every sample time.
/// Samples are re-Hermitized; the trace is left alone so that drift stays
/// visible.
pub fn evolve_rk(
    l: &Superoperator,
    rho0: &DensityMatrix3,
    horizon: f64,
    dt: f64,
    samples: usize,
) -> Result<Trajectory> {
    check_time("horizon", horizon)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Usage(format!("step must be positive, got {dt}")));
    }
    if samples < 2 {
        return Err(Error::Usage(format!("need at least 2 samples, got {samples}")));
    }
    let radius = l.spectral_radius()?;
    if dt * radius >= 1.0 {
        return Err(Error::Usage(format!(
            "step {dt:.3e} violates the stability guard: dt times spectral radius {radius:.3e} \
             must stay below 1"
        )));
    }

    let intervals = samples - 1;
    let per_interval = ((horizon / (dt * intervals as f64)).ceil() as usize).max(1);
    let h = horizon / (intervals * per_interval) as f64;
    let m: &Matrix9 = l.matrix();

    let mut traj = Trajectory::with_capacity(samples);
    let mut y = rho0.coords();
    traj.push(0.0, &y);
    for k in 1..=intervals {
        for _ in 0..per_interval {
            let k1 = m * y;
            let k2 = m * (y + k1 * (0.5 * h));
            let k3 = m * (y + k2 * (0.5 * h));
            let k4 = m * (y + k3 * h);
            y += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        }
        traj.push(horizon * k as f64 / intervals as f64, &y);
    }
    Ok(traj)
}

/// `exp(t L) ρ0`.
pub fn evolve_exact(l: &Superoperator, rho0: &DensityMatrix3, t: f64) -> Result<DensityMatrix3> {
    check_time("time", t)?;
    if t == 0.0 {
        return Ok(*rho0);
    }
    let x = expm(&(l.matrix() * t)) * rho0.coords();
    Ok(DensityMatrix3::from_coords_unchecked(&x))
}

/// Exact states at `samples` evenly spaced times in `[0, horizon]`, by
/// repeated application of the one-interval propagator.
pub fn exact_trajectory(
    l: &Superoperator,
    rho0: &DensityMatrix3,
    horizon: f64,
    samples: usize,
) -> Result<Trajectory> {
    check_time("horizon", horizon)?;
    if samples < 2 {
        return Err(Error::Usage(format!("need at least 2 samples, got {samples}")));
    }
    let intervals = samples - 1;
    let step = expm(&(l.matrix() * (horizon / intervals as f64)));
    let mut traj = Trajectory::with_capacity(samples);
    let mut y = rho0.coords();
    traj.push(0.0, &y);
    for k in 1..=intervals {
        y = step * y;
        traj.push(horizon * k as f64 / intervals as f64, &y);
    }
    Ok(traj)
}

/// Fitted decay of the optical coherences compared with the spectral
/// prediction and the bound `‖ρ0(t)‖ ≤ e^{-ct} ‖ρ0(0)‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// Least-squares slope of `-ln ‖V0 block(t)‖`.
    pub fitted_rate: f64,
    /// `-(V0 spectral abscissa)`.
    pub spectral_rate: f64,
    pub bound_c: f64,
    /// Largest `‖ρ0(t)‖ / (‖ρ0(0)‖ e^{-ct})` over the samples.
    pub max_bound_ratio: f64,
    /// Whether the bound held to a relative slack of `1e-6`; `None` when
    /// `c` is not positive and the bound is vacuous.
    pub bound_holds: Option<bool>,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
}

pub const DECAY_SAMPLES: usize = 200;
pub const BOUND_SLACK: f64 = 1e-6;

pub fn v0_decay_check(l: &Superoperator, rho0: &DensityMatrix3, horizon: f64) -> Result<DecayReport> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let n0 = rho0.v0_norm();
    if n0 < 1e-10 {
        return Err(Error::Usage(format!(
            "initial state has no optical coherence to track (norm {n0:.3e})"
        )));
    }
    let traj = exact_trajectory(l, rho0, horizon, DECAY_SAMPLES + 1)?;
    let norms: Vec<f64> = traj.states.iter().map(|r| r.v0_norm()).collect();

    let c = l.decay_bound();
    let max_bound_ratio = traj
        .times
        .iter()
        .zip(&norms)
        .map(|(&t, &n)| {
            let envelope = n0 * (-c * t).exp();
            if n == 0.0 {
                0.0
            } else {
                n / envelope
            }
        })
        .fold(0.0, f64::max);

    let points: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&norms)
        .filter(|(_, &n)| n > 1e-250)
        .map(|(&t, &n)| (t, n.ln()))
        .collect();
    let fitted_rate = if points.len() < 2 {
        0.0
    } else {
        let k = points.len() as f64;
        let mt = points.iter().map(|p| p.0).sum::<f64>() / k;
        let my = points.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
        -sxy / sxx
    };
    let spectral_rate = -super::decompose_blocks(l)?.v0_spectral_abscissa;
    Ok(DecayReport {
        fitted_rate,
        spectral_rate,
        bound_c: c,
        max_bound_ratio,
        bound_holds: (c > 0.0).then_some(max_bound_ratio <= 1.0 + BOUND_SLACK),
        times: traj.times,
        norms,
    })
}
