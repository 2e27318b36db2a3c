//! The master-equation generator and its invariant-subspace structure.
//!
//! [`master_rhs`] transcribes the stochastic-limit master equation for the
//! degenerate Λ system term by term: for every polarization `j` and
//! transition `α` a Lamb-shift commutator driven by the principal parts and
//! a dissipator driven by the resonant parts, plus the `α ≠ β` cross terms
//! which couple the two ground levels. Both transitions end on the excited
//! level `|3⟩`, i.e. the lowering operators are `|1⟩⟨3|` and `|2⟩⟨3|`.
//!
//! [`build_generator`] turns it into a real 9×9 matrix acting on the
//! coordinates of [`crate::state`].

pub mod evolve;
pub mod expm;

use nalgebra::{DMatrix, SMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{Sign, SusceptivitySet};
use crate::error::{Error, Result};
use crate::state::{from_coords, to_coords, CMatrix3, Coords, DensityMatrix3, V0, V1};

pub use evolve::{evolve_exact, evolve_rk, v0_decay_check, DecayReport, Trajectory};

pub type Matrix9 = SMatrix<f64, 9, 9>;

fn unit(a: usize, b: usize) -> CMatrix3 {
    let mut m = CMatrix3::zeros();
    m[(a, b)] = Complex64::new(1.0, 0.0);
    m
}

/// Right-hand side `dρ/dt` of the master equation.
pub fn master_rhs(set: &SusceptivitySet, rho: &CMatrix3) -> CMatrix3 {
    let i = Complex64::i();
    let commutator = |x: &CMatrix3| rho * x - x * rho;
    let anticommutator = |x: &CMatrix3| rho * x + x * rho;
    let excited = unit(2, 2);
    let rho33 = rho[(2, 2)];

    let mut d = CMatrix3::zeros();
    for j in 0..2 {
        for a in 0..2 {
            let emit = set.entry(j, a, a, Sign::Minus);
            let absorb = set.entry(j, a, a, Sign::Plus);
            let ground = unit(a, a);
            d += commutator(&excited) * (i * emit.principal.value);
            d -= commutator(&ground) * (i * absorb.principal.value);
            d += (ground * rho33 - anticommutator(&excited).scale(0.5)).scale(2.0 * emit.resonant);
            d += (excited * rho[(a, a)] - anticommutator(&ground).scale(0.5)).scale(2.0 * absorb.resonant);
        }
        for (a, b) in [(0, 1), (1, 0)] {
            let emit = set.entry(j, a, b, Sign::Minus);
            let absorb = set.entry(j, a, b, Sign::Plus);
            let flip = unit(a, b);
            d -= commutator(&flip) * (i * absorb.principal.value);
            d += unit(b, a) * (rho33 * 2.0 * emit.resonant);
            d += (excited * rho[(b, a)] - anticommutator(&flip).scale(0.5)).scale(2.0 * absorb.resonant);
        }
    }
    d
}

/// Real 9×9 representation of the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    matrix: Matrix9,
    decay_bound: f64,
}

impl Superoperator {
    /// Wrap an arbitrary matrix; the optical-coherence decay bound is 0.
    pub fn from_matrix(matrix: Matrix9) -> Self {
        Superoperator {
            matrix,
            decay_bound: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::from_matrix(Matrix9::zeros())
    }

    pub fn matrix(&self) -> &Matrix9 {
        &self.matrix
    }

    /// The bound `c` on the decay rate of the `V0` block (half the smallest
    /// diagonal resonant susceptivity), 0 for a bare matrix.
    pub fn decay_bound(&self) -> f64 {
        self.decay_bound
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&x| x == 0.0)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..9)
            .map(|r| self.matrix.row(r).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    pub fn apply_coords(&self, x: &Coords) -> Coords {
        self.matrix * x
    }

    /// Restriction to the five `V1` coordinates.
    pub fn v1_block(&self) -> SMatrix<f64, 5, 5> {
        SMatrix::from_fn(|r, c| self.matrix[(V1[r], V1[c])])
    }

    /// Restriction to the four `V0` coordinates.
    pub fn v0_block(&self) -> SMatrix<f64, 4, 4> {
        SMatrix::from_fn(|r, c| self.matrix[(V0[r], V0[c])])
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        eigenvalues(DMatrix::from_column_slice(9, 9, self.matrix.as_slice()))
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }
}

/// Eigenvalues of a real square matrix through its real Schur form.
pub(crate) fn eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(m, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Assemble the generator from the susceptivities.
pub fn build_generator(set: &SusceptivitySet) -> Superoperator {
    let mut matrix = Matrix9::zeros();
    for k in 0..9 {
        let mut e = Coords::zeros();
        e[k] = 1.0;
        let column = to_coords(&master_rhs(set, &from_coords(&e)));
        matrix.set_column(k, &column);
    }
    Superoperator {
        matrix,
        decay_bound: set.decay_bound().max(0.0),
    }
}

/// `dρ/dt` for the state `rho`; Hermitian and traceless.
pub fn apply(l: &Superoperator, rho: &DensityMatrix3) -> CMatrix3 {
    from_coords(&l.apply_coords(&rho.coords()))
}

/// Invariant-subspace diagnostics of a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    /// Largest `|L|` entry mapping `V0` coordinates into `V1`.
    pub v0_to_v1_leakage: f64,
    /// Largest `|L|` entry mapping `V1` coordinates into `V0`.
    pub v1_to_v0_leakage: f64,
    /// Largest real part of the eigenvalues of the `V0` block.
    pub v0_spectral_abscissa: f64,
    /// Smallest decay rate among the `V1` eigenvalues with non-zero real
    /// part (0 when there is none).
    pub v1_spectral_gap: f64,
    /// Decay bound `c` of the optical coherences.
    pub coherence_decay_bound: f64,
}

impl BlockReport {
    /// Slowest relaxation rate over both blocks, ignoring conserved and
    /// purely oscillating modes.
    pub fn relaxation_gap(&self) -> f64 {
        let v0 = -self.v0_spectral_abscissa;
        match (self.v1_spectral_gap > 0.0, v0 > 0.0) {
            (true, true) => self.v1_spectral_gap.min(v0),
            (true, false) => self.v1_spectral_gap,
            (false, true) => v0,
            (false, false) => 0.0,
        }
    }
}

/// Relative threshold below which a real part counts as zero.
pub const ZERO_RATE_TOL: f64 = 1e-10;

pub fn decompose_blocks(l: &Superoperator) -> Result<BlockReport> {
    let m = l.matrix();
    let mut v0_to_v1 = 0.0f64;
    let mut v1_to_v0 = 0.0f64;
    for &r in &V1 {
        for &c in &V0 {
            v0_to_v1 = v0_to_v1.max(m[(r, c)].abs());
            v1_to_v0 = v1_to_v0.max(m[(c, r)].abs());
        }
    }
    let v0 = l.v0_block();
    let v0_eigs = eigenvalues(DMatrix::from_column_slice(4, 4, v0.as_slice()))?;
    let v0_spectral_abscissa = v0_eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);

    let v1 = l.v1_block();
    let tol = ZERO_RATE_TOL * l.norm_inf().max(f64::MIN_POSITIVE);
    let v1_spectral_gap = eigenvalues(DMatrix::from_column_slice(5, 5, v1.as_slice()))?
        .iter()
        .filter(|z| z.re < -tol)
        .map(|z| -z.re)
        .fold(f64::INFINITY, f64::min);
    Ok(BlockReport {
        v0_to_v1_leakage: v0_to_v1,
        v1_to_v0_leakage: v1_to_v0,
        v0_spectral_abscissa,
        v1_spectral_gap: if v1_spectral_gap.is_finite() {
            v1_spectral_gap
        } else {
            0.0
        },
        coherence_decay_bound: l.decay_bound(),
    })
}
