//! Atomic states in the basis `(|1⟩, |2⟩, |3⟩)` and their real coordinates.
//!
//! Hermitian 3×3 matrices are identified with `R^9` through
//! `(ρ11, ρ22, ρ33, Re ρ12, Im ρ12, Re ρ13, Im ρ13, Re ρ23, Im ρ23)`.
//! The first five coordinates span the invariant subspace `V1` (populations
//! and ground coherence), the last four span `V0` (optical coherences).

use nalgebra::{Matrix3, SVector, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Coords = SVector<f64, 9>;
pub type CMatrix3 = Matrix3<Complex64>;

/// Coordinate indices spanning `V1`.
pub const V1: [usize; 5] = [0, 1, 2, 3, 4];
/// Coordinate indices spanning `V0`.
pub const V0: [usize; 4] = [5, 6, 7, 8];

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const EIGEN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;

pub fn to_coords(m: &CMatrix3) -> Coords {
    Coords::from([
        m[(0, 0)].re,
        m[(1, 1)].re,
        m[(2, 2)].re,
        m[(0, 1)].re,
        m[(0, 1)].im,
        m[(0, 2)].re,
        m[(0, 2)].im,
        m[(1, 2)].re,
        m[(1, 2)].im,
    ])
}

pub fn from_coords(x: &Coords) -> CMatrix3 {
    let c = Complex64::new;
    let r12 = c(x[3], x[4]);
    let r13 = c(x[5], x[6]);
    let r23 = c(x[7], x[8]);
    CMatrix3::new(
        c(x[0], 0.0),
        r12,
        r13,
        r12.conj(),
        c(x[1], 0.0),
        r23,
        r13.conj(),
        r23.conj(),
        c(x[2], 0.0),
    )
}

/// `(m + m†) / 2`
pub fn hermitize(m: &CMatrix3) -> CMatrix3 {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix3) -> Vector3<f64> {
    let mut ev = hermitize(m).symmetric_eigenvalues();
    ev.as_mut_slice().sort_by(f64::total_cmp);
    ev
}

/// Named initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Non-coupled (dark) state `(|1⟩ - |2⟩)/√2`.
    #[serde(rename = "NC")]
    NonCoupled,
    /// Coupled state `(|1⟩ + |2⟩)/√2`.
    #[serde(rename = "C")]
    Coupled,
    /// Maximally mixed state `I/3`.
    #[serde(rename = "mixed")]
    Mixed,
    /// Excited level `|3⟩`.
    #[serde(rename = "excited")]
    Excited,
}

/// A 3×3 density matrix, `entry(a, b) = ⟨a|ρ|b⟩`.
///
/// Constructed either through [`DensityMatrix3::new`], which checks the
/// density-matrix contract, or through the unchecked constructors used for
/// intermediate numerical states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix3 {
    m: CMatrix3,
}

impl DensityMatrix3 {
    pub fn new(m: CMatrix3) -> Result<Self> {
        let rho = DensityMatrix3 { m };
        let report = rho.check();
        if report.valid {
            Ok(rho)
        } else {
            Err(Error::Domain(format!(
                "not a density matrix: {}",
                report.violations.join("; ")
            )))
        }
    }

    pub fn from_matrix_unchecked(m: CMatrix3) -> Self {
        DensityMatrix3 { m }
    }

    pub fn from_coords(x: &Coords) -> Result<Self> {
        Self::new(from_coords(x))
    }

    pub fn from_coords_unchecked(x: &Coords) -> Self {
        DensityMatrix3 { m: from_coords(x) }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) real vector, normalized.
    pub fn pure_real(v: [f64; 3]) -> Self {
        let v = Vector3::from(v).normalize().map(|x| Complex64::new(x, 0.0));
        DensityMatrix3 { m: v * v.adjoint() }
    }

    pub fn preset(p: Preset) -> Self {
        let z = Complex64::new(0.0, 0.0);
        let c = |x: f64| Complex64::new(x, 0.0);
        match p {
            // Entries written out so the ±1/2 values are exact.
            Preset::NonCoupled => DensityMatrix3 {
                m: CMatrix3::new(c(0.5), c(-0.5), z, c(-0.5), c(0.5), z, z, z, z),
            },
            Preset::Coupled => DensityMatrix3 {
                m: CMatrix3::new(c(0.5), c(0.5), z, c(0.5), c(0.5), z, z, z, z),
            },
            Preset::Mixed => DensityMatrix3 {
                m: CMatrix3::from_diagonal_element(c(1.0 / 3.0)),
            },
            Preset::Excited => DensityMatrix3 {
                m: CMatrix3::new(z, z, z, z, z, z, z, z, c(1.0)),
            },
        }
    }

    pub fn matrix(&self) -> &CMatrix3 {
        &self.m
    }

    pub fn coords(&self) -> Coords {
        to_coords(&self.m)
    }

    /// `⟨a|ρ|b⟩` with 0-based indices.
    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.m[(a, b)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// `s = (ρ12 + ρ21)/2`
    pub fn ground_coherence(&self) -> f64 {
        0.5 * (self.m[(0, 1)] + self.m[(1, 0)]).re
    }

    /// Expectation of `A = |1⟩⟨2| + |2⟩⟨1|`, i.e. `ρ12 + ρ21`.
    pub fn observable_a(&self) -> f64 {
        (self.m[(0, 1)] + self.m[(1, 0)]).re
    }

    /// `D = ρ22 - ρ11 + ρ12 - ρ21`
    pub fn beat_combination(&self) -> Complex64 {
        self.m[(1, 1)] - self.m[(0, 0)] + self.m[(0, 1)] - self.m[(1, 0)]
    }

    /// Frobenius norm of the `V0` part (entries 13, 23 and their conjugates).
    pub fn v0_norm(&self) -> f64 {
        (2.0 * (self.m[(0, 2)].norm_sqr() + self.m[(1, 2)].norm_sqr())).sqrt()
    }

    pub fn is_v1_supported(&self, tol: f64) -> bool {
        self.m[(0, 2)].norm() <= tol
            && self.m[(1, 2)].norm() <= tol
            && self.m[(2, 0)].norm() <= tol
            && self.m[(2, 1)].norm() <= tol
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (self.m - self.m.adjoint()).norm()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.m)[0]
    }

    pub fn hermitized(&self) -> Self {
        DensityMatrix3 {
            m: hermitize(&self.m),
        }
    }

    /// Density-matrix test: trace 1, non-negative diagonal, Hermitian and,
    /// for `V1`-supported states, `|ρ12|² ≤ ρ11 ρ22`; otherwise a full
    /// eigenvalue test.
    pub fn check(&self) -> DensityCheck {
        let mut violations = Vec::new();
        let m = &self.m;
        if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return DensityCheck {
                valid: false,
                violations: vec!["non-finite entries".into()],
            };
        }
        let herm = self.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            violations.push(format!("not Hermitian (defect {herm:.3e})"));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            violations.push(format!("trace {} differs from 1", tr.re));
        }
        for a in 0..3 {
            let d = m[(a, a)].re;
            if d < -EIGEN_TOL {
                violations.push(format!("negative population rho{0}{0} = {d}", a + 1));
            }
        }
        if self.is_v1_supported(HERMITIAN_TOL) {
            let lhs = m[(0, 1)].norm_sqr();
            let rhs = m[(0, 0)].re * m[(1, 1)].re;
            if lhs > rhs + EIGEN_TOL {
                violations.push(format!(
                    "ground coherence violates |rho12|^2 <= rho11 rho22 ({lhs:.6e} > {rhs:.6e})"
                ));
            }
        } else {
            let min = self.min_eigenvalue();
            if min < -EIGEN_TOL {
                violations.push(format!("negative eigenvalue {min:.6e}"));
            }
        }
        DensityCheck {
            valid: violations.is_empty(),
            violations,
        }
    }
}

/// Outcome of [`DensityMatrix3::check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub valid: bool,
    pub violations: Vec<String>,
}

/// JSON form of a state: the nine real coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub re_rho12: f64,
    pub im_rho12: f64,
    pub re_rho13: f64,
    pub im_rho13: f64,
    pub re_rho23: f64,
    pub im_rho23: f64,
}

impl From<&DensityMatrix3> for StateRecord {
    fn from(rho: &DensityMatrix3) -> Self {
        let x = rho.coords();
        StateRecord {
            rho11: x[0],
            rho22: x[1],
            rho33: x[2],
            re_rho12: x[3],
            im_rho12: x[4],
            re_rho13: x[5],
            im_rho13: x[6],
            re_rho23: x[7],
            im_rho23: x[8],
        }
    }
}

impl StateRecord {
    pub fn coords(&self) -> Coords {
        Coords::from([
            self.rho11,
            self.rho22,
            self.rho33,
            self.re_rho12,
            self.im_rho12,
            self.re_rho13,
            self.im_rho13,
            self.re_rho23,
            self.im_rho23,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn presets_match_their_vectors() {
        let h = FRAC_1_SQRT_2;
        let nc = DensityMatrix3::pure_real([h, -h, 0.0]);
        let diff = (nc.matrix() - DensityMatrix3::preset(Preset::NonCoupled).matrix()).norm();
        assert!(diff < 1e-15);
        let c = DensityMatrix3::pure_real([h, h, 0.0]);
        let diff = (c.matrix() - DensityMatrix3::preset(Preset::Coupled).matrix()).norm();
        assert!(diff < 1e-15);
        for p in [Preset::NonCoupled, Preset::Coupled, Preset::Mixed, Preset::Excited] {
            assert!(DensityMatrix3::preset(p).check().valid, "{p:?}");
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let x = Coords::from([0.2, 0.3, 0.5, 0.1, -0.05, 0.02, 0.01, -0.03, 0.04]);
        assert_eq!(to_coords(&from_coords(&x)), x);
    }

    #[test]
    fn check_reports_violations() {
        let bad = DensityMatrix3::from_coords_unchecked(&Coords::from([
            0.5, 0.5, 0.0, 0.6, 0.0, 0.0, 0.0, 0.0, 0.0,
        ]));
        let report = bad.check();
        assert!(!report.valid);
        assert!(report.violations[0].contains("rho11 rho22"));
        let mixed = DensityMatrix3::preset(Preset::Mixed);
        assert!(mixed.check().valid);
        let off = DensityMatrix3::from_coords_unchecked(&Coords::from([
            0.5, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.3, 0.0,
        ]));
        assert!(off.check().violations.iter().any(|v| v.contains("eigenvalue")));
    }

    #[test]
    fn beat_combination_and_observable() {
        let rho = DensityMatrix3::from_coords_unchecked(&Coords::from([
            0.4, 0.3, 0.3, 0.1, 0.2, 0.0, 0.0, 0.0, 0.0,
        ]));
        assert!((rho.beat_combination() - Complex64::new(-0.1, 0.4)).norm() < 1e-15);
        assert!((rho.observable_a() - 0.2).abs() < 1e-15);
        assert!((rho.ground_coherence() - 0.1).abs() < 1e-15);
    }
}
