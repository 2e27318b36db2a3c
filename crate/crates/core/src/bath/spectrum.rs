//! Reservoir ingredients: dispersion law, radial formfactor profiles and
//! occupation spectra.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Isotropic power-law dispersion `ω(k) = |k|^p` in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSpec {
    #[serde(default = "DispersionSpec::default_exponent")]
    pub p: f64,
}

impl Default for DispersionSpec {
    fn default() -> Self {
        DispersionSpec { p: 1.0 }
    }
}

impl DispersionSpec {
    fn default_exponent() -> f64 {
        1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::Domain(format!(
                "dispersion exponent must be positive, got {}",
                self.p
            )));
        }
        Ok(())
    }

    /// Frequency at radius `r = |k|`.
    pub fn frequency(&self, r: f64) -> f64 {
        r.powf(self.p)
    }

    /// Radius of the resonant sphere `ω(k) = omega`.
    pub fn resonant_radius(&self, omega: f64) -> f64 {
        omega.powf(self.p.recip())
    }

    /// `dω/dr` at `r`.
    pub fn slope(&self, r: f64) -> f64 {
        self.p * r.powf(self.p - 1.0)
    }

    /// `(r - r*) / (ω(r) - ω(r*))`, continuous through `r = r*`.
    pub(crate) fn inverse_difference_quotient(&self, r: f64, r_star: f64) -> f64 {
        if self.p == 1.0 {
            return 1.0;
        }
        let u = (r - r_star) / r_star;
        if u == 0.0 {
            return self.slope(r_star).recip();
        }
        let denom = r_star.powf(self.p) * (self.p * u.ln_1p()).exp_m1();
        (r - r_star) / denom
    }
}

/// Real radial profile `g(r)` of a formfactor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RadialProfile {
    /// `A exp(-(r - r0)^2 / (2 σ^2))`
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `A γ^2 / ((r - r0)^2 + γ^2)`
    Lorentzian {
        amplitude: f64,
        center: f64,
        halfwidth: f64,
    },
    /// `A` on `[inner, outer]`, zero elsewhere.
    ShellConstant {
        amplitude: f64,
        inner: f64,
        outer: f64,
    },
}

impl Default for RadialProfile {
    fn default() -> Self {
        RadialProfile::Gaussian {
            amplitude: 1.0,
            center: 1.0,
            width: 0.5,
        }
    }
}

impl RadialProfile {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            RadialProfile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let z = (r - center) / width;
                amplitude * (-0.5 * z * z).exp()
            }
            RadialProfile::Lorentzian {
                amplitude,
                center,
                halfwidth,
            } => {
                let g2 = halfwidth * halfwidth;
                amplitude * g2 / ((r - center).powi(2) + g2)
            }
            RadialProfile::ShellConstant {
                amplitude,
                inner,
                outer,
            } => {
                if (inner..=outer).contains(&r) {
                    amplitude
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("formfactor {name} must be finite, got {v}")))
            }
        };
        match *self {
            RadialProfile::Gaussian {
                amplitude,
                center,
                width,
            } => {
                finite("amplitude", amplitude)?;
                finite("center", center)?;
                if !(width.is_finite() && width > 0.0) {
                    return Err(Error::Domain(format!(
                        "gaussian width must be positive, got {width}"
                    )));
                }
            }
            RadialProfile::Lorentzian {
                amplitude,
                center,
                halfwidth,
            } => {
                finite("amplitude", amplitude)?;
                finite("center", center)?;
                if !(halfwidth.is_finite() && halfwidth > 0.0) {
                    return Err(Error::Domain(format!(
                        "lorentzian halfwidth must be positive, got {halfwidth}"
                    )));
                }
            }
            RadialProfile::ShellConstant {
                amplitude,
                inner,
                outer,
            } => {
                finite("amplitude", amplitude)?;
                finite("inner radius", inner)?;
                finite("outer radius", outer)?;
                if !(inner >= 0.0 && inner < outer) {
                    return Err(Error::Domain(format!(
                        "shell radii must satisfy 0 <= inner < outer, got [{inner}, {outer}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Radii where the profile has a jump or a peak worth a panel edge.
    pub(crate) fn features(&self) -> Vec<f64> {
        match *self {
            RadialProfile::Gaussian { center, .. } | RadialProfile::Lorentzian { center, .. } => {
                vec![center]
            }
            RadialProfile::ShellConstant { inner, outer, .. } => vec![inner, outer],
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match *self {
            RadialProfile::Gaussian { amplitude, .. }
            | RadialProfile::Lorentzian { amplitude, .. }
            | RadialProfile::ShellConstant { amplitude, .. } => amplitude == 0.0,
        }
    }
}

/// Coupling of polarization `polarization` to transition `transition`
/// (both 0-based: index 0 is the first polarization / the `|1⟩ ↔ |3⟩`
/// transition).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormFactor {
    pub polarization: usize,
    pub transition: usize,
    pub profile: RadialProfile,
}

impl FormFactor {
    pub fn new(polarization: usize, transition: usize, profile: RadialProfile) -> Self {
        FormFactor {
            polarization,
            transition,
            profile,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.profile.eval(r)
    }
}

/// Mean photon number `N(k)` of the reservoir state, shared by both
/// polarizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OccupationSpectrum {
    /// Vacuum, `N ≡ 0`.
    Fock,
    /// Constant occupation.
    Flat { n: f64 },
    /// Planck law `1 / (exp(β ω(k)) - 1)`.
    Planck { beta: f64 },
    /// `n` for radii in `[lower, upper]`, zero elsewhere.
    ShiftedWindow { n: f64, lower: f64, upper: f64 },
}

impl Default for OccupationSpectrum {
    fn default() -> Self {
        OccupationSpectrum::Planck { beta: 1.0 }
    }
}

impl OccupationSpectrum {
    pub fn eval(&self, r: f64, dispersion: &DispersionSpec) -> f64 {
        match *self {
            OccupationSpectrum::Fock => 0.0,
            OccupationSpectrum::Flat { n } => n,
            OccupationSpectrum::Planck { beta } => (beta * dispersion.frequency(r)).exp_m1().recip(),
            OccupationSpectrum::ShiftedWindow { n, lower, upper } => {
                if (lower..=upper).contains(&r) {
                    n
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OccupationSpectrum::Fock => Ok(()),
            OccupationSpectrum::Flat { n } => check_occupation(n),
            OccupationSpectrum::Planck { beta } => {
                if beta.is_finite() && beta > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "inverse temperature must be positive, got {beta}"
                    )))
                }
            }
            OccupationSpectrum::ShiftedWindow { n, lower, upper } => {
                check_occupation(n)?;
                if lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower < upper {
                    Ok(())
                } else {
                    Err(Error::Domain(format!(
                        "occupation window must satisfy 0 <= lower < upper, got [{lower}, {upper}]"
                    )))
                }
            }
        }
    }

    pub(crate) fn features(&self) -> Vec<f64> {
        match *self {
            OccupationSpectrum::ShiftedWindow { lower, upper, .. } => vec![lower, upper],
            _ => Vec::new(),
        }
    }
}

fn check_occupation(n: f64) -> Result<()> {
    if n.is_finite() && n >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "occupation number must be finite and non-negative, got {n}"
        )))
    }
}
