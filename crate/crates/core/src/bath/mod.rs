//! Generalized susceptivities of the reservoir.
//!
//! For a pair of formfactors sharing the polarization `i` the susceptivity
//! splits into a resonant part, an integral over the sphere `ω(k) = ω`, and
//! a principal-value part:
//!
//! ```text
//! (g_a|g_b)^± = π ∫ dk g_a g_b W δ(ω(k) - ω)  +  i · ( -P.P. ∫ dk g_a g_b W / (ω(k) - ω) )
//! ```
//!
//! with `W = N` for the `+` (absorption) sign and `W = N + 1` for the `-`
//! (emission) sign. Profiles are real and radial, so the angular integrals
//! are analytic and both parts reduce to one-dimensional radial integrals.

pub mod quadrature;
pub mod spectrum;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use quadrature::{Estimate, Quadrature};
pub use spectrum::{DispersionSpec, FormFactor, OccupationSpectrum, RadialProfile};

/// `+` weighs the integrand with `N`, `-` with `N + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    fn weight(self, occupation: f64) -> f64 {
        match self {
            Sign::Plus => occupation,
            Sign::Minus => occupation + 1.0,
        }
    }
}

/// Everything needed to evaluate the susceptivities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default)]
    pub dispersion: DispersionSpec,
    /// Profiles indexed `[polarization][transition]`.
    #[serde(default)]
    pub formfactors: [[RadialProfile; 2]; 2],
    #[serde(default)]
    pub occupation: OccupationSpectrum,
    #[serde(default = "BathConfig::default_bohr_frequency")]
    pub bohr_frequency: f64,
    /// Ultraviolet cutoff radius; defaults to 20 times the resonant radius.
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(skip)]
    pub quadrature: Quadrature,
}

impl Default for BathConfig {
    fn default() -> Self {
        BathConfig {
            dispersion: DispersionSpec::default(),
            formfactors: Default::default(),
            occupation: OccupationSpectrum::default(),
            bohr_frequency: 1.0,
            cutoff: None,
            quadrature: Quadrature::default(),
        }
    }
}

impl BathConfig {
    fn default_bohr_frequency() -> f64 {
        1.0
    }

    /// Same profile on every polarization and transition.
    pub fn uniform(profile: RadialProfile, occupation: OccupationSpectrum) -> Self {
        BathConfig {
            formfactors: [[profile; 2]; 2],
            occupation,
            ..Default::default()
        }
    }

    pub fn formfactor(&self, polarization: usize, transition: usize) -> FormFactor {
        FormFactor::new(
            polarization,
            transition,
            self.formfactors[polarization][transition],
        )
    }

    pub fn resonant_radius(&self) -> f64 {
        self.dispersion.resonant_radius(self.bohr_frequency)
    }

    pub fn effective_cutoff(&self) -> f64 {
        self.cutoff.unwrap_or_else(|| 20.0 * self.resonant_radius())
    }

    pub fn validate(&self) -> Result<()> {
        self.dispersion.validate()?;
        check_frequency(self.bohr_frequency)?;
        for row in &self.formfactors {
            for profile in row {
                profile.validate()?;
            }
        }
        self.occupation.validate()?;
        let r_star = self.resonant_radius();
        let cutoff = self.effective_cutoff();
        if !(cutoff.is_finite() && cutoff > r_star) {
            return Err(Error::Domain(format!(
                "cutoff {cutoff} must exceed the resonant radius {r_star}"
            )));
        }
        if !(self.quadrature.abs_tol > 0.0 && self.quadrature.max_panels > 0) {
            return Err(Error::Domain(
                "quadrature tolerance and panel budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_frequency(omega: f64) -> Result<()> {
    if omega.is_finite() && omega > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "Bohr frequency must be positive, got {omega}"
        )))
    }
}

fn check_pair(ga: &FormFactor, gb: &FormFactor) -> Result<()> {
    if ga.polarization != gb.polarization {
        return Err(Error::Usage(format!(
            "formfactors belong to different polarizations ({} and {})",
            ga.polarization + 1,
            gb.polarization + 1
        )));
    }
    Ok(())
}

/// Resonant (delta-function) part `π ∫ dk g_a g_b W δ(ω(k) - ω)`.
///
/// For `ω(k) = |k|^p` the sphere has radius `r* = ω^{1/p}`; the angular
/// integral gives `4π r*²` and the delta contributes `1 / ω'(r*)`.
pub fn resonant_part(
    ga: &FormFactor,
    gb: &FormFactor,
    occupation: &OccupationSpectrum,
    dispersion: &DispersionSpec,
    omega: f64,
    sign: Sign,
) -> Result<f64> {
    check_frequency(omega)?;
    check_pair(ga, gb)?;
    let r = dispersion.resonant_radius(omega);
    let w = sign.weight(occupation.eval(r, dispersion));
    Ok(PI * 4.0 * PI * r * r * ga.eval(r) * gb.eval(r) * w / dispersion.slope(r))
}

/// Principal value `P.P. ∫_0^Λ f(r) / (r - r*) dr` by singularity
/// subtraction: the regular integrand `(f(r) - f(r*)) / (r - r*)` is
/// integrated adaptively on `[0, r*]` and `[r*, Λ]` and the subtracted pole
/// contributes `f(r*) ln((Λ - r*) / r*)`.
///
/// `breaks` are extra panel edges (discontinuities of `f`); those outside
/// `(0, Λ)` are ignored.
pub fn principal_value<F: Fn(f64) -> f64>(
    f: F,
    r_star: f64,
    cutoff: f64,
    breaks: &[f64],
    quadrature: &Quadrature,
) -> Result<Estimate> {
    if !(r_star > 0.0 && r_star.is_finite()) {
        return Err(Error::Domain(format!(
            "pole location must be positive, got {r_star}"
        )));
    }
    if !(cutoff.is_finite() && cutoff > r_star) {
        return Err(Error::Domain(format!(
            "cutoff {cutoff} must exceed the resonant radius {r_star}"
        )));
    }
    let f_star = f(r_star);
    let mut points = vec![0.0, r_star, cutoff];
    points.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < cutoff));
    points.sort_by(f64::total_cmp);
    points.dedup();
    let regular = |r: f64| (f(r) - f_star) / (r - r_star);
    let body = quadrature.integrate_pieces(regular, &points)?;
    let pole = f_star * ((cutoff - r_star) / r_star).ln();
    Ok(Estimate {
        value: body.value + pole,
        error: body.error,
    })
}

/// Principal-value part `-P.P. ∫_{|k|<Λ} dk g_a g_b W / (ω(k) - ω)`, the
/// imaginary part of the susceptivity.
#[allow(clippy::too_many_arguments)]
pub fn principal_part(
    ga: &FormFactor,
    gb: &FormFactor,
    occupation: &OccupationSpectrum,
    dispersion: &DispersionSpec,
    omega: f64,
    sign: Sign,
    cutoff: f64,
    quadrature: &Quadrature,
) -> Result<Estimate> {
    check_frequency(omega)?;
    check_pair(ga, gb)?;
    let r_star = dispersion.resonant_radius(omega);
    if !(cutoff.is_finite() && cutoff > r_star) {
        return Err(Error::Domain(format!(
            "cutoff {cutoff} must exceed the resonant radius {r_star}"
        )));
    }
    if ga.profile.is_identically_zero()
        || gb.profile.is_identically_zero()
        || (sign == Sign::Plus && *occupation == OccupationSpectrum::Fock)
    {
        return Ok(Estimate::ZERO);
    }
    let radial = |r: f64| {
        4.0 * PI
            * r
            * r
            * ga.eval(r)
            * gb.eval(r)
            * sign.weight(occupation.eval(r, dispersion))
            * dispersion.inverse_difference_quotient(r, r_star)
    };
    let mut breaks = ga.profile.features();
    breaks.extend(gb.profile.features());
    breaks.extend(occupation.features());
    let pv = principal_value(radial, r_star, cutoff, &breaks, quadrature)?;
    Ok(Estimate {
        value: -pv.value,
        error: pv.error,
    })
}

/// One susceptivity with the quadrature error of its principal part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptivity {
    pub resonant: f64,
    pub principal: Estimate,
}

impl Susceptivity {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.resonant, self.principal.value)
    }
}

/// `(g_{iα}|g_{iβ})^±_ω` for the configuration.
pub fn susceptivity(
    polarization: usize,
    alpha: usize,
    beta: usize,
    sign: Sign,
    config: &BathConfig,
) -> Result<Susceptivity> {
    if polarization > 1 || alpha > 1 || beta > 1 {
        return Err(Error::Usage(format!(
            "indices must be 0 or 1, got polarization {polarization}, transitions ({alpha}, {beta})"
        )));
    }
    let ga = config.formfactor(polarization, alpha);
    let gb = config.formfactor(polarization, beta);
    let omega = config.bohr_frequency;
    let resonant = resonant_part(&ga, &gb, &config.occupation, &config.dispersion, omega, sign)?;
    let principal = principal_part(
        &ga,
        &gb,
        &config.occupation,
        &config.dispersion,
        omega,
        sign,
        config.effective_cutoff(),
        &config.quadrature,
    )?;
    Ok(Susceptivity {
        resonant,
        principal,
    })
}

type Entries = [[[[Susceptivity; 2]; 2]; 2]; 2];

/// All sixteen susceptivities `[i][α][β][sign]`, their polarization sums
/// `(g_α|g_β)^±` and the Einstein ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SusceptivitySet {
    pub bohr_frequency: f64,
    entries: Entries,
    sums: [[[Susceptivity; 2]; 2]; 2],
    einstein_ratio: Option<f64>,
}

impl SusceptivitySet {
    /// Assemble a set from explicit values, indexed `[i][α][β][sign]`.
    pub fn from_values(bohr_frequency: f64, values: [[[[Complex64; 2]; 2]; 2]; 2]) -> Self {
        let entries = values.map(|pol| {
            pol.map(|row| {
                row.map(|pair| {
                    pair.map(|c| Susceptivity {
                        resonant: c.re,
                        principal: Estimate::exact(c.im),
                    })
                })
            })
        });
        Self::from_entries(bohr_frequency, entries)
    }

    /// Transition-independent set whose polarization sums equal `plus` and
    /// `minus`, split evenly over the two polarizations.
    pub fn uniform(bohr_frequency: f64, plus: Complex64, minus: Complex64) -> Self {
        let pair = [plus * 0.5, minus * 0.5];
        Self::from_values(bohr_frequency, [[[pair; 2]; 2]; 2])
    }

    fn from_entries(bohr_frequency: f64, entries: Entries) -> Self {
        let mut sums = [[[Susceptivity {
            resonant: 0.0,
            principal: Estimate::ZERO,
        }; 2]; 2]; 2];
        for (a, row) in sums.iter_mut().enumerate() {
            for (b, pair) in row.iter_mut().enumerate() {
                for (s, sum) in pair.iter_mut().enumerate() {
                    for pol in &entries {
                        let e = pol[a][b][s];
                        sum.resonant += e.resonant;
                        sum.principal.value += e.principal.value;
                        sum.principal.error += e.principal.error;
                    }
                }
            }
        }
        let mut set = SusceptivitySet {
            bohr_frequency,
            entries,
            sums,
            einstein_ratio: None,
        };
        set.einstein_ratio = einstein_ratio(&set).ok();
        set
    }

    /// `(g_{iα}|g_{iβ})^±`
    pub fn get(&self, polarization: usize, alpha: usize, beta: usize, sign: Sign) -> Complex64 {
        self.entries[polarization][alpha][beta][sign.index()].value()
    }

    pub fn entry(&self, polarization: usize, alpha: usize, beta: usize, sign: Sign) -> &Susceptivity {
        &self.entries[polarization][alpha][beta][sign.index()]
    }

    /// `(g_α|g_β)^± = Σ_i (g_{iα}|g_{iβ})^±`
    pub fn sum(&self, alpha: usize, beta: usize, sign: Sign) -> Complex64 {
        self.sums[alpha][beta][sign.index()].value()
    }

    pub fn sum_entry(&self, alpha: usize, beta: usize, sign: Sign) -> &Susceptivity {
        &self.sums[alpha][beta][sign.index()]
    }

    /// Cached [`einstein_ratio`]; `None` when undefined.
    pub fn ratio(&self) -> Option<f64> {
        self.einstein_ratio
    }

    /// Largest magnitude among the polarization sums.
    pub fn scale(&self) -> f64 {
        self.sums
            .iter()
            .flatten()
            .flatten()
            .map(|s| s.value().norm())
            .fold(0.0, f64::max)
    }

    /// Whether `(g_α|g_β)^±` is the same for all `α, β` to relative
    /// tolerance `rel_tol`.
    pub fn is_transition_independent(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.scale();
        Sign::BOTH.iter().all(|&s| {
            let reference = self.sum(0, 0, s);
            (0..2).all(|a| (0..2).all(|b| (self.sum(a, b, s) - reference).norm() <= tol))
        })
    }

    /// Rate bound `c` with `2c = min_{j,α,±} Re (g_{jα}|g_{jα})^±`.
    pub fn decay_bound(&self) -> f64 {
        let mut min = f64::INFINITY;
        for j in 0..2 {
            for a in 0..2 {
                for s in Sign::BOTH {
                    min = min.min(self.get(j, a, a, s).re);
                }
            }
        }
        0.5 * min
    }

    pub fn to_document(&self, cutoff: Option<f64>) -> SusceptivityDocument {
        let mut entries = Vec::with_capacity(16);
        for i in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    for s in Sign::BOTH {
                        let e = self.entry(i, a, b, s);
                        entries.push(EntryRecord {
                            polarization: Some(i + 1),
                            alpha: a + 1,
                            beta: b + 1,
                            sign: s,
                            re: e.resonant,
                            im: e.principal.value,
                            im_error: e.principal.error,
                        });
                    }
                }
            }
        }
        let mut polarization_sums = Vec::with_capacity(8);
        for a in 0..2 {
            for b in 0..2 {
                for s in Sign::BOTH {
                    let e = self.sum_entry(a, b, s);
                    polarization_sums.push(EntryRecord {
                        polarization: None,
                        alpha: a + 1,
                        beta: b + 1,
                        sign: s,
                        re: e.resonant,
                        im: e.principal.value,
                        im_error: e.principal.error,
                    });
                }
            }
        }
        SusceptivityDocument {
            schema_version: crate::config::SCHEMA_VERSION,
            bohr_frequency: self.bohr_frequency,
            cutoff,
            entries,
            polarization_sums,
            einstein_ratio: self.einstein_ratio,
        }
    }
}

/// JSON form of a [`SusceptivitySet`], as emitted by `cpt sus`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SusceptivityDocument {
    pub schema_version: u32,
    pub bohr_frequency: f64,
    pub cutoff: Option<f64>,
    pub entries: Vec<EntryRecord>,
    pub polarization_sums: Vec<EntryRecord>,
    pub einstein_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<usize>,
    pub alpha: usize,
    pub beta: usize,
    pub sign: Sign,
    pub re: f64,
    pub im: f64,
    pub im_error: f64,
}

impl SusceptivityDocument {
    /// Rebuild the set from its document form.
    pub fn to_set(&self) -> Result<SusceptivitySet> {
        let zero = Susceptivity {
            resonant: 0.0,
            principal: Estimate::ZERO,
        };
        let mut entries = [[[[zero; 2]; 2]; 2]; 2];
        let mut seen = 0usize;
        for rec in &self.entries {
            let i = rec.polarization.unwrap_or(0);
            if !(1..=2).contains(&i) || !(1..=2).contains(&rec.alpha) || !(1..=2).contains(&rec.beta)
            {
                return Err(Error::Schema {
                    path: "entries".into(),
                    message: format!("index out of range in {rec:?}"),
                });
            }
            entries[i - 1][rec.alpha - 1][rec.beta - 1][rec.sign.index()] = Susceptivity {
                resonant: rec.re,
                principal: Estimate {
                    value: rec.im,
                    error: rec.im_error,
                },
            };
            seen += 1;
        }
        if seen != 16 {
            return Err(Error::Schema {
                path: "entries".into(),
                message: format!("expected 16 entries, found {seen}"),
            });
        }
        Ok(SusceptivitySet::from_entries(self.bohr_frequency, entries))
    }
}

/// Evaluate all susceptivities of `config`.
pub fn build_susceptivity_set(config: &BathConfig) -> Result<SusceptivitySet> {
    config.validate()?;
    let zero = Susceptivity {
        resonant: 0.0,
        principal: Estimate::ZERO,
    };
    let mut entries = [[[[zero; 2]; 2]; 2]; 2];
    for (i, pol) in entries.iter_mut().enumerate() {
        for (a, row) in pol.iter_mut().enumerate() {
            for (b, pair) in row.iter_mut().enumerate() {
                for s in Sign::BOTH {
                    pair[s.index()] = susceptivity(i, a, b, s, config)?;
                }
            }
        }
    }
    Ok(SusceptivitySet::from_entries(config.bohr_frequency, entries))
}

/// `R_ω = Re (g|g)^+ / Re (g|g)^-`, using the diagonal polarization sums
/// accumulated over both transitions (identical to the single-transition
/// ratio when the formfactors do not depend on the transition).
pub fn einstein_ratio(set: &SusceptivitySet) -> Result<f64> {
    let plus: f64 = (0..2).map(|a| set.sum(a, a, Sign::Plus).re).sum();
    let minus: f64 = (0..2).map(|a| set.sum(a, a, Sign::Minus).re).sum();
    if !(minus > 0.0) {
        return Err(Error::Regime(format!(
            "Einstein ratio undefined: Re (g|g)^- = {minus} is not positive \
             (the formfactor support misses the resonant surface)"
        )));
    }
    Ok(plus / minus)
}
