//! Run configuration documents.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bath::{BathConfig, OccupationSpectrum, Quadrature};
use crate::error::{Error, Result};
use crate::state::{Coords, DensityMatrix3, Preset};

/// Version of every JSON document read or written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "CPT_OUTPUT_DIR";

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Initial state: a preset name or the nine real coordinates
/// `ρ11, ρ22, ρ33, Re ρ12, Im ρ12, Re ρ13, Im ρ13, Re ρ23, Im ρ23`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Preset(Preset),
    Coordinates([f64; 9]),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Preset(Preset::Mixed)
    }
}

impl InitialState {
    pub fn density(&self) -> Result<DensityMatrix3> {
        match self {
            InitialState::Preset(p) => Ok(DensityMatrix3::preset(*p)),
            InitialState::Coordinates(x) => DensityMatrix3::from_coords(&Coords::from(*x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Runge-Kutta step; chosen from the generator's spectral radius when absent.
    pub dt: Option<f64>,
    pub horizon: f64,
    /// Number of output samples including `t = 0`.
    pub samples: usize,
    /// Absolute tolerance of the bath quadratures.
    pub quadrature_tolerance: f64,
    pub max_panels: usize,
    /// Replaces `bath.cutoff` when set.
    pub cutoff: Option<f64>,
}

impl Default for Numerics {
    fn default() -> Self {
        let q = Quadrature::default();
        Numerics {
            dt: None,
            horizon: 20.0,
            samples: 201,
            quadrature_tolerance: q.abs_tol,
            max_panels: q.max_panels,
            cutoff: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Family parameter at the Einstein ratio of the bath.
    S,
    /// Flat occupation `N`.
    NBar,
    /// Inverse temperature of a Planck occupation.
    Beta,
    /// Bohr frequency.
    Omega,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::S => "s",
            SweepParameter::NBar => "n_bar",
            SweepParameter::Beta => "beta",
            SweepParameter::Omega => "omega",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            parameter: SweepParameter::NBar,
            grid: vec![0.0, 1.0, 10.0, 100.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Artifacts go to standard output when unset.
    pub dir: Option<PathBuf>,
    /// Format of tabular artifacts.
    pub format: OutputFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            bath: BathConfig::default(),
            initial_state: InitialState::default(),
            numerics: Numerics::default(),
            sweep: None,
            seed: 0,
            output: OutputSpec::default(),
        }
    }
}

fn schema(path: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Deserializes `text` as `T`, reporting the field path on failure.
pub fn parse_document<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(&path, e.into_inner().to_string())
    })
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let config: RunConfig = parse_document(text)?;
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        let n = &self.numerics;
        if n.dt.is_some_and(|dt| !(dt.is_finite() && dt > 0.0)) {
            return Err(schema("numerics.dt", "must be positive"));
        }
        if !(n.horizon.is_finite() && n.horizon >= 0.0) {
            return Err(schema("numerics.horizon", "must be non-negative"));
        }
        if n.samples < 2 {
            return Err(schema("numerics.samples", "at least two samples are needed"));
        }
        if !(n.quadrature_tolerance.is_finite() && n.quadrature_tolerance > 0.0) {
            return Err(schema("numerics.quadrature_tolerance", "must be positive"));
        }
        if n.max_panels == 0 {
            return Err(schema("numerics.max_panels", "must be positive"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.grid.is_empty() {
                return Err(schema("sweep.grid", "grid is empty"));
            }
            if let Some(i) = sweep.grid.iter().position(|x| !x.is_finite()) {
                return Err(schema(&format!("sweep.grid[{i}]"), "not a finite number"));
            }
        }
        self.bath_config().validate()?;
        self.initial_state.density()?;
        Ok(())
    }

    /// Bath configuration with the numerics overrides applied.
    pub fn bath_config(&self) -> BathConfig {
        let mut bath = self.bath.clone();
        bath.quadrature = Quadrature {
            abs_tol: self.numerics.quadrature_tolerance,
            max_panels: self.numerics.max_panels,
            ..bath.quadrature
        };
        if let Some(cutoff) = self.numerics.cutoff {
            bath.cutoff = Some(cutoff);
        }
        bath
    }

    pub fn initial_density(&self) -> Result<DensityMatrix3> {
        self.initial_state.density()
    }

    /// Output directory, with the environment override.
    pub fn output_dir(&self) -> Option<PathBuf> {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
            _ => self.output.dir.clone(),
        }
    }
}

/// Bath with one sweep parameter replaced.
pub fn swept_bath(base: &BathConfig, parameter: SweepParameter, value: f64) -> BathConfig {
    let mut bath = base.clone();
    match parameter {
        SweepParameter::S => {}
        SweepParameter::NBar => bath.occupation = OccupationSpectrum::Flat { n: value },
        SweepParameter::Beta => bath.occupation = OccupationSpectrum::Planck { beta: value },
        SweepParameter::Omega => bath.bohr_frequency = value,
    }
    bath
}
