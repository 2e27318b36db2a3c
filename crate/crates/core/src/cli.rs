//! The `cpt` command-line tool.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::acceptance;
use crate::bath::{build_susceptivity_set, einstein_ratio, BathConfig, Sign};
use crate::config::{
    parse_config, parse_document, swept_bath, InitialState, OutputFormat, RunConfig,
    SweepParameter, SweepSpec, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::generator::{build_generator, decompose_blocks, evolve_rk, Trajectory};
use crate::generator::evolve::exact_trajectory;
use crate::state::DensityMatrix3;
use crate::stationary::{
    beats, check_density, conserved_c, family_state, min_ground_population, solve_nullspace,
    FamilyDescriptor,
};

#[derive(Debug, Parser)]
#[command(name = "cpt", version, about = "Coherent population trapping in a degenerate Λ atom")]
pub struct Cli {
    /// Run configuration (JSON). All fields are optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Bath configuration (JSON), replacing the `bath` section of the run
    /// configuration.
    #[arg(long, global = true)]
    pub bath: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evaluate all susceptivities of the bath.
    Sus,
    /// Integrate the master equation.
    Evolve {
        /// Preset name (NC, C, mixed, excited) or a JSON file with a preset
        /// name or nine coordinates.
        #[arg(long)]
        initial: Option<String>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Use the matrix exponential instead of Runge-Kutta.
        #[arg(long)]
        exact: bool,
    },
    /// Classify the stationary set of the generator.
    Stationary,
    /// Tabulate the stationary family.
    Family {
        /// Einstein ratio; computed from the bath when omitted.
        #[arg(long)]
        r: Option<f64>,
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Quantum-beat regime analysis.
    Beats {
        #[arg(long)]
        initial: Option<String>,
    },
    /// Run the parameter sweep of the configuration.
    Sweep,
    /// Run the verification suite.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// One table cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Flag(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match *self {
            Cell::Num(x) => format_number(x),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

/// `x` with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Tabular artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub schema_version: u32,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            schema_version: SCHEMA_VERSION,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn num(x: f64) -> Cell {
    Cell::Num(x)
}

/// Trajectory table with the observables of every sample.
pub fn trajectory_table(traj: &Trajectory) -> Table {
    let mut table = Table::new(&[
        "t", "rho11", "rho22", "rho33", "re_rho12", "im_rho12", "re_rho13", "im_rho13",
        "re_rho23", "im_rho23", "s", "C", "A", "min_eigenvalue",
    ]);
    for ((t, rho), min_eig) in traj.times.iter().zip(&traj.states).zip(&traj.min_eigenvalues) {
        let mut row = vec![num(*t)];
        row.extend(rho.coords().iter().map(|&x| num(x)));
        row.push(num(rho.ground_coherence()));
        row.push(num(conserved_c(rho)));
        row.push(num(rho.observable_a()));
        row.push(num(*min_eig));
        table.push(row);
    }
    table
}

/// Members of the family on an even grid of `points` values of `s`,
/// endpoints included.
pub fn family_table(r: f64, points: usize) -> Result<Table> {
    if points < 2 {
        return Err(Error::Usage(format!("need at least 2 points, got {points}")));
    }
    let desc = FamilyDescriptor::new(r)?;
    let mut table = Table::new(&["s", "rho_e", "rho_g", "C", "min_eigenvalue", "admissible"]);
    for k in 0..points {
        let s = if k + 1 == points {
            desc.s_max
        } else {
            desc.s_min + (desc.s_max - desc.s_min) * k as f64 / (points - 1) as f64
        };
        let rho = family_state(r, s)?;
        table.push(vec![
            num(s),
            num(rho.entry(2, 2).re),
            num(rho.entry(0, 0).re),
            num(conserved_c(&rho)),
            num(rho.min_eigenvalue()),
            Cell::Flag(check_density(&rho).valid),
        ]);
    }
    Ok(table)
}

fn bath_row(bath: &BathConfig, parameter: SweepParameter, value: f64) -> Result<Vec<Cell>> {
    let set = build_susceptivity_set(bath)?;
    let r = einstein_ratio(&set)?;
    let floor = match parameter {
        SweepParameter::NBar => min_ground_population(value)?,
        _ => {
            let desc = FamilyDescriptor::new(r)?;
            desc.member_unchecked(desc.s_max).entry(0, 0).re
        }
    };
    let gap = decompose_blocks(&build_generator(&set))?.relaxation_gap();
    let plus = set.sum(0, 0, Sign::Plus);
    let minus = set.sum(0, 0, Sign::Minus);
    Ok(vec![
        num(value),
        num(r),
        num(plus.re),
        num(plus.im),
        num(minus.re),
        num(minus.im),
        num(floor),
        num(gap),
    ])
}

/// Evaluates the sweep, one row per grid point in grid order.
pub fn sweep_table(bath: &BathConfig, spec: &SweepSpec) -> Result<Table> {
    if spec.parameter == SweepParameter::S {
        let set = build_susceptivity_set(bath)?;
        let r = einstein_ratio(&set)?;
        let desc = FamilyDescriptor::new(r)?;
        let mut table = Table::new(&["s", "rho_e", "rho_g", "C", "min_eigenvalue", "admissible"]);
        for &s in &spec.grid {
            let rho = desc.member_unchecked(s);
            table.push(vec![
                num(s),
                num(rho.entry(2, 2).re),
                num(rho.entry(0, 0).re),
                num(conserved_c(&rho)),
                num(rho.min_eigenvalue()),
                Cell::Flag(desc.member(s).is_ok() && check_density(&rho).valid),
            ]);
        }
        return Ok(table);
    }
    let rows: Vec<Result<Vec<Cell>>> = spec
        .grid
        .par_iter()
        .map(|&value| {
            let b = swept_bath(bath, spec.parameter, value);
            b.validate()?;
            bath_row(&b, spec.parameter, value)
        })
        .collect();
    let mut table = Table::new(&[
        spec.parameter.name(),
        "einstein_ratio",
        "re_plus",
        "im_plus",
        "re_minus",
        "im_minus",
        "min_ground_population",
        "relaxation_gap",
    ]);
    for row in rows {
        table.push(row?);
    }
    Ok(table)
}

fn resolve_initial(flag: Option<&str>, config: &RunConfig) -> Result<DensityMatrix3> {
    let Some(arg) = flag else {
        return config.initial_density();
    };
    if let Ok(state) = serde_json::from_value::<InitialState>(serde_json::Value::String(arg.into())) {
        return state.density();
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Error::Usage(format!("cannot read initial state `{arg}`: {e}")))?;
    parse_document::<InitialState>(&text)?.density()
}

/// Writes artifacts to the output directory or, without one, to `out`.
struct Sink<'a> {
    dir: Option<PathBuf>,
    out: &'a mut dyn Write,
}

impl Sink<'_> {
    fn emit(&mut self, name: &str, content: &str) -> Result<()> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                write_file(&path, content)?;
                writeln!(self.out, "wrote {}", path.display()).map_err(io_error)?;
            }
            None => self.out.write_all(content.as_bytes()).map_err(io_error)?,
        }
        Ok(())
    }

    fn note(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}").map_err(io_error)
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_error)?;
    }
    std::fs::write(path, content)
        .map_err(|e| Error::Usage(format!("cannot write {}: {e}", path.display())))
}

fn io_error(e: std::io::Error) -> Error {
    Error::Usage(format!("i/o error: {e}"))
}

fn table_name(stem: &str, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    }
}

/// Default Runge-Kutta step as a fraction of `1 / ρ(L)`.
const AUTO_STEP: f64 = 0.05;

/// Executes one subcommand.
pub fn run(
    command: &Command,
    config: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<()> {
    let format = config.output.format;
    let mut sink = Sink {
        dir: config.output_dir(),
        out,
    };
    let bath = config.bath_config();
    match command {
        Command::Sus => {
            let set = build_susceptivity_set(&bath)?;
            let doc = set.to_document(Some(bath.effective_cutoff()));
            sink.emit("susceptivities.json", &to_json(&doc))
        }
        Command::Evolve {
            initial,
            horizon,
            dt,
            samples,
            exact,
        } => {
            let rho0 = resolve_initial(initial.as_deref(), config)?;
            let horizon = horizon.unwrap_or(config.numerics.horizon);
            let samples = samples.unwrap_or(config.numerics.samples);
            let l = build_generator(&build_susceptivity_set(&bath)?);
            let dt = match dt.or(config.numerics.dt) {
                Some(dt) => dt,
                None => AUTO_STEP / l.spectral_radius()?.max(f64::MIN_POSITIVE),
            };
            let traj = if *exact {
                exact_trajectory(&l, &rho0, horizon, samples)?
            } else {
                evolve_rk(&l, &rho0, horizon, dt, samples)?
            };
            for w in &traj.warnings {
                writeln!(err, "warning: {w}").map_err(io_error)?;
            }
            sink.emit(
                &table_name("trajectory", format),
                &trajectory_table(&traj).render(format),
            )
        }
        Command::Stationary => {
            let l = build_generator(&build_susceptivity_set(&bath)?);
            sink.emit("stationary.json", &to_json(&solve_nullspace(&l)?))
        }
        Command::Family { r, points } => {
            let r = match r {
                Some(r) => *r,
                None => einstein_ratio(&build_susceptivity_set(&bath)?)?,
            };
            sink.emit(&table_name("family", format), &family_table(r, *points)?.render(format))
        }
        Command::Beats { initial } => {
            let rho0 = resolve_initial(initial.as_deref(), config)?;
            let set = build_susceptivity_set(&bath)?;
            let kappa = set.sum(0, 0, Sign::Plus).im;
            if kappa.abs() <= 1e-12 * set.scale().max(1.0) {
                return Err(Error::Regime(format!(
                    "Im (g|g)^+ = {kappa:e}: the occupation provides no beat forcing"
                )));
            }
            let report = beats(&set, &rho0)?;
            sink.emit("beats.json", &to_json(&report))?;
            if sink.dir.is_some() {
                if let Some(traj) = &report.trajectory {
                    let mut table = Table::new(&["t", "re_D", "im_D", "abs_D", "s", "C"]);
                    for (t, rho) in traj.times.iter().zip(&traj.states) {
                        let d = rho.beat_combination();
                        table.push(vec![
                            num(*t),
                            num(d.re),
                            num(d.im),
                            num(d.norm()),
                            num(rho.ground_coherence()),
                            num(conserved_c(rho)),
                        ]);
                    }
                    sink.emit(&table_name("beats_trajectory", format), &table.render(format))?;
                }
            }
            Ok(())
        }
        Command::Sweep => {
            let spec = config.sweep.clone().unwrap_or_default();
            let table = sweep_table(&bath, &spec)?;
            sink.emit(&table_name("sweep", format), &table.render(format))
        }
        Command::Selftest { seed } => {
            let seed = seed.unwrap_or(config.seed);
            let report = acceptance::run(seed);
            let text = report.render();
            if sink.dir.is_some() {
                sink.emit("selftest.txt", &text)?;
            } else {
                sink.out.write_all(text.as_bytes()).map_err(io_error)?;
            }
            let failed = report.failed();
            sink.note(&format!(
                "{} passed, {} failed",
                report.criteria.len() - failed,
                failed
            ))?;
            if failed > 0 {
                return Err(Error::Consistency(format!(
                    "{failed} of {} criteria failed",
                    report.criteria.len()
                )));
            }
            Ok(())
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let read = |path: &Path| {
        std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))
    };
    let mut config = match &cli.config {
        Some(path) => parse_config(&read(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.bath {
        config.bath = parse_document(&read(path)?).map_err(|e| match e {
            Error::Schema { path, message } => Error::Schema {
                path: if path == "." { "bath".into() } else { format!("bath.{path}") },
                message,
            },
            other => other,
        })?;
        config.validate()?;
    }
    Ok(config)
}

/// Parses `args` and runs the tool, returning the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = load_config(&cli).and_then(|config| run(&cli.command, &config, out, err));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
