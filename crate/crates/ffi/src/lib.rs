//! C interface to `cpt-core`.
//!
//! Objects cross the boundary as opaque handles created by the `cpt_*_build`,
//! `cpt_bath_default` or `cpt_bath_from_json` functions and released with the
//! matching `cpt_*_free`.
//! Every fallible call returns a [`CptStatus`]; on failure the message is
//! available from [`cpt_last_error`] on the same thread until the next call.
//!
//! Density matrices are passed as nine doubles
//! `ρ11, ρ22, ρ33, Re ρ12, Im ρ12, Re ρ13, Im ρ13, Re ρ23, Im ρ23`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cpt_core::bath::{build_susceptivity_set, einstein_ratio, BathConfig, Sign, SusceptivitySet};
use cpt_core::config::parse_document;
use cpt_core::generator::{build_generator, evolve_exact, evolve_rk, Superoperator, Trajectory};
use cpt_core::state::{Coords, DensityMatrix3};
use cpt_core::stationary::{family_state, min_ground_population, predict_stationary};
use cpt_core::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CptStatus {
    Ok = 0,
    NullPointer = 1,
    Schema = 2,
    Domain = 3,
    Regime = 4,
    Numerical = 5,
    Usage = 6,
    Panic = 7,
}

/// Bath configuration.
pub struct CptBath(BathConfig);
/// Evaluated susceptivities.
pub struct CptSusceptivities(SusceptivitySet);
/// Real 9×9 generator.
pub struct CptGenerator(Superoperator);
/// Sampled trajectory.
pub struct CptTrajectory(Trajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> CptStatus {
    match e {
        Error::Schema { .. } => CptStatus::Schema,
        Error::Domain(_) => CptStatus::Domain,
        Error::Usage(_) => CptStatus::Usage,
        Error::Regime(_) => CptStatus::Regime,
        Error::Numerical(_) | Error::Consistency(_) => CptStatus::Numerical,
    }
}

fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> CptStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CptStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            CptStatus::Panic
        }
    }
}

struct NullPointer(&'static str);

impl From<NullPointer> for Error {
    fn from(n: NullPointer) -> Self {
        Error::Usage(format!("null pointer passed as `{}`", n.0))
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Error> {
    p.as_ref().ok_or_else(|| NullPointer(name).into())
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Error> {
    p.as_mut().ok_or_else(|| NullPointer(name).into())
}

unsafe fn read_coords(p: *const f64) -> Result<Coords, Error> {
    if p.is_null() {
        return Err(NullPointer("rho").into());
    }
    Ok(Coords::from_column_slice(std::slice::from_raw_parts(p, 9)))
}

unsafe fn write_coords(p: *mut f64, x: &Coords) -> Result<(), Error> {
    if p.is_null() {
        return Err(NullPointer("out").into());
    }
    std::slice::from_raw_parts_mut(p, 9).copy_from_slice(x.as_slice());
    Ok(())
}

fn null_check(status: CptStatus) -> CptStatus {
    // Missing arguments are reported as their own status.
    if status == CptStatus::Usage
        && LAST_ERROR.with(|e| {
            e.borrow()
                .as_ref()
                .is_some_and(|m| m.to_bytes().starts_with(b"usage error: null pointer"))
        })
    {
        CptStatus::NullPointer
    } else {
        status
    }
}

fn call<F: FnOnce() -> Result<(), Error>>(f: F) -> CptStatus {
    null_check(guard(f))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn cpt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cpt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a bath configuration from a NUL-terminated JSON document.
#[no_mangle]
pub unsafe extern "C" fn cpt_bath_from_json(json: *const c_char, bath: *mut *mut CptBath) -> CptStatus {
    call(|| {
        let out = out(bath, "bath")?;
        *out = ptr::null_mut();
        if json.is_null() {
            return Err(NullPointer("json").into());
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::Schema {
                path: ".".into(),
                message: format!("document is not UTF-8: {e}"),
            })?;
        let config: BathConfig = parse_document(text)?;
        config.validate()?;
        *out = Box::into_raw(Box::new(CptBath(config)));
        Ok(())
    })
}

/// Default bath: gaussian formfactors, Planck occupation at `β = 1`.
#[no_mangle]
pub extern "C" fn cpt_bath_default() -> *mut CptBath {
    Box::into_raw(Box::new(CptBath(BathConfig::default())))
}

#[no_mangle]
pub unsafe extern "C" fn cpt_bath_free(bath: *mut CptBath) {
    if !bath.is_null() {
        drop(Box::from_raw(bath));
    }
}

/// Evaluates all susceptivities of `bath`.
#[no_mangle]
pub unsafe extern "C" fn cpt_susceptivities_build(
    bath: *const CptBath,
    set: *mut *mut CptSusceptivities,
) -> CptStatus {
    call(|| {
        let out = out(set, "set")?;
        *out = ptr::null_mut();
        let bath = deref(bath, "bath")?;
        *out = Box::into_raw(Box::new(CptSusceptivities(build_susceptivity_set(&bath.0)?)));
        Ok(())
    })
}

/// One susceptivity. Indices are 0-based; `sign` is 0 for `+` and 1 for `-`.
#[no_mangle]
pub unsafe extern "C" fn cpt_susceptivities_get(
    set: *const CptSusceptivities,
    polarization: usize,
    alpha: usize,
    beta: usize,
    sign: u32,
    re: *mut f64,
    im: *mut f64,
) -> CptStatus {
    call(|| {
        let set = deref(set, "set")?;
        let sign = match sign {
            0 => Sign::Plus,
            1 => Sign::Minus,
            s => return Err(Error::Usage(format!("sign must be 0 or 1, got {s}"))),
        };
        if polarization > 1 || alpha > 1 || beta > 1 {
            return Err(Error::Usage(format!(
                "indices must be 0 or 1, got ({polarization}, {alpha}, {beta})"
            )));
        }
        let z = set.0.get(polarization, alpha, beta, sign);
        *out(re, "re")? = z.re;
        *out(im, "im")? = z.im;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cpt_susceptivities_einstein_ratio(
    set: *const CptSusceptivities,
    ratio: *mut f64,
) -> CptStatus {
    call(|| {
        let set = deref(set, "set")?;
        *out(ratio, "ratio")? = einstein_ratio(&set.0)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cpt_susceptivities_free(set: *mut CptSusceptivities) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Builds the generator of the master equation.
#[no_mangle]
pub unsafe extern "C" fn cpt_generator_build(
    set: *const CptSusceptivities,
    generator: *mut *mut CptGenerator,
) -> CptStatus {
    call(|| {
        let out = out(generator, "generator")?;
        *out = ptr::null_mut();
        let set = deref(set, "set")?;
        *out = Box::into_raw(Box::new(CptGenerator(build_generator(&set.0))));
        Ok(())
    })
}

/// Copies the 81 generator entries in row-major order.
#[no_mangle]
pub unsafe extern "C" fn cpt_generator_matrix(generator: *const CptGenerator, entries: *mut f64) -> CptStatus {
    call(|| {
        let g = deref(generator, "generator")?;
        if entries.is_null() {
            return Err(NullPointer("entries").into());
        }
        let dst = std::slice::from_raw_parts_mut(entries, 81);
        let m = g.0.matrix();
        for r in 0..9 {
            for c in 0..9 {
                dst[9 * r + c] = m[(r, c)];
            }
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cpt_generator_free(generator: *mut CptGenerator) {
    if !generator.is_null() {
        drop(Box::from_raw(generator));
    }
}

/// `exp(t L) ρ0`. The initial state must be a density matrix.
#[no_mangle]
pub unsafe extern "C" fn cpt_evolve_exact(
    generator: *const CptGenerator,
    rho0: *const f64,
    t: f64,
    rho: *mut f64,
) -> CptStatus {
    call(|| {
        let g = deref(generator, "generator")?;
        let start = DensityMatrix3::from_coords(&read_coords(rho0)?)?;
        let end = evolve_exact(&g.0, &start, t)?;
        write_coords(rho, &end.coords())
    })
}

/// Fixed-step Runge-Kutta trajectory with `samples` evenly spaced samples.
#[no_mangle]
pub unsafe extern "C" fn cpt_evolve_rk(
    generator: *const CptGenerator,
    rho0: *const f64,
    horizon: f64,
    dt: f64,
    samples: usize,
    trajectory: *mut *mut CptTrajectory,
) -> CptStatus {
    call(|| {
        let out = out(trajectory, "trajectory")?;
        *out = ptr::null_mut();
        let g = deref(generator, "generator")?;
        let start = DensityMatrix3::from_coords(&read_coords(rho0)?)?;
        let traj = evolve_rk(&g.0, &start, horizon, dt, samples)?;
        *out = Box::into_raw(Box::new(CptTrajectory(traj)));
        Ok(())
    })
}

/// Number of samples, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cpt_trajectory_len(trajectory: *const CptTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn cpt_trajectory_sample(
    trajectory: *const CptTrajectory,
    index: usize,
    t: *mut f64,
    rho: *mut f64,
) -> CptStatus {
    call(|| {
        let traj = &deref(trajectory, "trajectory")?.0;
        if index >= traj.len() {
            return Err(Error::Usage(format!(
                "sample {index} out of range for {} samples",
                traj.len()
            )));
        }
        *out(t, "t")? = traj.times[index];
        write_coords(rho, &traj.states[index].coords())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cpt_trajectory_free(trajectory: *mut CptTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// Stationary family member at Einstein ratio `r` and ground coherence `s`.
#[no_mangle]
pub unsafe extern "C" fn cpt_family_state(r: f64, s: f64, rho: *mut f64) -> CptStatus {
    call(|| write_coords(rho, &family_state(r, s)?.coords()))
}

/// Limit state reached from `rho0` under thermal susceptivities.
#[no_mangle]
pub unsafe extern "C" fn cpt_predict_stationary(
    set: *const CptSusceptivities,
    rho0: *const f64,
    rho: *mut f64,
) -> CptStatus {
    call(|| {
        let set = deref(set, "set")?;
        let start = DensityMatrix3::from_coords(&read_coords(rho0)?)?;
        write_coords(rho, &predict_stationary(&start, &set.0)?.coords())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cpt_min_ground_population(n: f64, value: *mut f64) -> CptStatus {
    call(|| {
        *out(value, "value")? = min_ground_population(n)?;
        Ok(())
    })
}
