//! The C interface driven from Rust through raw pointers.

use std::ffi::{CStr, CString};
use std::ptr;

use cpt_core::bath::{build_susceptivity_set, BathConfig};
use cpt_core::config::parse_document;
use cpt_core::generator::{build_generator, evolve_exact};
use cpt_core::state::DensityMatrix3;
use cpt_core::stationary::family_state;
use cpt_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cpt_last_error()) }.to_string_lossy().into_owned()
}

const GROUND_MIX: [f64; 9] = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];

struct Handles {
    bath: *mut CptBath,
    set: *mut CptSusceptivities,
    generator: *mut CptGenerator,
}

impl Handles {
    fn new(json: &str) -> Self {
        let text = CString::new(json).unwrap();
        let mut bath = ptr::null_mut();
        let mut set = ptr::null_mut();
        let mut generator = ptr::null_mut();
        unsafe {
            assert_eq!(cpt_bath_from_json(text.as_ptr(), &mut bath), CptStatus::Ok);
            assert_eq!(cpt_susceptivities_build(bath, &mut set), CptStatus::Ok);
            assert_eq!(cpt_generator_build(set, &mut generator), CptStatus::Ok);
        }
        Handles { bath, set, generator }
    }
}

impl Drop for Handles {
    fn drop(&mut self) {
        unsafe {
            cpt_generator_free(self.generator);
            cpt_susceptivities_free(self.set);
            cpt_bath_free(self.bath);
        }
    }
}

const FLAT: &str = r#"{"occupation": {"kind": "flat", "n": 0.5}}"#;

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(cpt_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_handles_are_reported() {
    let mut set = ptr::null_mut();
    let status = unsafe { cpt_susceptivities_build(ptr::null(), &mut set) };
    assert_eq!(status, CptStatus::NullPointer);
    assert!(set.is_null());
    assert!(last_error().contains("bath"), "{}", last_error());
    assert_eq!(unsafe { cpt_trajectory_len(ptr::null()) }, 0);
    unsafe {
        cpt_bath_free(ptr::null_mut());
        cpt_trajectory_free(ptr::null_mut());
    }
}

#[test]
fn invalid_documents_map_to_status_codes() {
    let mut bath = ptr::null_mut();
    let bad = CString::new(r#"{"occupation": {"kind": "flat", "n": 1}, "tempp": 1}"#).unwrap();
    assert_eq!(unsafe { cpt_bath_from_json(bad.as_ptr(), &mut bath) }, CptStatus::Schema);
    assert!(bath.is_null());
    assert!(last_error().contains("tempp"));

    let negative = CString::new(r#"{"occupation": {"kind": "flat", "n": -1}}"#).unwrap();
    assert_eq!(unsafe { cpt_bath_from_json(negative.as_ptr(), &mut bath) }, CptStatus::Domain);
    assert!(bath.is_null());
}

#[test]
fn susceptivities_match_the_library() {
    let h = Handles::new(FLAT);
    let config: BathConfig = parse_document(FLAT).unwrap();
    let set = build_susceptivity_set(&config).unwrap();
    for (sign, s) in [(0, cpt_core::bath::Sign::Plus), (1, cpt_core::bath::Sign::Minus)] {
        let (mut re, mut im) = (0.0, 0.0);
        let status = unsafe { cpt_susceptivities_get(h.set, 1, 0, 1, sign, &mut re, &mut im) };
        assert_eq!(status, CptStatus::Ok);
        let z = set.get(1, 0, 1, s);
        assert_eq!((re, im), (z.re, z.im));
    }
    let (mut re, mut im) = (0.0, 0.0);
    let status = unsafe { cpt_susceptivities_get(h.set, 0, 0, 0, 2, &mut re, &mut im) };
    assert_eq!(status, CptStatus::Usage);

    let mut ratio = 0.0;
    assert_eq!(unsafe { cpt_susceptivities_einstein_ratio(h.set, &mut ratio) }, CptStatus::Ok);
    assert!((ratio - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn generator_matrix_is_row_major() {
    let h = Handles::new(FLAT);
    let config: BathConfig = parse_document(FLAT).unwrap();
    let l = build_generator(&build_susceptivity_set(&config).unwrap());
    let mut entries = [0.0; 81];
    assert_eq!(unsafe { cpt_generator_matrix(h.generator, entries.as_mut_ptr()) }, CptStatus::Ok);
    for r in 0..9 {
        for c in 0..9 {
            assert_eq!(entries[9 * r + c], l.matrix()[(r, c)]);
        }
    }
}

#[test]
fn evolution_agrees_with_the_library() {
    let h = Handles::new(FLAT);
    let config: BathConfig = parse_document(FLAT).unwrap();
    let l = build_generator(&build_susceptivity_set(&config).unwrap());
    let start = DensityMatrix3::from_coords(&GROUND_MIX.into()).unwrap();
    let mut rho = [0.0; 9];
    let status = unsafe { cpt_evolve_exact(h.generator, GROUND_MIX.as_ptr(), 0.3, rho.as_mut_ptr()) };
    assert_eq!(status, CptStatus::Ok);
    let expected = evolve_exact(&l, &start, 0.3).unwrap().coords();
    for i in 0..9 {
        assert_eq!(rho[i], expected[i]);
    }

    let radius = l.spectral_radius().unwrap();
    let mut traj = ptr::null_mut();
    let status = unsafe {
        cpt_evolve_rk(h.generator, GROUND_MIX.as_ptr(), 0.3, 0.02 / radius, 4, &mut traj)
    };
    assert_eq!(status, CptStatus::Ok);
    assert_eq!(unsafe { cpt_trajectory_len(traj) }, 4);
    let mut t = 0.0;
    assert_eq!(unsafe { cpt_trajectory_sample(traj, 3, &mut t, rho.as_mut_ptr()) }, CptStatus::Ok);
    assert!((t - 0.3).abs() < 1e-15);
    for i in 0..9 {
        assert!((rho[i] - expected[i]).abs() < 1e-8);
    }
    assert_eq!(unsafe { cpt_trajectory_sample(traj, 4, &mut t, rho.as_mut_ptr()) }, CptStatus::Usage);
    unsafe { cpt_trajectory_free(traj) };

    let mut traj = ptr::null_mut();
    let status = unsafe { cpt_evolve_rk(h.generator, GROUND_MIX.as_ptr(), 0.3, 1.0, 4, &mut traj) };
    assert_eq!(status, CptStatus::Usage);
    assert!(traj.is_null());
    assert!(last_error().contains("stability"));
}

#[test]
fn stationary_helpers() {
    let mut rho = [0.0; 9];
    assert_eq!(unsafe { cpt_family_state(0.5, 0.1, rho.as_mut_ptr()) }, CptStatus::Ok);
    let expected = family_state(0.5, 0.1).unwrap().coords();
    assert_eq!(rho.to_vec(), expected.iter().copied().collect::<Vec<_>>());
    assert_eq!(unsafe { cpt_family_state(0.5, 0.9, rho.as_mut_ptr()) }, CptStatus::Domain);
    assert_eq!(unsafe { cpt_family_state(2.0, 0.0, rho.as_mut_ptr()) }, CptStatus::Domain);

    let h = Handles::new(FLAT);
    let status = unsafe { cpt_predict_stationary(h.set, GROUND_MIX.as_ptr(), rho.as_mut_ptr()) };
    assert_eq!(status, CptStatus::Ok);
    let tr = rho[0] + rho[1] + rho[2];
    assert!((tr - 1.0).abs() < 1e-12);
    let bad = [1.0, 0.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.0, 0.0];
    let status = unsafe { cpt_predict_stationary(h.set, bad.as_ptr(), rho.as_mut_ptr()) };
    assert_eq!(status, CptStatus::Domain);

    let mut v = 0.0;
    assert_eq!(unsafe { cpt_min_ground_population(0.0, &mut v) }, CptStatus::Ok);
    assert_eq!(v, 0.5);
    assert_eq!(unsafe { cpt_min_ground_population(-1.0, &mut v) }, CptStatus::Domain);
    assert_eq!(unsafe { cpt_min_ground_population(1.0, ptr::null_mut()) }, CptStatus::NullPointer);
}

#[test]
fn vacuum_prediction_is_a_regime_error() {
    let h = Handles::new(r#"{"occupation": {"kind": "fock"}}"#);
    let mut rho = [0.0; 9];
    let status = unsafe { cpt_predict_stationary(h.set, GROUND_MIX.as_ptr(), rho.as_mut_ptr()) };
    assert_eq!(status, CptStatus::Regime);
}

#[test]
fn default_bath_builds() {
    let bath = cpt_bath_default();
    assert!(!bath.is_null());
    let mut set = ptr::null_mut();
    assert_eq!(unsafe { cpt_susceptivities_build(bath, &mut set) }, CptStatus::Ok);
    unsafe {
        cpt_susceptivities_free(set);
        cpt_bath_free(bath);
    }
}

#[test]
fn header_declares_every_function() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cpt.h")).unwrap();
    assert!(header.contains("#ifndef CPT_H"));
    for name in [
        "cpt_last_error",
        "cpt_version",
        "cpt_bath_from_json",
        "cpt_bath_default",
        "cpt_bath_free",
        "cpt_susceptivities_build",
        "cpt_susceptivities_get",
        "cpt_susceptivities_einstein_ratio",
        "cpt_susceptivities_free",
        "cpt_generator_build",
        "cpt_generator_matrix",
        "cpt_generator_free",
        "cpt_evolve_exact",
        "cpt_evolve_rk",
        "cpt_trajectory_len",
        "cpt_trajectory_sample",
        "cpt_trajectory_free",
        "cpt_family_state",
        "cpt_predict_stationary",
        "cpt_min_ground_population",
        "CPT_STATUS_OK = 0",
        "typedef struct CptBath CptBath",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
