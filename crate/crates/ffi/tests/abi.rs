use std::ffi::{CStr, CString};
use std::ptr;

use camo_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(camo_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn ring_trajectory_matches_core() {
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { camo_instance_ring(2, 5, &mut inst) }, CamoStatus::Ok);
    assert_eq!(unsafe { camo_instance_horizon(inst) }, 5);
    assert_eq!(unsafe { camo_instance_recipients(inst) }, 2);
    let mut none = [0.0; 6];
    let mut ca = [0.0; 6];
    unsafe {
        assert_eq!(camo_evaluate(inst, CamoMode::NoAttack, 0.0, 0.0, none.as_mut_ptr(), 6), CamoStatus::Ok);
        assert_eq!(camo_evaluate(inst, CamoMode::Camouflage, 0.0, 0.0, ca.as_mut_ptr(), 6), CamoStatus::Ok);
        camo_instance_free(inst);
    }
    assert_eq!(none[0], 0.0);
    assert!((none[5] - 87.8007253).abs() < 1e-6);
    assert!(ca[5] < none[5]);
}

#[test]
fn budgeted_mode_uses_budget() {
    let name = CString::new("chessboard-2x2-v1").unwrap();
    let mut inst = ptr::null_mut();
    assert_eq!(unsafe { camo_instance_preset(name.as_ptr(), &mut inst) }, CamoStatus::Ok);
    let h = unsafe { camo_instance_horizon(inst) };
    let mut zero = vec![0.0; h + 1];
    let mut none = vec![0.0; h + 1];
    unsafe {
        camo_evaluate(inst, CamoMode::Budgeted, 0.0, 0.5, zero.as_mut_ptr(), h + 1);
        camo_evaluate(inst, CamoMode::NoAttack, 0.0, 0.5, none.as_mut_ptr(), h + 1);
        assert_eq!(
            camo_evaluate(inst, CamoMode::Budgeted, -1.0, 0.5, zero.as_mut_ptr(), h + 1),
            CamoStatus::InvalidArgument
        );
        camo_instance_free(inst);
    }
    assert!((zero[h] - none[h]).abs() < 1e-9);
}

#[test]
fn errors_are_reported() {
    let mut inst = ptr::null_mut();
    let bad = CString::new("nope").unwrap();
    assert_ne!(unsafe { camo_instance_preset(bad.as_ptr(), &mut inst) }, CamoStatus::Ok);
    assert!(inst.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { camo_instance_preset(ptr::null(), &mut inst) }, CamoStatus::NullPointer);

    assert_eq!(unsafe { camo_instance_ring(2, 5, &mut inst) }, CamoStatus::Ok);
    let mut short = [0.0; 3];
    let s = unsafe { camo_evaluate(inst, CamoMode::NoAttack, 0.0, 0.0, short.as_mut_ptr(), 3) };
    assert_eq!(s, CamoStatus::BufferTooSmall);
    unsafe { camo_instance_free(inst) };
    unsafe { camo_instance_free(ptr::null_mut()) };
    assert_eq!(unsafe { camo_instance_horizon(ptr::null()) }, 0);
}

#[test]
fn json_instance() {
    let mdp = CString::new(
        r#"{"num_states":2,"num_actions":2,"horizon":2,
            "transitions":[[[[1,0],[0,1]],[[1,0],[0,1]]],[[[1,0],[0,1]],[[1,0],[0,1]]]],
            "rewards":[[[1,0],[0,3]]]}"#,
    )
    .unwrap();
    let scheme = CString::new(
        r#"{"objects":[{"name":"sign","truth":0,"domain":[0,1]}],
            "kind":{"kind":"tabulated","own":[[0,1],[1,0]],"config":[0,0]},
            "num_states":2,"num_configs":1,"true_config":0}"#,
    )
    .unwrap();
    let mut inst = ptr::null_mut();
    let s = unsafe { camo_instance_from_json(mdp.as_ptr(), scheme.as_ptr(), 1, &mut inst) };
    assert_eq!(s, CamoStatus::Ok, "{}", last_error());
    let mut v = [0.0; 3];
    unsafe {
        assert_eq!(camo_evaluate(inst, CamoMode::NoAttack, 0.0, 0.0, v.as_mut_ptr(), 3), CamoStatus::Ok);
        camo_instance_free(inst);
    }
    // from 0: move then collect 3 (total 3); from 1: stay twice (6)
    assert!((v[2] - 4.5).abs() < 1e-12);

    let broken = CString::new(r#"{"num_states":2}"#).unwrap();
    let s = unsafe { camo_instance_from_json(broken.as_ptr(), scheme.as_ptr(), 1, &mut inst) };
    assert_eq!(s, CamoStatus::InvalidModel);
}

#[test]
fn lemma_gap() {
    let f = [0.0, 1.0, 1.0, 0.0];
    let mut r = CamoGapResult::default();
    assert_eq!(unsafe { camo_lemma1_gap(f.as_ptr(), 2, 2, &mut r) }, CamoStatus::Ok);
    assert_eq!((r.o1, r.o2, r.bound, r.holds), (1.0, 0.0, 1.0, true));
    assert_eq!(unsafe { camo_lemma1_gap(f.as_ptr(), 2, 0, &mut r) }, CamoStatus::InvalidModel);
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/camo.h");
    for name in [
        "camo_version",
        "camo_last_error",
        "camo_instance_ring",
        "camo_instance_preset",
        "camo_instance_from_json",
        "camo_instance_free",
        "camo_instance_horizon",
        "camo_instance_recipients",
        "camo_evaluate",
        "camo_lemma1_gap",
        "typedef struct CamoInstance CamoInstance",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
