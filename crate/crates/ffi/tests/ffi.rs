use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use spendpace_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { sp_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn pacer_round_trip() {
    let plan = [0.5, 0.5];
    let mut pacer: *mut SpPacer = ptr::null_mut();
    let st = unsafe { sp_pacer_new(10.0, 20, plan.as_ptr(), 2, 0.1, 5.0, 0.0, &mut pacer) };
    assert_eq!(st, SpStatus::Ok);
    let mut bid = 0.0;
    let mut spent = 0.0;
    for t in 0..20 {
        assert_eq!(unsafe { sp_pacer_bid(pacer, 2.0, &mut bid) }, SpStatus::Ok);
        let price = 1.0;
        let z = if bid >= price { price } else { 0.0 };
        spent += z;
        assert_eq!(unsafe { sp_pacer_observe(pacer, z) }, SpStatus::Ok, "round {t}");
    }
    assert!(spent <= 10.0);
    let mut remaining = -1.0;
    assert_eq!(unsafe { sp_pacer_remaining_budget(pacer, &mut remaining) }, SpStatus::Ok);
    assert!((remaining - (10.0 - spent)).abs() < 1e-12);
    let mut mu = -1.0;
    assert_eq!(unsafe { sp_pacer_mu(pacer, &mut mu) }, SpStatus::Ok);
    assert!((0.0..=5.0).contains(&mu));
    // The campaign is over.
    assert_eq!(unsafe { sp_pacer_bid(pacer, 1.0, &mut bid) }, SpStatus::ProtocolViolation);
    assert!(!last_error().is_empty());
    unsafe { sp_pacer_free(pacer) };
}

#[test]
fn out_of_order_calls_are_rejected() {
    let plan = [1.0];
    let mut pacer: *mut SpPacer = ptr::null_mut();
    assert_eq!(unsafe { sp_pacer_new_default(5.0, 5, plan.as_ptr(), 1, 2.0, &mut pacer) }, SpStatus::Ok);
    assert_eq!(unsafe { sp_pacer_observe(pacer, 0.0) }, SpStatus::ProtocolViolation);
    let (mut round, mut episode) = (0, 0);
    assert_eq!(unsafe { sp_pacer_position(pacer, &mut round, &mut episode) }, SpStatus::Ok);
    assert_eq!((round, episode), (1, 1));
    unsafe { sp_pacer_free(pacer) };
}

#[test]
fn invalid_arguments() {
    let plan = [1.0, 1.0];
    let mut pacer: *mut SpPacer = ptr::null_mut();
    // Plan spends 20 against a budget of 5.
    assert_eq!(unsafe { sp_pacer_new(5.0, 20, plan.as_ptr(), 2, 0.1, 1.0, 0.0, &mut pacer) }, SpStatus::InvalidConfig);
    assert!(pacer.is_null());
    assert_eq!(unsafe { sp_pacer_new(5.0, 20, ptr::null(), 2, 0.1, 1.0, 0.0, &mut pacer) }, SpStatus::NullPointer);
    assert_eq!(unsafe { sp_pacer_mu(ptr::null(), ptr::null_mut()) }, SpStatus::NullPointer);
    let mut out = 0.0;
    assert_eq!(unsafe { sp_dkw_bound(0, 0.1, &mut out) }, SpStatus::InvalidArgument);
    unsafe { sp_pacer_free(ptr::null_mut()) };
    unsafe { sp_plan_free(ptr::null_mut()) };
}

#[test]
fn plan_estimation_and_normalization() {
    // Two episodes, fixed price 1; values 2 in the first and 0.5 in the second.
    let n = 50;
    let mut values = vec![2.0; n];
    values.extend(vec![0.5; n]);
    let prices = vec![1.0; 2 * n];
    let mut raw: *mut SpPlan = ptr::null_mut();
    let st = unsafe { sp_plan_estimate(50.0, 100, 2, n, values.as_ptr(), prices.as_ptr(), &mut raw) };
    assert_eq!(st, SpStatus::Ok, "{}", last_error());
    let mut episodes = 0;
    assert_eq!(unsafe { sp_plan_episodes(raw, &mut episodes) }, SpStatus::Ok);
    assert_eq!(episodes, 2);
    let mut rates = [0.0; 2];
    assert_eq!(unsafe { sp_plan_rates(raw, rates.as_mut_ptr(), 2) }, SpStatus::Ok);
    assert_eq!(rates, [1.0, 0.0]);
    assert_eq!(unsafe { sp_plan_rates(raw, rates.as_mut_ptr(), 1) }, SpStatus::InvalidArgument);

    let mut norm: *mut SpPlan = ptr::null_mut();
    assert_eq!(unsafe { sp_plan_normalize(raw, 0.0, &mut norm) }, SpStatus::Ok);
    assert_eq!(unsafe { sp_plan_rates(norm, rates.as_mut_ptr(), 2) }, SpStatus::Ok);
    assert!((rates[0] * 50.0 + rates[1] * 50.0 - 50.0).abs() < 1e-9);
    let mut again: *mut SpPlan = ptr::null_mut();
    assert_eq!(unsafe { sp_plan_normalize(norm, 0.0, &mut again) }, SpStatus::InvalidConfig);

    let dir = std::env::temp_dir().join(format!("spendpace-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = CString::new(dir.join("plan.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { sp_plan_save(norm, path.as_ptr()) }, SpStatus::Ok);
    let mut loaded: *mut SpPlan = ptr::null_mut();
    assert_eq!(unsafe { sp_plan_load(path.as_ptr(), &mut loaded) }, SpStatus::Ok);
    let mut reread = [0.0; 2];
    assert_eq!(unsafe { sp_plan_rates(loaded, reread.as_mut_ptr(), 2) }, SpStatus::Ok);
    assert_eq!(rates, reread);
    unsafe {
        sp_plan_free(raw);
        sp_plan_free(norm);
        sp_plan_free(loaded);
    }
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn all_zero_plan_is_reported() {
    let values = [0.5; 10];
    let prices = [1.0; 10];
    let mut raw: *mut SpPlan = ptr::null_mut();
    assert_eq!(unsafe { sp_plan_estimate(5.0, 10, 1, 10, values.as_ptr(), prices.as_ptr(), &mut raw) }, SpStatus::Ok);
    let mut norm: *mut SpPlan = ptr::null_mut();
    assert_eq!(unsafe { sp_plan_normalize(raw, 0.0, &mut norm) }, SpStatus::AllZeroPlan);
    unsafe { sp_plan_free(raw) };
}

#[test]
fn utilities() {
    let v = [3.0, 1.0, 2.0];
    let p = [1.0, 2.0, 1.0];
    let mut h = 0.0;
    assert_eq!(unsafe { sp_hindsight_value(v.as_ptr(), p.as_ptr(), 3, 1.5, &mut h) }, SpStatus::Ok);
    // Item 0 (ratio 2) fully, half of item 2 (ratio 1).
    assert!((h - 2.5).abs() < 1e-12);
    let mut b = 0.0;
    assert_eq!(unsafe { sp_dkw_bound(2000, 0.1, &mut b) }, SpStatus::Ok);
    assert!((b - ((2.0f64 / 0.1).ln() / 4000.0).sqrt()).abs() < 1e-15);
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let src = std::env::temp_dir().join(format!("spendpace-header-{}.c", std::process::id()));
    std::fs::write(
        &src,
        r#"#include "spendpace.h"
int main(void) {
    double plan[2] = {0.5, 0.5};
    SpPacer *p = NULL;
    double bid = 0.0;
    if (sp_pacer_new_default(10.0, 20, plan, 2, 2.0, &p) != SP_STATUS_OK) return 1;
    sp_pacer_bid(p, 1.0, &bid);
    sp_pacer_free(p);
    return 0;
}
"#,
    )
    .unwrap();
    let obj = src.with_extension("o");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-c"])
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .arg("-o")
        .arg(&obj)
        .status()
        .unwrap();
    let _ = std::fs::remove_file(&src);
    let _ = std::fs::remove_file(&obj);
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc).arg("--version").output().is_ok() {
            return Ok(cc);
        }
    }
    Err(())
}
