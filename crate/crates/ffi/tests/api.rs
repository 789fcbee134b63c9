use std::ffi::{CStr, CString};
use std::ptr;

use matcircuit_ffi::*;

fn cs(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = mc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

unsafe fn take(p: *mut std::ffi::c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    mc_string_free(p);
    s
}

unsafe fn compile(enc: &str, seed: Option<&str>) -> *mut McInstance {
    let seed = seed.map(cs);
    let mut inst = ptr::null_mut();
    let st = mc_matmul_compile(
        cs("97").as_ptr(),
        2,
        2,
        2,
        cs(enc).as_ptr(),
        seed.as_ref().map_or(ptr::null(), |s| s.as_ptr()),
        &mut inst,
    );
    assert_eq!(st, McStatus::Ok, "{}", last_error());
    inst
}

const X: &str = r#"{"rows":2,"cols":2,"data":[["1","2"],["3","4"]]}"#;
const W: &str = r#"{"rows":2,"cols":2,"data":[["5","6"],["7","8"]]}"#;

#[test]
fn compile_witness_check() {
    for enc in ["naive", "naive-psq", "crpc", "crpc-psq"] {
        unsafe {
            let inst = compile(enc, Some("seed"));
            let mut stats = McInstanceStats::default();
            assert_eq!(mc_instance_stats(inst, &mut stats), McStatus::Ok);
            let rows = match enc {
                "naive" => 12,
                "naive-psq" => 8,
                "crpc" => 3,
                _ => 2,
            };
            assert_eq!(stats.n_constraints, rows, "{enc}");

            let mut asg = ptr::null_mut();
            let mut y = ptr::null_mut();
            let st = mc_matmul_witness(inst, cs(X).as_ptr(), cs(W).as_ptr(), &mut asg, &mut y);
            assert_eq!(st, McStatus::Ok, "{}", last_error());
            let y: serde_json::Value = serde_json::from_str(&take(y)).unwrap();
            assert_eq!(y["data"], serde_json::json!([["19", "22"], ["43", "50"]]));

            let mut row = 0usize;
            assert_eq!(mc_check(inst, asg, &mut row), McStatus::Ok);
            assert_eq!(row, usize::MAX);
            mc_assignment_free(asg);
            mc_instance_free(inst);
        }
    }
}

#[test]
fn json_round_trip_and_tamper() {
    unsafe {
        let inst = compile("crpc-psq", Some("seed"));
        let mut asg = ptr::null_mut();
        assert_eq!(
            mc_matmul_witness(inst, cs(X).as_ptr(), cs(W).as_ptr(), &mut asg, ptr::null_mut()),
            McStatus::Ok
        );

        let mut text = ptr::null_mut();
        assert_eq!(mc_instance_to_json(inst, &mut text), McStatus::Ok);
        let inst_json = take(text);
        let mut inst2 = ptr::null_mut();
        assert_eq!(mc_instance_from_json(cs(&inst_json).as_ptr(), &mut inst2), McStatus::Ok);

        assert_eq!(mc_assignment_to_json(asg, &mut text), McStatus::Ok);
        let asg_json = take(text);
        // Y[0][0] = 19 sits after the constant and the four X entries
        let bad = asg_json.replacen("\"19\"", "\"20\"", 1);
        assert_ne!(bad, asg_json);
        let mut asg2 = ptr::null_mut();
        assert_eq!(mc_assignment_from_json(cs(&bad).as_ptr(), &mut asg2), McStatus::Ok);
        let mut row = 0usize;
        assert_eq!(mc_check(inst2, asg2, &mut row), McStatus::Unsatisfied);
        assert!(row < 2);
        assert_eq!(mc_check(inst2, asg, ptr::null_mut()), McStatus::Ok);

        for h in [inst, inst2] {
            mc_instance_free(h);
        }
        for h in [asg, asg2] {
            mc_assignment_free(h);
        }
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut inst = ptr::null_mut();
        let st = mc_matmul_compile(cs("97").as_ptr(), 2, 2, 2, cs("crpc").as_ptr(), ptr::null(), &mut inst);
        assert_eq!(st, McStatus::InvalidArgument);
        assert!(last_error().contains("seed"));
        assert!(inst.is_null());

        let st = mc_matmul_compile(cs("91").as_ptr(), 2, 2, 2, cs("naive").as_ptr(), ptr::null(), &mut inst);
        assert_eq!(st, McStatus::InvalidArgument);
        let st = mc_matmul_compile(cs("97").as_ptr(), 2, 2, 2, cs("dense").as_ptr(), ptr::null(), &mut inst);
        assert_eq!(st, McStatus::InvalidArgument);
        let st = mc_matmul_compile(ptr::null(), 2, 2, 2, cs("naive").as_ptr(), ptr::null(), &mut inst);
        assert_eq!(st, McStatus::NullPointer);

        assert_eq!(mc_instance_from_json(cs("{\"modulus\":").as_ptr(), &mut inst), McStatus::Parse);
        let mut asg = ptr::null_mut();
        assert_eq!(mc_assignment_from_json(cs("[]").as_ptr(), &mut asg), McStatus::Parse);

        let inst = compile("naive", None);
        let x3 = r#"{"rows":3,"cols":2,"data":[["1","2"],["3","4"],["5","6"]]}"#;
        let st = mc_matmul_witness(inst, cs(x3).as_ptr(), cs(W).as_ptr(), &mut asg, ptr::null_mut());
        assert_eq!(st, McStatus::Shape);
        let st = mc_matmul_witness(inst, cs("nope").as_ptr(), cs(W).as_ptr(), &mut asg, ptr::null_mut());
        assert_eq!(st, McStatus::Parse);
        assert_eq!(mc_check(inst, ptr::null(), ptr::null_mut()), McStatus::NullPointer);

        // success clears the message
        let mut stats = McInstanceStats::default();
        assert_eq!(mc_instance_stats(inst, &mut stats), McStatus::Ok);
        assert!(mc_last_error_message().is_null());
        mc_instance_free(inst);
        mc_instance_free(ptr::null_mut());
        mc_string_free(ptr::null_mut());
    }
}
