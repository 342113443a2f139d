use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use cluster_limit_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(cl_last_error_message()) }.to_string_lossy().into_owned()
}

const MM2: &str = r#"{"kind":"moving_max","m":2,"alpha":1.0}"#;
const CP: &str = r#"{"variant":"compound_poisson_uniform","a":0.5,"pi":[0,1]}"#;

fn model(json: &str) -> Result<*mut ClModel, ClStatus> {
    let mut m = ptr::null_mut();
    match unsafe { cl_model_from_json(c(json).as_ptr(), &mut m) } {
        ClStatus::Ok => Ok(m),
        s => Err(s),
    }
}

fn canonical(json: &str) -> *mut ClCanonical {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cl_canonical_from_json(c(json).as_ptr(), &mut h) }, ClStatus::Ok, "{}", last_error());
    h
}

#[test]
fn model_queries_match_the_library() {
    let m = model(MM2).unwrap();
    let mut theta = 0.0;
    let mut u = 0.0;
    let (mut modulus, mut upper) = (0.0, 0.0);
    unsafe {
        assert_eq!(cl_model_known_theta(m, &mut theta), ClStatus::Ok);
        assert_eq!(cl_model_level_u(m, 1000, &mut u), ClStatus::Ok);
        assert_eq!(cl_model_tail(m, u, &mut modulus, &mut upper, ptr::null_mut()), ClStatus::Ok);
    }
    let lib: cluster_limit::models::SequenceModel = serde_json::from_str(MM2).unwrap();
    assert_eq!(theta, 0.5);
    assert_eq!(u, lib.level_u(1000).unwrap());
    assert!((1000.0 * upper - 1.0).abs() < 1e-9);
    assert_eq!(modulus, upper);

    let mut buf = vec![0.0; 500];
    assert_eq!(unsafe { cl_model_sample_path(m, 500, 9, buf.as_mut_ptr(), buf.len()) }, ClStatus::Ok);
    assert_eq!(buf, lib.sample_path(500, 9).unwrap());
    unsafe { cl_model_free(m) };
}

#[test]
fn errors_carry_codes_and_messages() {
    assert_eq!(model("{not json").unwrap_err(), ClStatus::InvalidJson);
    assert!(!last_error().is_empty());
    assert_eq!(model(r#"{"kind":"moving_max","m":2,"alpha":-1.0}"#).unwrap_err(), ClStatus::InvalidArgument);
    assert_eq!(unsafe { cl_model_from_json(ptr::null(), &mut ptr::null_mut()) }, ClStatus::NullPointer);

    let iid = model(r#"{"kind":"iid_pareto","alpha":1.0}"#).unwrap();
    let mut theta = 0.0;
    assert_eq!(unsafe { cl_model_known_theta(iid, &mut theta) }, ClStatus::Ok);
    let mut buf = [0.0; 4];
    assert_eq!(unsafe { cl_model_sample_path(iid, 10, 1, buf.as_mut_ptr(), 4) }, ClStatus::BufferTooSmall);
    assert!(last_error().contains("need 10"));
    let mut v = 0.0;
    assert_eq!(unsafe { cl_model_level_u(iid, 10, &mut v) }, ClStatus::Ok);
    assert!(last_error().is_empty());
    unsafe { cl_model_free(iid) };

    let linear = model(r#"{"kind":"associated_linear"}"#).unwrap();
    assert_eq!(unsafe { cl_model_known_theta(linear, &mut theta) }, ClStatus::NotAvailable);
    unsafe { cl_model_free(linear) };
}

#[test]
fn canonical_queries() {
    let h = canonical(CP);
    let (mut mass, mut void, mut l, mut hw) = (0.0, 0.0, 0.0, 1.0);
    let f = c(r#"{"knots":[0.15,0.2,0.4,0.45],"values":[0,1,1,0]}"#);
    unsafe {
        assert_eq!(cl_canonical_tail_mass(h, 0.3, &mut mass), ClStatus::Ok);
        assert_eq!(cl_canonical_void_probability(h, 0.3, &mut void), ClStatus::Ok);
        assert_eq!(cl_canonical_laplace(h, f.as_ptr(), &mut l, &mut hw), ClStatus::Ok, "{}", last_error());
    }
    assert!((mass - 0.35).abs() < 1e-12);
    assert!((void - (-0.35f64).exp()).abs() < 1e-12);
    let lib: cluster_limit::limits::CanonicalMeasure = serde_json::from_str(CP).unwrap();
    let tf = serde_json::from_str(f.to_str().unwrap()).unwrap();
    assert_eq!(l, lib.laplace(&tf).unwrap().value);
    assert_eq!(hw, 0.0);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { cl_canonical_sample_json(h, 0.01, 4, &mut json) }, ClStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { cl_string_free(json) };
    assert_eq!(text, lib.sample_seeded(0.01, 4).unwrap().to_json());

    let mut bad = 0.0;
    assert_eq!(unsafe { cl_canonical_tail_mass(h, -0.5, &mut bad) }, ClStatus::InvalidArgument);
    unsafe { cl_canonical_free(h) };
}

fn config(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)).unwrap()
}

#[test]
fn verify_config_in_memory_and_on_disk() {
    let text = c(&config("iid_poisson.toml"));
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { cl_verify_config(text.as_ptr(), &mut r) }, ClStatus::Ok, "{}", last_error());
    let (mut pass, mut rows) = (false, 0usize);
    let mut json = ptr::null_mut();
    unsafe {
        assert_eq!(cl_report_summary(r, &mut pass, &mut rows), ClStatus::Ok);
        assert_eq!(cl_report_to_json(r, &mut json), ClStatus::Ok);
    }
    let mem = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe {
        cl_string_free(json);
        cl_report_free(r);
    }
    assert!(pass);
    assert!(rows > 0);

    let dir = tempfile::tempdir().unwrap();
    let out = c(dir.path().to_str().unwrap());
    let mut code = -1;
    assert_eq!(unsafe { cl_run_config(text.as_ptr(), out.as_ptr(), &mut code) }, ClStatus::Ok, "{}", last_error());
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("report.json")).unwrap(), mem);
}

#[test]
fn bad_config_is_a_config_error() {
    let text = c(&config("iid_poisson.toml").replace("reps = 500", "repz = 500"));
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { cl_verify_config(text.as_ptr(), &mut r) }, ClStatus::Config);
    assert!(last_error().contains("repz"));
    assert!(r.is_null());
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/cluster_limit.h")).unwrap();
    let src = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 20);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let Some(cc) = which_cc() else {
        eprintln!("no C compiler on PATH; the C link check is not exercised");
        return;
    };
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    // integration tests live in target/<profile>/deps next to the built library
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    let archive = lib_dir.join("libcluster_limit_ffi.a");
    assert!(archive.exists(), "{} not built", archive.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = std::process::Command::new(cc)
        .arg(dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.ends_with("0.500000 0.350000\n"), "{stdout}");
}

fn which_cc() -> Option<&'static str> {
    for cc in ["cc", "gcc", "clang"] {
        if std::process::Command::new(cc).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Some(cc);
        }
    }
    None
}
