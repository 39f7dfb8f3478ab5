use std::ffi::{CStr, CString};
use std::ptr;

use cmcdeform_ffi::*;

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = cmc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn sphere_positions_lie_on_unit_sphere() {
    let mut mesh = ptr::null_mut();
    let st = unsafe { cmc_mesh_classical(cstr("1").as_ptr(), cstr("0").as_ptr(), 1.0, 0.8, 9, &mut mesh) };
    assert_eq!(st, CmcStatus::Ok);
    let (mut nx, mut ny) = (0, 0);
    assert_eq!(unsafe { cmc_mesh_dims(mesh, &mut nx, &mut ny) }, CmcStatus::Ok);
    assert_eq!((nx, ny), (9, 9));
    assert_eq!(unsafe { cmc_mesh_valid_count(mesh) }, 81);

    let mut pos = vec![0.0; 3 * nx * ny];
    let mut nrm = vec![0.0; 3 * nx * ny];
    assert_eq!(unsafe { cmc_mesh_positions(mesh, pos.as_mut_ptr(), pos.len()) }, CmcStatus::Ok);
    assert_eq!(unsafe { cmc_mesh_normals(mesh, nrm.as_mut_ptr(), nrm.len()) }, CmcStatus::Ok);
    // the centre of curvature f + N/h is the same point everywhere
    let centre: Vec<[f64; 3]> = pos.chunks(3).zip(nrm.chunks(3)).map(|(p, n)| [p[0] + n[0], p[1] + n[1], p[2] + n[2]]).collect();
    for c in &centre {
        for k in 0..3 {
            assert!((c[k] - centre[0][k]).abs() < 1e-10);
        }
    }
    unsafe { cmc_mesh_free(mesh) };
}

#[test]
fn small_buffer_is_rejected() {
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { cmc_mesh_gallery(cstr("enneper-2").as_ptr(), 0, &mut mesh) }, CmcStatus::Ok);
    let mut buf = [0.0; 6];
    assert_eq!(unsafe { cmc_mesh_positions(mesh, buf.as_mut_ptr(), buf.len()) }, CmcStatus::BufferTooSmall);
    assert!(last_error().contains("needed"));
    unsafe { cmc_mesh_free(mesh) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut mesh = ptr::null_mut();
    let st = unsafe { cmc_mesh_classical(cstr("1+").as_ptr(), cstr("z").as_ptr(), 1.0, 1.0, 5, &mut mesh) };
    assert_eq!(st, CmcStatus::Config);
    assert!(last_error().contains("syntax"));
    assert!(mesh.is_null());

    let st = unsafe { cmc_mesh_classical(ptr::null(), cstr("z").as_ptr(), 1.0, 1.0, 5, &mut mesh) };
    assert_eq!(st, CmcStatus::NullPointer);
    let st = unsafe { cmc_mesh_classical(cstr("1").as_ptr(), cstr("z").as_ptr(), 1.0, -1.0, 5, &mut mesh) };
    assert_eq!(st, CmcStatus::Config);
    let st = unsafe { cmc_mesh_gallery(cstr("torus").as_ptr(), 0, &mut mesh) };
    assert_eq!(st, CmcStatus::Config);
    let st = unsafe { cmc_mesh_gallery(cstr("catenoid").as_ptr(), 99, &mut mesh) };
    assert_eq!(st, CmcStatus::Config);
    assert!(unsafe { cmc_mesh_report_json(ptr::null()) }.is_null());
    unsafe { cmc_mesh_free(ptr::null_mut()) };
}

#[test]
fn report_and_obj_output() {
    let mut mesh = ptr::null_mut();
    let st = unsafe { cmc_mesh_normalized(cstr("1").as_ptr(), cstr("-2*z").as_ptr(), 0.5, 0.6, 17, &mut mesh) };
    assert_eq!(st, CmcStatus::Ok);
    let s = unsafe { cmc_mesh_report_json(mesh) };
    assert!(!s.is_null());
    let json: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    unsafe { cmc_string_free(s) };
    assert_eq!(json["h"], 0.5);
    assert!(json["curvature"]["max_rel_h_error"].as_f64().unwrap() < 1e-2);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.obj");
    let p = cstr(path.to_str().unwrap());
    assert_eq!(unsafe { cmc_mesh_write_obj(mesh, p.as_ptr()) }, CmcStatus::Ok);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 17 * 17);
    let bad = cstr(dir.path().join("missing/m.obj").to_str().unwrap());
    assert_eq!(unsafe { cmc_mesh_write_obj(mesh, bad.as_ptr()) }, CmcStatus::Io);
    unsafe { cmc_mesh_free(mesh) };
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(cmc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and the static
/// library. Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    // tests run from target/<profile>/deps; the static library sits one level up
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    if !lib_dir.join("libcmcdeform_ffi.a").exists() {
        eprintln!("static library not found in {}; skipping", lib_dir.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let status = std::process::Command::new(cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(lib_dir.join("libcmcdeform_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).ends_with("ok\n"));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
