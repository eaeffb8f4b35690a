use std::ffi::CString;
use std::ptr;

use qkim_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { qkim_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn params(n: usize, gamma: f64, delta: f64, boundary: QkimBoundary) -> *mut QkimParams {
    let mut p = ptr::null_mut();
    let st = unsafe { qkim_params_new(n, gamma, delta, boundary as u32, 1.0, &mut p) };
    assert_eq!(st, QkimStatus::Ok);
    p
}

#[test]
fn invalid_parameters_report_errors() {
    let mut p = ptr::null_mut();
    let st = unsafe { qkim_params_new(6, 1.5, 0.0, 0, 1.0, &mut p) };
    assert_eq!(st, QkimStatus::InvalidArgument);
    assert!(p.is_null());
    assert!(last_error().contains("gamma"));
    assert_eq!(unsafe { qkim_params_new(6, 0.5, 0.0, 7, 1.0, &mut p) }, QkimStatus::InvalidArgument);
    assert_eq!(unsafe { qkim_params_new(6, 0.5, 0.0, 0, 1.0, ptr::null_mut()) }, QkimStatus::NullPointer);
    unsafe { qkim_params_free(ptr::null_mut()) };
}

#[test]
fn hamiltonian_round_trip() {
    let p = params(6, 0.5, 0.0, QkimBoundary::Periodic);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { qkim_hamiltonian_build(p, 0, &mut h) }, QkimStatus::Ok);
    let mut dim = 0;
    assert_eq!(unsafe { qkim_hamiltonian_dim(h, &mut dim) }, QkimStatus::Ok);
    assert_eq!(dim, 64);

    let mut len = 10;
    let mut small = vec![0.0; 10];
    assert_eq!(unsafe { qkim_hamiltonian_eigenvalues(h, small.as_mut_ptr(), &mut len) }, QkimStatus::BufferTooSmall);
    assert_eq!(len, 64);
    let mut vals = vec![0.0; 64];
    assert_eq!(unsafe { qkim_hamiltonian_eigenvalues(h, vals.as_mut_ptr(), &mut len) }, QkimStatus::Ok);
    assert!(vals[0].abs() < 1e-10);
    assert!((vals[1] - 1.0).abs() < 1e-10);

    let mut len = 64 * 64;
    let mut m = vec![0.0; len];
    assert_eq!(unsafe { qkim_hamiltonian_matrix(h, m.as_mut_ptr(), &mut len) }, QkimStatus::Ok);
    let trace: f64 = (0..64).map(|i| m[i * 64 + i]).sum();
    assert!((trace - vals.iter().sum::<f64>()).abs() < 1e-9);

    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { qkim_hamiltonian_build(p, 1 << 6, &mut bad) }, QkimStatus::InvalidArgument);
    unsafe {
        qkim_hamiltonian_free(h);
        qkim_params_free(p);
    }
}

#[test]
fn dbc_through_the_abi() {
    let p = params(8, 0.7, 0.3, QkimBoundary::Periodic);
    let (mut holds, mut v) = (false, 1.0);
    assert_eq!(unsafe { qkim_dbc_check(p, &mut holds, &mut v) }, QkimStatus::Ok);
    assert!(holds && v < 1e-12);
    assert_eq!(unsafe { qkim_dbc_check(ptr::null(), &mut holds, &mut v) }, QkimStatus::NullPointer);
    unsafe { qkim_params_free(p) };
}

#[test]
fn ground_state_entropy() {
    let p = params(10, 0.0, 0.0, QkimBoundary::Open);
    let tau = CString::new("++++++++++").unwrap();
    let mut gs = ptr::null_mut();
    assert_eq!(unsafe { qkim_ground_state(p, tau.as_ptr(), 16, &mut gs) }, QkimStatus::Ok);
    let mut e = 1.0;
    assert_eq!(unsafe { qkim_ground_state_energy(gs, &mut e) }, QkimStatus::Ok);
    assert!(e.abs() < 1e-9);
    let mut s = vec![1.0; 9];
    let mut len = 9;
    assert_eq!(unsafe { qkim_ground_state_entropy(gs, s.as_mut_ptr(), &mut len) }, QkimStatus::Ok);
    assert!(s.iter().all(|x| x.abs() < 1e-9));
    let short = CString::new("+-").unwrap();
    let mut other = ptr::null_mut();
    assert_eq!(unsafe { qkim_ground_state(p, short.as_ptr(), 16, &mut other) }, QkimStatus::InvalidArgument);
    let periodic = params(10, 0.5, 0.0, QkimBoundary::Periodic);
    assert_eq!(unsafe { qkim_ground_state(periodic, tau.as_ptr(), 16, &mut other) }, QkimStatus::Unsupported);
    unsafe {
        qkim_ground_state_free(gs);
        qkim_params_free(p);
        qkim_params_free(periodic);
    }
}

#[test]
fn density_evolution_preserves_trace() {
    let p = params(3, 0.5, 0.0, QkimBoundary::Periodic);
    let init = CString::new("ghz").unwrap();
    let mut re = vec![0.0; 64];
    let mut im = vec![0.0; 64];
    let mut len = 64;
    let st = unsafe { qkim_evolve_density(p, init.as_ptr(), 2.0, re.as_mut_ptr(), im.as_mut_ptr(), &mut len) };
    assert_eq!(st, QkimStatus::Ok);
    assert_eq!(len, 64);
    let trace: f64 = (0..8).map(|i| re[i * 8 + i]).sum();
    assert!((trace - 1.0).abs() < 1e-10);
    let bad = CString::new("cat").unwrap();
    let st = unsafe { qkim_evolve_density(p, bad.as_ptr(), 2.0, re.as_mut_ptr(), im.as_mut_ptr(), &mut len) };
    assert_eq!(st, QkimStatus::Parse);
    unsafe { qkim_params_free(p) };
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/qkim.h");
    let text = std::fs::read_to_string(header).unwrap();
    for f in ["qkim_params_new", "qkim_hamiltonian_eigenvalues", "qkim_ground_state_entropy", "QKIM_STATUS_OK"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{header}\"\nint main(void) {{ QkimParams *p = 0; QkimStatus s = qkim_params_new(4, 0.5, 0.0, QKIM_BOUNDARY_PERIODIC, 1.0, &p); qkim_params_free(p); return s == QKIM_STATUS_OK ? 0 : 1; }}\n"
        ),
    )
    .unwrap();
    match std::process::Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).status() {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found; skipped syntax check"),
    }
}
