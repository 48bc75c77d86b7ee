use magmar_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

fn parse(text: &str) -> *mut MagmarModel {
    let text = CString::new(text).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { magmar_model_parse(text.as_ptr(), &mut m) }, MagmarStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = magmar_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn parse_errors_set_message() {
    let text = CString::new("MAGMAR(2,1)-xy-n").unwrap();
    let mut m = ptr::null_mut();
    let status = unsafe { magmar_model_parse(text.as_ptr(), &mut m) };
    assert_eq!(status, MagmarStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(last_error().contains("unknown copula code 'x'"));
    assert_eq!(unsafe { magmar_model_parse(ptr::null(), &mut m) }, MagmarStatus::NullPointer);
}

#[test]
fn params_and_model_string() {
    let m = parse("MAGMAR(1,1)-t-g");
    unsafe {
        assert_eq!(magmar_model_n_params(m), 3);
        assert_eq!(magmar_model_set_params(m, [0.4, 6.0, 1.5].as_ptr(), 3), MagmarStatus::Ok);
        let mut p = [0.0; 3];
        assert_eq!(magmar_model_get_params(m, p.as_mut_ptr(), 3), MagmarStatus::Ok);
        assert_eq!(p, [0.4, 6.0, 1.5]);
        assert_eq!(magmar_model_get_params(m, p.as_mut_ptr(), 2), MagmarStatus::BufferTooSmall);
        assert_eq!(magmar_model_set_params(m, [0.4, 6.0, 0.5].as_ptr(), 3), MagmarStatus::InvalidArgument);

        let mut needed = 0;
        let mut small = [0 as std::ffi::c_char; 4];
        assert_eq!(magmar_model_string(m, small.as_mut_ptr(), 4, &mut needed), MagmarStatus::BufferTooSmall);
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(magmar_model_string(m, buf.as_mut_ptr(), needed, ptr::null_mut()), MagmarStatus::Ok);
        assert_eq!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), "MAGMAR(1,1)-t-g");
        magmar_model_free(m);
    }
}

#[test]
fn simulate_likelihood_and_fit_match_library() {
    let m = parse("MAGMAR(1,0)-n");
    unsafe {
        assert_eq!(magmar_model_set_params(m, [0.6].as_ptr(), 1), MagmarStatus::Ok);
        let mut u = vec![0.0; 300];
        assert_eq!(magmar_simulate(m, 300, 11, 100, u.as_mut_ptr()), MagmarStatus::Ok);
        let spec =
            magmar::model::MagmarSpec::from_families(&[magmar::Family::Normal], &[]).with_params(&[0.6]).unwrap();
        let sim = magmar::model::simulate(&spec, 300, 11, 100).unwrap();
        assert_eq!(u, sim.series.values());

        let mut nll = 0.0;
        assert_eq!(magmar_neg_log_likelihood(m, u.as_ptr(), u.len(), 0.5, &mut nll), MagmarStatus::Ok);
        assert_eq!(nll, magmar::model::neg_log_likelihood(&spec, &u, 0.5).unwrap());

        let mut fitted = ptr::null_mut();
        let mut summary = MagmarFitSummary::default();
        assert_eq!(magmar_fit(m, u.as_ptr(), u.len(), 0.5, 1, &mut fitted, &mut summary), MagmarStatus::Ok);
        assert!(summary.converged && summary.n_params == 1 && summary.n_obs == 300);
        assert!(summary.nll <= nll + 1e-9);
        let mut rho = [0.0];
        magmar_model_get_params(fitted, rho.as_mut_ptr(), 1);
        assert!((rho[0] - 0.6).abs() < 0.1, "{rho:?}");
        magmar_model_free(fitted);

        let short = [0.5; 5];
        assert_eq!(magmar_fit(m, short.as_ptr(), 5, 0.5, 1, &mut fitted, ptr::null_mut()), MagmarStatus::Data);
        assert!(last_error().contains("series too short"));
        let bad = [0.5, 1.5];
        assert_eq!(magmar_neg_log_likelihood(m, bad.as_ptr(), 2, 0.5, &mut nll), MagmarStatus::Data);
        magmar_model_free(m);
    }
}

#[test]
fn copula_functions() {
    let p = [0.5];
    let mut h = 0.0;
    let mut back = 0.0;
    unsafe {
        assert_eq!(
            magmar_copula_eval(b'n' as _, p.as_ptr(), 1, MagmarCopulaFn::H2, 0.3, 0.7, &mut h),
            MagmarStatus::Ok
        );
        assert_eq!(
            magmar_copula_eval(b'n' as _, p.as_ptr(), 1, MagmarCopulaFn::H2Inverse, h, 0.7, &mut back),
            MagmarStatus::Ok
        );
        assert!((back - 0.3).abs() < 1e-9);
        let mut c = 0.0;
        assert_eq!(
            magmar_copula_eval(b'i' as _, ptr::null(), 0, MagmarCopulaFn::Cdf, 0.3, 0.7, &mut c),
            MagmarStatus::Ok
        );
        assert!((c - 0.21).abs() < 1e-15);
        assert_eq!(
            magmar_copula_eval(b'q' as _, ptr::null(), 0, MagmarCopulaFn::Cdf, 0.3, 0.7, &mut c),
            MagmarStatus::InvalidArgument
        );
        assert_eq!(
            magmar_copula_eval(b'g' as _, [0.5].as_ptr(), 1, MagmarCopulaFn::Density, 0.3, 0.7, &mut c),
            MagmarStatus::InvalidArgument
        );
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/magmar.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["magmar_model_parse", "magmar_model_free", "magmar_simulate", "magmar_fit", "magmar_last_error"] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(
        &src,
        "#include \"magmar.h\"\nint main(void) { MagmarModel *m = 0; return magmar_model_n_params(m) == 0 ? 0 : 1; }\n",
    )
    .unwrap();
    match Command::new("cc").arg("-fsyntax-only").arg("-I").arg(header.parent().unwrap()).arg(&src).output() {
        Ok(out) => assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr)),
        Err(_) => eprintln!("no C compiler; header syntax not checked"),
    }
}
