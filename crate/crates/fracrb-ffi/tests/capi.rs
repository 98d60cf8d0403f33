//! Exercises the C ABI end to end: train a tiny model with the core crate,
//! save it, reload it through the foreign interface and compare online
//! outputs against the in-memory model.

use std::ffi::CString;
use std::sync::Arc;

use fracrb::eim::eim_build;
use fracrb::fem::{RhsDescription, SolverOptions, TruthProblem};
use fracrb::mesh::{build_cylinder_mesh, build_graded_partition, build_unit_square_triangulation};
use fracrb::model_io::{save_bundle, MeshParams, ModelBundle};
use fracrb::param::{equispaced, Parameter, Subdomain};
use fracrb::rbm::{greedy_offline, GreedyOptions};
use fracrb::certify::{scm_build, EigenOptions, ReferenceMetric};

use fracrb_ffi::*;

fn tiny_bundle() -> (ModelBundle, TruthProblem) {
    let (n, m) = (6, 8);
    let subdomain = Subdomain::D1;
    let gamma = subdomain.default_grading();
    let tri = build_unit_square_triangulation(n).unwrap();
    let iv = build_graded_partition(m, gamma, 2.233).unwrap();
    let mesh = Arc::new(build_cylinder_mesh(tri, iv));
    let y_grid = build_graded_partition(m * 16, gamma, 2.233).unwrap().nodes;
    let s_grid = equispaced(0.03, 0.5, 33);
    let eim = Arc::new(eim_build(subdomain, &y_grid, &s_grid, 14, 1e-12).unwrap());
    let problem = TruthProblem::new(
        mesh,
        eim,
        RhsDescription::Example1,
        SolverOptions::default(),
    )
    .unwrap();
    let training: Vec<Parameter> = s_grid.iter().map(|&s| Parameter::new(s)).collect();
    let opts = GreedyOptions {
        n_max: 4,
        ..GreedyOptions::default()
    };
    let reduced = greedy_offline(&problem, &training, &opts, None).unwrap();
    let gref = ReferenceMetric::new(&problem).unwrap();
    let scm = scm_build(&problem, &gref, &training, 3, &EigenOptions::default()).unwrap();
    (
        ModelBundle {
            mesh: MeshParams {
                n,
                m_fe: m,
                gamma,
                y_plus: 2.233,
            },
            reduced,
            scm: Some(scm),
        },
        problem,
    )
}

#[test]
fn load_evaluate_and_free() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.frbm");
    let (bundle, problem) = tiny_bundle();
    save_bundle(&bundle, &path, &[]).unwrap();

    let c_path = CString::new(path.to_str().unwrap()).unwrap();
    let mut handle: *mut FracrbModel = std::ptr::null_mut();
    unsafe {
        assert_eq!(
            fracrb_model_load(c_path.as_ptr(), &mut handle),
            FracrbStatus::Ok
        );
        assert!(!handle.is_null());

        let mut info = std::mem::zeroed::<FracrbModelInfo>();
        assert_eq!(fracrb_model_info(handle, &mut info), FracrbStatus::Ok);
        assert_eq!(info.n_basis, bundle.reduced.n_basis());
        assert_eq!(info.trace_len, bundle.reduced.trace_snapshots[0].len());
        assert_eq!(info.subdomain, 1);
        assert_eq!(info.has_certification, 1);
        assert_eq!(info.needs_nu, 0);

        // Coefficients match the in-memory model bit for bit.
        let s = 0.227;
        let sol = bundle
            .reduced
            .online_solve(&Parameter::new(s), None)
            .unwrap();
        let mut coeffs = vec![0.0; info.n_basis];
        let mut written = 0usize;
        assert_eq!(
            fracrb_online_coeffs(
                handle,
                s,
                f64::NAN,
                0,
                coeffs.as_mut_ptr(),
                coeffs.len(),
                &mut written
            ),
            FracrbStatus::Ok
        );
        assert_eq!(written, info.n_basis);
        for (a, b) in coeffs.iter().zip(sol.c_raw.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        // Trace agrees with the in-memory evaluation.
        let mut trace = vec![0.0; info.trace_len];
        assert_eq!(
            fracrb_online_trace(handle, s, f64::NAN, 0, trace.as_mut_ptr(), trace.len()),
            FracrbStatus::Ok
        );
        let expect = bundle.reduced.online_trace(&sol);
        for (a, b) in trace.iter().zip(&expect) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        // L2 norm agrees with the mass-matrix norm.
        let mut l2 = 0.0;
        assert_eq!(
            fracrb_trace_l2(handle, s, f64::NAN, 0, &mut l2),
            FracrbStatus::Ok
        );
        let direct = problem.l2_norm_omega(&expect);
        assert!((l2 - direct).abs() <= 1e-14 * direct);

        // Certified bound available and positive.
        let (mut delta, mut residual, mut beta) = (0.0, 0.0, 0.0);
        assert_eq!(
            fracrb_error_bound(handle, s, f64::NAN, &mut delta, &mut residual, &mut beta),
            FracrbStatus::Ok
        );
        assert!(delta > 0.0 && beta > 0.0 && residual >= 0.0);

        fracrb_model_free(handle);
    }
}

#[test]
fn error_codes() {
    unsafe {
        // Null arguments.
        let mut handle: *mut FracrbModel = std::ptr::null_mut();
        assert_eq!(
            fracrb_model_load(std::ptr::null(), &mut handle),
            FracrbStatus::NullPointer
        );

        // Missing file.
        let missing = CString::new("/nonexistent/model.frbm").unwrap();
        assert_eq!(
            fracrb_model_load(missing.as_ptr(), &mut handle),
            FracrbStatus::IoError
        );

        // Corrupt container.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.frbm");
        std::fs::write(&path, b"not a container").unwrap();
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        assert_eq!(
            fracrb_model_load(c_path.as_ptr(), &mut handle),
            FracrbStatus::BadFormat
        );

        // Valid model: domain and buffer errors.
        let model_path = dir.path().join("model.frbm");
        let (bundle, _) = tiny_bundle();
        save_bundle(&bundle, &model_path, &[]).unwrap();
        let c_path = CString::new(model_path.to_str().unwrap()).unwrap();
        assert_eq!(
            fracrb_model_load(c_path.as_ptr(), &mut handle),
            FracrbStatus::Ok
        );
        let mut out = vec![0.0; 64];
        let mut written = 0usize;
        assert_eq!(
            fracrb_online_coeffs(
                handle,
                0.8, // outside the trained range
                f64::NAN,
                0,
                out.as_mut_ptr(),
                out.len(),
                &mut written
            ),
            FracrbStatus::OutOfDomain
        );
        assert_eq!(
            fracrb_online_trace(handle, 0.3, f64::NAN, 0, out.as_mut_ptr(), 3),
            FracrbStatus::BufferTooSmall
        );
        fracrb_model_free(handle);
        // Freeing null is a no-op.
        fracrb_model_free(std::ptr::null_mut());
    }
    // Version string is a valid C string.
    let version = unsafe { std::ffi::CStr::from_ptr(fracrb_version()) };
    assert!(!version.to_str().unwrap().is_empty());
}
