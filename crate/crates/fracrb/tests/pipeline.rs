//! Cross-module validation: the interpolated-weight truth against the
//! exact-weight truth, and dense checks of the reduced-basis projection
//! properties that the online data structures only witness indirectly.

use std::sync::Arc;

use fracrb::eim::eim_build;
use fracrb::fem::tensor::cylinder_operator_dense;
use fracrb::fem::{RhsDescription, SolverOptions, TruthProblem};
use fracrb::mesh::{build_cylinder_mesh, build_graded_partition, build_unit_square_triangulation};
use fracrb::param::{equispaced, Parameter, Subdomain};
use fracrb::rbm::{greedy_offline, GreedyOptions};

fn problem(n: usize, m: usize, subdomain: Subdomain, q_max: usize, s_points: usize) -> TruthProblem {
    let gamma = subdomain.default_grading();
    let tri = build_unit_square_triangulation(n).unwrap();
    let iv = build_graded_partition(m, gamma, 2.233).unwrap();
    let mesh = Arc::new(build_cylinder_mesh(tri, iv));
    let graded = build_graded_partition(m * 16, gamma, 2.233).unwrap().nodes;
    let y_grid = match subdomain {
        Subdomain::D1 => graded,
        Subdomain::D2 => graded[1..].to_vec(),
    };
    let (lo, hi) = subdomain.s_range();
    let s_grid = equispaced(lo, hi, s_points);
    let eim = Arc::new(eim_build(subdomain, &y_grid, &s_grid, q_max, 0.0).unwrap());
    TruthProblem::new(mesh, eim, RhsDescription::Example1, SolverOptions::default()).unwrap()
}

/// The two truth discretizations agree to the interpolation-error level on
/// the lower subdomain once enough interpolation functions are used.
#[test]
fn interpolated_and_exact_weight_solutions_agree() {
    let p = problem(8, 16, Subdomain::D1, 17, 257);
    assert_eq!(p.eim.q(), 17);
    for &s in &[0.07, 0.21, 0.38, 0.5] {
        let mu = Parameter::new(s);
        let interp = p.solve_truth(&mu).unwrap();
        let exact = p.solve_truth_exact_weight(&mu).unwrap();
        let diff: Vec<f64> = interp
            .coeffs
            .iter()
            .zip(&exact.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        let err = p.xh_norm(&diff, s).unwrap();
        let scale = p.xh_norm(&exact.coeffs, s).unwrap();
        assert!(
            err <= 1e-6 * scale,
            "s = {s}: relative energy gap {:.3e}",
            err / scale
        );
    }
}

/// Dense verification of the reduced basis: orthonormality in the reference
/// inner product, span identity with the raw snapshots, and Galerkin
/// optimality of the online solution in the parametric energy norm.
#[test]
fn reduced_basis_projection_properties_dense() {
    let p = problem(5, 6, Subdomain::D1, 12, 33);
    let training: Vec<Parameter> = equispaced(0.03, 0.5, 33)
        .into_iter()
        .map(Parameter::new)
        .collect();
    let opts = GreedyOptions {
        n_max: 4,
        ..GreedyOptions::default()
    };
    let model = greedy_offline(&p, &training, &opts, None).unwrap();
    let n = model.n_basis();
    let dofs = p.n_free();

    // Recover snapshots and the orthonormal basis Xi = U R^{-1}.
    let mut snapshots = nalgebra::DMatrix::zeros(dofs, n);
    for (j, mu) in model.mu_snapshots.iter().enumerate() {
        let sol = p.solve_truth(mu).unwrap();
        snapshots.set_column(j, &nalgebra::DVector::from_column_slice(&sol.coeffs));
    }
    let r = model.basis_r.clone();
    let r_inv = r.clone().try_inverse().unwrap();
    let basis = &snapshots * &r_inv;

    // Orthonormality in the reference inner product.
    let gref = p.reference_operator().unwrap();
    let gram_dense = cylinder_operator_dense(&p.sx, &p.mx, &gref.my, &gref.sy);
    let gram = basis.transpose() * &gram_dense * &basis;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!(
                (gram[(i, j)] - expect).abs() <= 1e-10,
                "gram[{i}][{j}] = {}",
                gram[(i, j)]
            );
        }
    }
    // Mutual span: snapshots reproduce through the change of basis.
    let reproduced = &basis * &r;
    let defect = (&reproduced - &snapshots).norm() / snapshots.norm();
    assert!(defect <= 1e-10, "span defect {defect:.3e}");

    // Galerkin optimality in the parametric energy norm at an off-training
    // order: the online error equals the best approximation from the span.
    let mu = Parameter::new(0.3123);
    let theta = p.theta_scaled(mu.s).unwrap();
    let op = p.op.collapse(&theta);
    let a_dense = cylinder_operator_dense(&p.sx, &p.mx, &op.my, &op.sy);
    let truth = p.solve_truth(&mu).unwrap();
    let u = nalgebra::DVector::from_column_slice(&truth.coeffs);

    let sol = model.online_solve(&mu, None).unwrap();
    let u_online = &basis * &sol.c_orth;
    let e_online = &u - &u_online;
    let energy = |v: &nalgebra::DVector<f64>| (v.transpose() * &a_dense * v)[(0, 0)].sqrt();

    // Best approximation: the energy projection onto the span.
    let proj_matrix = basis.transpose() * &a_dense * &basis;
    let proj_rhs = basis.transpose() * &a_dense * &u;
    let c_best = proj_matrix.lu().solve(&proj_rhs).unwrap();
    let e_best = &u - &basis * c_best;
    assert!(
        energy(&e_online) <= energy(&e_best) * (1.0 + 1e-9) + 1e-13,
        "online {:.6e} vs best {:.6e}",
        energy(&e_online),
        energy(&e_best)
    );
}

/// The truth solve rejects parameters outside the subdomain of its
/// interpolation model and flags genuinely indefinite reduced inputs.
#[test]
fn domain_errors_propagate() {
    let p = problem(4, 4, Subdomain::D2, 8, 17);
    assert!(p.solve_truth(&Parameter::new(0.2)).is_err());
    assert!(p.theta_scaled(0.99).is_err());
}
