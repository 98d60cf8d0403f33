use std::sync::Arc;

use approx::assert_relative_eq;

use super::*;
use crate::eim::eim_build;
use crate::fem::SolverOptions;
use crate::mesh::{build_cylinder_mesh, build_graded_partition, build_unit_square_triangulation};
use crate::param::equispaced;

fn desk_problem(subdomain: Subdomain, rhs: RhsDescription) -> TruthProblem {
    let (n, m) = (8, 12);
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
    let s_grid = equispaced(lo, hi, 65);
    let eim = Arc::new(eim_build(subdomain, &y_grid, &s_grid, 22, 1e-12).unwrap());
    TruthProblem::new(mesh, eim, rhs, SolverOptions::default()).unwrap()
}

fn train(
    problem: &TruthProblem,
    n_max: usize,
    training: &[Parameter],
) -> ReducedModel {
    let opts = GreedyOptions {
        n_max,
        ..GreedyOptions::default()
    };
    greedy_offline(problem, training, &opts, None).unwrap()
}

fn training_set(subdomain: Subdomain, count: usize) -> Vec<Parameter> {
    let (lo, hi) = subdomain.s_range();
    equispaced(lo, hi, count)
        .into_iter()
        .map(Parameter::new)
        .collect()
}

#[test]
fn single_snapshot_model_reproduces_truth() {
    let p = desk_problem(Subdomain::D1, RhsDescription::Example1);
    let training = training_set(Subdomain::D1, 33);
    let model = train(&p, 1, &training);
    assert_eq!(model.n_basis(), 1);
    let mu = model.mu_snapshots[0];
    let sol = model.online_solve(&mu, None).unwrap();
    // Lagrange representation of the snapshot itself is the unit coefficient.
    assert_relative_eq!(sol.c_raw[0], 1.0, max_relative = 1e-11);
    let truth = p.solve_truth(&mu).unwrap();
    let trace_truth = p.trace_bottom(&truth);
    let trace_online = model.online_trace(&sol);
    let diff: Vec<f64> = trace_online
        .iter()
        .zip(&trace_truth)
        .map(|(a, b)| a - b)
        .collect();
    assert!(p.l2_norm_omega(&diff) <= 1e-10 * p.l2_norm_omega(&trace_truth));
}

#[test]
fn snapshots_pairwise_distinct_and_objectives_recorded() {
    let p = desk_problem(Subdomain::D1, RhsDescription::Example1);
    let training = training_set(Subdomain::D1, 33);
    let model = train(&p, 6, &training);
    for i in 0..model.n_basis() {
        for j in i + 1..model.n_basis() {
            assert_ne!(model.mu_snapshots[i].s, model.mu_snapshots[j].s);
        }
    }
    assert!(!model.greedy_objectives.is_empty());
}

#[test]
fn snapshot_reproduction_all_snapshots() {
    for subdomain in [Subdomain::D1, Subdomain::D2] {
        let p = desk_problem(subdomain, RhsDescription::Example1);
        let training = training_set(subdomain, 33);
        let model = train(&p, 5, &training);
        for (n, mu) in model.mu_snapshots.iter().enumerate() {
            let sol = model.online_solve(mu, None).unwrap();
            let online = model.online_trace(&sol);
            let diff: Vec<f64> = online
                .iter()
                .zip(&model.trace_snapshots[n])
                .map(|(a, b)| a - b)
                .collect();
            let rel = p.l2_norm_omega(&diff) / p.l2_norm_omega(&model.trace_snapshots[n]);
            assert!(rel <= 1e-10, "snapshot {n} reproduction error {rel:.3e}");
        }
    }
}

#[test]
fn basis_orthonormal_in_reference_inner_product() {
    let p = desk_problem(Subdomain::D2, RhsDescription::Example1);
    let training = training_set(Subdomain::D2, 33);
    let model = train(&p, 5, &training);
    // Recover the orthonormal basis from raw snapshots and basis_r:
    // xi_k = sum_n snapshots[n] (R^{-1})[n][k]; check Gram identity instead
    // through the projection property: reduced op at a snapshot order equals
    // the Rayleigh data of the truth solve. Cheap proxy: R is upper
    // triangular with positive diagonal.
    let n = model.n_basis();
    for i in 0..n {
        assert!(model.basis_r[(i, i)] > 0.0);
        for j in 0..i {
            assert_eq!(model.basis_r[(i, j)], 0.0);
        }
    }
    // Galerkin reproduction at snapshots also pins down orthonormality
    // indirectly; the dedicated dense check lives in the integration tests.
}

#[test]
fn online_trace_linearity_and_zero() {
    let p = desk_problem(Subdomain::D1, RhsDescription::Example1);
    let training = training_set(Subdomain::D1, 17);
    let model = train(&p, 3, &training);
    let mu = Parameter::new(0.21);
    let sol = model.online_solve(&mu, None).unwrap();
    let trace = model.online_trace(&sol);
    let mut doubled = sol;
    doubled.c_raw *= 2.0;
    let trace2 = model.online_trace(&doubled);
    for (a, b) in trace.iter().zip(&trace2) {
        assert_relative_eq!(2.0 * a, *b, max_relative = 1e-14, epsilon = 1e-300);
    }
    let zero = OnlineSolution {
        mu,
        n_used: model.n_basis(),
        c_orth: DVector::zeros(model.n_basis()),
        c_raw: DVector::zeros(model.n_basis()),
    };
    assert!(model.online_trace(&zero).iter().all(|&v| v == 0.0));
}

#[test]
fn truncated_online_solve_uses_leading_basis() {
    let p = desk_problem(Subdomain::D1, RhsDescription::Example1);
    let training = training_set(Subdomain::D1, 33);
    let model = train(&p, 6, &training);
    let mu = model.mu_snapshots[0];
    let sol1 = model.online_solve(&mu, Some(1)).unwrap();
    assert_relative_eq!(sol1.c_raw[0], 1.0, max_relative = 1e-11);
    assert!(model.online_solve(&mu, Some(0)).is_err());
    assert!(model.online_solve(&mu, Some(99)).is_err());
}

#[test]
fn ensemble_errors_decay_with_basis_size() {
    let p = desk_problem(Subdomain::D1, RhsDescription::Example1);
    let training = training_set(Subdomain::D1, 33);
    let model = train(&p, 8, &training);
    let test: Vec<Parameter> = equispaced(0.045, 0.49, 9).into_iter().map(Parameter::new).collect();
    let report = error_ensembles(&p, &model, &test, &[1, 4, 8]).unwrap();
    let s1 = stats(&report.errors_interpolated[0]);
    let s8 = stats(&report.errors_interpolated[2]);
    assert!(
        s8.median < s1.median * 1e-2,
        "median at N=8 {:.3e} vs N=1 {:.3e}",
        s8.median,
        s1.median
    );
    // The exact-weight ensemble is floored by the truth gap.
    for (f, (e, g)) in report.errors_exact[2]
        .iter()
        .zip(report.errors_interpolated[2].iter().zip(&report.truth_gap))
    {
        assert!((f - g).abs() <= e + 1e-13, "triangle inequality violated");
    }
}

#[test]
fn seeded_first_snapshot_is_deterministic() {
    let p = desk_problem(Subdomain::D1, RhsDescription::Example1);
    let training = training_set(Subdomain::D1, 17);
    let opts = GreedyOptions {
        n_max: 2,
        first: FirstSnapshot::SeededRandom(1234),
        ..GreedyOptions::default()
    };
    let a = greedy_offline(&p, &training, &opts, None).unwrap();
    let b = greedy_offline(&p, &training, &opts, None).unwrap();
    assert_eq!(
        a.mu_snapshots.iter().map(|m| m.s).collect::<Vec<_>>(),
        b.mu_snapshots.iter().map(|m| m.s).collect::<Vec<_>>()
    );
}

#[test]
fn residual_free_stopping_tolerance() {
    let p = desk_problem(Subdomain::D1, RhsDescription::Example1);
    let training = training_set(Subdomain::D1, 33);
    let opts = GreedyOptions {
        n_max: 12,
        tol: 1e-9,
        ..GreedyOptions::default()
    };
    let model = greedy_offline(&p, &training, &opts, None).unwrap();
    assert!(model.n_basis() < 12, "stopping rule never triggered");
}

#[test]
fn two_parameter_training() {
    let p = desk_problem(Subdomain::D1, RhsDescription::Example2);
    let mut training = Vec::new();
    for s in equispaced(0.03, 0.5, 9) {
        for nu in equispaced(0.0, 1.0, 9) {
            training.push(Parameter::with_nu(s, nu));
        }
    }
    let model = train(&p, 6, &training);
    assert_eq!(model.reduced_loads.len(), 2);
    let mu = model.mu_snapshots[2];
    let sol = model.online_solve(&mu, None).unwrap();
    let online = model.online_trace(&sol);
    let diff: Vec<f64> = online
        .iter()
        .zip(&model.trace_snapshots[2])
        .map(|(a, b)| a - b)
        .collect();
    assert!(p.l2_norm_omega(&diff) <= 1e-10 * p.l2_norm_omega(&model.trace_snapshots[2]));
}

#[test]
fn stats_helper() {
    let s = stats(&[3.0, 1.0, 2.0]);
    assert_eq!(s.median, 2.0);
    assert_eq!(s.max, 3.0);
    assert_eq!(s.min, 1.0);
    let s = stats(&[4.0, 1.0, 2.0, 3.0]);
    assert_eq!(s.median, 2.5);
}
