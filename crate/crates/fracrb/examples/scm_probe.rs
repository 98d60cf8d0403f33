// scratch probe: positivity of the SCM bound vs constraint count
use std::sync::Arc;
use fracrb::certify::*;
use fracrb::eim::eim_build;
use fracrb::fem::{RhsDescription, SolverOptions, TruthProblem};
use fracrb::mesh::*;
use fracrb::param::{equispaced, Parameter, Subdomain};

fn main() {
    for subdomain in [Subdomain::D1, Subdomain::D2] {
        let gamma = subdomain.default_grading();
        let (n, m) = (8, 12);
        let tri = build_unit_square_triangulation(n).unwrap();
        let iv = build_graded_partition(m, gamma, 2.233).unwrap();
        let mesh = Arc::new(build_cylinder_mesh(tri, iv));
        let graded = build_graded_partition(m * 16, gamma, 2.233).unwrap().nodes;
        let y_grid = match subdomain { Subdomain::D1 => graded, Subdomain::D2 => graded[1..].to_vec() };
        let (lo, hi) = subdomain.s_range();
        let s_grid = equispaced(lo, hi, 65);
        let eim = Arc::new(eim_build(subdomain, &y_grid, &s_grid, 25, 1e-12).unwrap());
        println!("{subdomain}: Q = {}", eim.q());
        let problem = TruthProblem::new(mesh, eim, RhsDescription::Example1, SolverOptions::default()).unwrap();
        let gref = ReferenceMetric::new(&problem).unwrap();
        let training: Vec<Parameter> = equispaced(lo, hi, 65).into_iter().map(Parameter::new).collect();
        for &k in &[8usize, 12, 16, 20, 24, 32] {
            let scm = scm_build(&problem, &gref, &training, k, &EigenOptions::default()).unwrap();
            let val = equispaced(lo, hi, 201);
            let mut min_lb = f64::INFINITY;
            let mut neg = 0;
            for &s in &val {
                let theta = problem.theta_scaled(s).unwrap();
                let lb = scm_lower_bound(&scm, &theta).unwrap();
                if lb <= 0.0 { neg += 1; }
                min_lb = min_lb.min(lb);
            }
            println!("  k={k:2}  actual={} min_lb={min_lb:.4e} negatives={neg}/201", scm.constraints.len());
        }
    }
}
