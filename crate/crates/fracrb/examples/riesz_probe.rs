// scratch probe: three routes to the residual dual norm
use fracrb::certify::{self, ReferenceMetric};
use fracrb::cli::{build_problem_with_eim, train_subdomain};
use fracrb::config::{Preset, RunConfig};
use fracrb::param::{Parameter, Subdomain};
use nalgebra::DMatrix;

fn main() {
    let config = RunConfig::preset(Preset::Desk);
    let subdomain = Subdomain::D1;
    let bundle = train_subdomain(&config, subdomain).unwrap();
    let problem = build_problem_with_eim(&config, subdomain, bundle.reduced.eim.clone()).unwrap();
    let model = &bundle.reduced;
    let gref = ReferenceMetric::new(&problem).unwrap();
    let n = model.n_basis();
    let nf = problem.n_free();

    // Recover the orthonormal basis from fresh (deterministic) truth solves.
    let mut snaps = DMatrix::zeros(nf, n);
    for (j, mu) in model.mu_snapshots.iter().enumerate() {
        let t = problem.solve_truth(mu).unwrap();
        snaps.set_column(j, &nalgebra::DVector::from_column_slice(&t.coeffs));
    }
    let r_inv = model.basis_r.clone().try_inverse().unwrap();
    let basis = &snaps * &r_inv;

    let s = 0.03 + (0.5 - 0.03) * 63.0 / 65.0;
    let mu = Parameter::new(s);
    let sol = model.online_solve(&mu, None).unwrap();
    let res_online = model.residual_dual_norm(&mu, &sol).unwrap();
    let res_direct = certify::direct_residual_dual_norm(&problem, &gref, model, &mu, &sol).unwrap();

    // Explicit route: the residual vector from the stored-basis expansion.
    let theta = problem.theta_scaled(s).unwrap();
    let op = problem.op.collapse(&theta);
    let u_n_vec = &basis * &sol.c_orth;
    let mut au = vec![0.0; nf];
    problem.apply(&op, u_n_vec.as_slice(), &mut au);
    let b = problem.load_at(&mu).unwrap();
    let r_vec: Vec<f64> = b.iter().zip(&au).map(|(b, a)| b - a).collect();
    let z = gref.solve(&r_vec);
    let res_explicit = z.iter().zip(&r_vec).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();

    println!("res_online   = {res_online:.6e}");
    println!("res_direct   = {res_direct:.6e}");
    println!("res_explicit = {res_explicit:.6e}");

    // Also: compare u_N between the two expansions.
    let mut u_raw = vec![0.0; nf];
    for (c, col) in sol.c_raw.iter().zip(0..n) {
        for i in 0..nf { u_raw[i] += c * snaps[(i, col)]; }
    }
    let du: Vec<f64> = u_raw.iter().zip(u_n_vec.as_slice()).map(|(a, b)| a - b).collect();
    let mut gd = vec![0.0; nf];
    problem.apply(&gref.op, &du, &mut gd);
    println!("|u_raw - u_orth|_G = {:.3e}", du.iter().zip(&gd).map(|(a,b)| a*b).sum::<f64>().max(0.0).sqrt());
}
