// scratch probe: decompose the certificate chain at one point
use fracrb::certify::{self, beta_hat_exact, EigenOptions, ReferenceMetric};
use fracrb::cli::{build_problem_with_eim, train_subdomain};
use fracrb::config::{Preset, RunConfig};
use fracrb::oracle;
use fracrb::param::{Parameter, Subdomain};

fn main() {
    let config = RunConfig::preset(Preset::Desk);
    let subdomain = Subdomain::D1;
    let bundle = train_subdomain(&config, subdomain).unwrap();
    let problem = build_problem_with_eim(&config, subdomain, bundle.reduced.eim.clone()).unwrap();
    let model = &bundle.reduced;
    let gref = ReferenceMetric::new(&problem).unwrap();
    let s = 0.03 + (0.5 - 0.03) * 63.0 / 65.0; // the violating grid point
    let mu = Parameter::new(s);
    let sol = model.online_solve(&mu, None).unwrap();
    let res_online = model.residual_dual_norm(&mu, &sol).unwrap();
    let res_direct = certify::direct_residual_dual_norm(&problem, &gref, model, &mu, &sol).unwrap();
    println!("s = {s}");
    println!("res online = {res_online:.6e}, direct = {res_direct:.6e}");

    // Full-space error vector e = u_truth - u_N.
    let truth = problem.solve_truth(&mu).unwrap();
    let mut u_n = vec![0.0; problem.n_free()];
    for (c, snap_mu) in sol.c_raw.iter().zip(&model.mu_snapshots) {
        let t = problem.solve_truth(snap_mu).unwrap();
        for (o, &v) in u_n.iter_mut().zip(&t.coeffs) { *o += c * v; }
    }
    let e: Vec<f64> = truth.coeffs.iter().zip(&u_n).map(|(a, b)| a - b).collect();
    let e_g = gref.norm(&problem, &e);
    let bh = beta_hat_exact(&problem, &gref, &mu, &EigenOptions::default()).unwrap();
    println!("|e|_G = {e_g:.6e}; res/beta_hat = {:.6e}", res_direct / bh.beta_hat);
    let theta = problem.theta_scaled(s).unwrap();
    let op = problem.op.collapse(&theta);
    let a_e = problem.energy_product(&op, &e, &e);
    println!("e^T A e = {:.6e}, sqrt = {:.6e}", a_e, a_e.max(0.0).sqrt());
    let xh = problem.xh_norm(&e, s).unwrap();
    let ds = fracrb::param::ds_coefficient(s);
    println!("exact-weight energy d_s^-1 |e|_X^2 = {:.6e}", xh * xh / ds);
    let trace = problem.mesh.bottom_trace(&e);
    let l2 = problem.l2_norm_omega(&trace);
    for j in [20usize, 40, 60] {
        let proj = oracle::project_to_modes(&problem.mesh.tri, &trace, l2, j);
        println!("J = {j}: hs_norm(tr e) = {:.6e} (defect {:.2e})", oracle::hs_norm(&proj.field, s), proj.parseval_defect);
    }
    println!("l2(tr e) = {l2:.6e}");
}
