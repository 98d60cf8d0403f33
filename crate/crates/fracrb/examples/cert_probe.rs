// scratch probe: per-point certificate vs oracle error at desk scale
use fracrb::certify::{error_bound, beta_hat_exact, EigenOptions, ReferenceMetric};
use fracrb::cli::{build_problem_with_eim, train_subdomain};
use fracrb::config::{Preset, RunConfig};
use fracrb::oracle;
use fracrb::param::{equispaced, Parameter, Subdomain};
use rayon::prelude::*;

fn main() {
    let config = RunConfig::preset(Preset::Desk);
    for subdomain in [Subdomain::D1, Subdomain::D2] {
        let bundle = train_subdomain(&config, subdomain).unwrap();
        let problem = build_problem_with_eim(&config, subdomain, bundle.reduced.eim.clone()).unwrap();
        let model = &bundle.reduced;
        let scm = bundle.scm.as_ref().unwrap();
        let (lo, hi) = subdomain.s_range();
        let grid = equispaced(lo, hi, 66)[1..=64].to_vec();
        let gref = ReferenceMetric::new(&problem).unwrap();
        let rows: Vec<(f64, f64, f64, f64, f64)> = grid.par_iter().map(|&s| {
            let mu = Parameter::new(s);
            let sol = model.online_solve(&mu, None).unwrap();
            let cert = error_bound(&problem, model, scm, &mu, &sol).unwrap();
            let truth = problem.solve_truth(&mu).unwrap();
            let online = model.online_trace(&sol);
            let diff: Vec<f64> = online.iter().zip(problem.trace_bottom(&truth)).map(|(a, b)| a - b).collect();
            let l2 = problem.l2_norm_omega(&diff);
            let proj = oracle::project_to_modes(&problem.mesh.tri, &diff, l2, config.modes_j);
            let true_err = oracle::hs_norm(&proj.field, s);
            let bh = beta_hat_exact(&problem, &gref, &mu, &EigenOptions::default()).unwrap().beta_hat;
            (s, cert.delta, true_err, cert.beta_lb, bh)
        }).collect();
        for (s, delta, err, blb, bh) in rows {
            let flag = if delta < err { " VIOLATION" } else { "" };
            let beta_flag = if blb > bh * (1.0 + 1e-6) { " BETA-VIOLATION" } else { "" };
            if !flag.is_empty() || !beta_flag.is_empty() || s < lo + 0.02 {
                println!("{subdomain} s={s:.5} delta={delta:.4e} err={err:.4e} eff={:.2e} beta_lb={blb:.3e} beta_hat={bh:.3e}{flag}{beta_flag}", delta/err);
            }
        }
        println!("{subdomain} done");
    }
}
