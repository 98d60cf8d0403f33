//! Command line driver.
//!
//! Subcommands: `build-eim`, `train`, `eval`, `certify`, `bench`,
//! `validate-oracle`. Every figure-style output is a CSV whose first line
//! records the configuration hash, and fixed seeds reproduce the files
//! byte for byte.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::certify::{
    self, beta_hat_exact, scm_build, stability_lower_bound, EigenOptions, ReferenceMetric,
    ScmStability,
};
use crate::config::{Preset, RunConfig};
use crate::eim::{eim_build, training_grids, EimModel};
use crate::error::{Error, Result};
use crate::fem::{RhsDescription, TruthProblem};
use crate::mesh::{build_cylinder_mesh, build_graded_partition, build_unit_square_triangulation};
use crate::model_io::{self, load_bundle, MeshParams, ModelBundle};
use crate::oracle;
use crate::param::{equispaced, Parameter, Subdomain};
use crate::rbm::{self, error_ensembles, greedy_offline, ReducedModel};

#[derive(Parser)]
#[command(
    name = "fracrb",
    about = "Certified reduced basis solver for the spectral fractional Laplacian",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in preset: `desk` or `paper`.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Individual overrides, repeatable: `--set key=value`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (overrides `out_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parameter sweeps (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the weight-interpolation models and write their decay history.
    BuildEim,
    /// Train reduced models per subdomain and write convergence data.
    Train,
    /// Evaluate a trained model at one parameter.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        nu: Option<f64>,
        /// Basis size to use (default: all).
        #[arg(long)]
        n_basis: Option<usize>,
        /// Write the trace field as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Evaluate certified error bounds over a parameter grid.
    Certify {
        #[arg(long)]
        model: PathBuf,
        /// Number of grid points.
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Also compute the true error per point (truth solves).
        #[arg(long, default_value_t = true)]
        true_error: bool,
    },
    /// Time truth versus online solves and report the crossover.
    Bench,
    /// Convergence of the truth pipeline against the analytic solution.
    ValidateOracle,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run() -> i32 {
    let args: Vec<String> = std::env::args().collect();
    run_with_args(&args)
}

/// Testable entry point.
pub fn run_with_args(args: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are successful exits.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut config = match (&cli.config, &cli.preset) {
        (Some(path), _) => RunConfig::from_file(path)?,
        (None, Some(p)) => RunConfig::preset(Preset::parse(p)?),
        (None, None) => RunConfig::preset(Preset::Desk),
    };
    if let (Some(_), Some(p)) = (&cli.config, &cli.preset) {
        config.set("preset", p)?;
    }
    for item in &cli.overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
        config.set(k.trim(), v.trim())?;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.display().to_string();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    config.validate()?;
    if config.threads > 0 {
        // Ignore failure: the global pool can only be installed once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build_global();
    }
    std::fs::create_dir_all(&config.out_dir)?;

    match cli.command {
        Command::BuildEim => cmd_build_eim(&config),
        Command::Train => cmd_train(&config),
        Command::Eval {
            model,
            s,
            nu,
            n_basis,
            dump,
        } => cmd_eval(&config, &model, s, nu, n_basis, dump.as_deref()),
        Command::Certify {
            model,
            grid,
            true_error,
        } => cmd_certify(&config, &model, grid, true_error),
        Command::Bench => cmd_bench(&config),
        Command::ValidateOracle => cmd_validate_oracle(&config),
    }
}

fn csv_create(config: &RunConfig, name: &str) -> Result<std::fs::File> {
    use std::io::Write;
    let path = Path::new(&config.out_dir).join(name);
    let mut file = std::fs::File::create(&path)?;
    writeln!(file, "# config_hash={:016x}", config.hash())?;
    Ok(file)
}

/// Builds the interpolation model of one subdomain from the configuration.
pub fn build_eim_model(config: &RunConfig, subdomain: Subdomain) -> Result<EimModel> {
    let (y_grid, s_grid) = training_grids(
        subdomain,
        config.m_fe,
        config.eim_refine,
        config.y_plus,
        config.eim_s_points,
    )?;
    eim_build(
        subdomain,
        &y_grid,
        &s_grid,
        config.eim_q_max,
        config.eim_tol,
    )
}

/// Builds the truth problem of one subdomain from the configuration.
pub fn build_problem(config: &RunConfig, subdomain: Subdomain) -> Result<TruthProblem> {
    let eim = Arc::new(build_eim_model(config, subdomain)?);
    build_problem_with_eim(config, subdomain, eim)
}

pub fn build_problem_with_eim(
    config: &RunConfig,
    subdomain: Subdomain,
    eim: Arc<EimModel>,
) -> Result<TruthProblem> {
    let tri = build_unit_square_triangulation(config.n)?;
    let interval = build_graded_partition(config.m_fe, config.gamma(subdomain), config.y_plus)?;
    let mesh = Arc::new(build_cylinder_mesh(tri, interval));
    TruthProblem::new(mesh, eim, config.rhs.clone(), config.solver_options())
}

/// Training set of one subdomain: equispaced in `s`, tensorized with `nu`
/// for the two-parameter problem.
pub fn training_set(config: &RunConfig, subdomain: Subdomain) -> Vec<Parameter> {
    let (lo, hi) = subdomain.s_range();
    match config.rhs {
        RhsDescription::Example2 => {
            let s_grid = equispaced(lo, hi, config.tensor_points);
            let nu_grid = equispaced(0.0, 1.0, config.tensor_points);
            let mut set = Vec::with_capacity(s_grid.len() * nu_grid.len());
            for &s in &s_grid {
                for &nu in &nu_grid {
                    set.push(Parameter::with_nu(s, nu));
                }
            }
            set
        }
        _ => equispaced(lo, hi, config.train_s_points)
            .into_iter()
            .map(Parameter::new)
            .collect(),
    }
}

/// Test set: equispaced with both endpoints dropped. The preset point counts
/// are coprime with the training counts, so the interiors never collide with
/// training points.
pub fn test_set(config: &RunConfig, subdomain: Subdomain) -> Vec<Parameter> {
    let (lo, hi) = subdomain.s_range();
    match config.rhs {
        RhsDescription::Example2 => {
            let s_grid = equispaced(lo, hi, config.test_tensor_points);
            let nu_grid = equispaced(0.0, 1.0, config.test_tensor_points);
            let mut set = Vec::new();
            for &s in &s_grid[1..s_grid.len() - 1] {
                for &nu in &nu_grid[1..nu_grid.len() - 1] {
                    set.push(Parameter::with_nu(s, nu));
                }
            }
            set
        }
        _ => {
            let grid = equispaced(lo, hi, config.test_points);
            grid[1..grid.len() - 1]
                .iter()
                .map(|&s| Parameter::new(s))
                .collect()
        }
    }
}

fn cmd_build_eim(config: &RunConfig) -> Result<()> {
    use std::io::Write;
    let mut csv = csv_create(config, "eim_decay.csv")?;
    writeln!(csv, "subdomain,q,sup_error")?;
    for subdomain in [Subdomain::D1, Subdomain::D2] {
        let start = Instant::now();
        let model = build_eim_model(config, subdomain)?;
        for (q, err) in model.error_history.iter().enumerate() {
            writeln!(csv, "{},{q},{err}", subdomain.name())?;
        }
        let positivity = model.positivity_report()?;
        println!(
            "{}: {} interpolation functions, final sup error {:.3e}, \
             positivity checked at {} orders ({} violations), {:.2}s",
            subdomain.name(),
            model.q(),
            model.error_history.last().unwrap(),
            positivity.checked,
            positivity.violations,
            start.elapsed().as_secs_f64()
        );

        let mut container = model_io::Container::default();
        container.set_meta("format", "fractional-eim-model");
        container.set_meta("subdomain", subdomain.name());
        container.set_meta("config_hash", format!("{:016x}", config.hash()));
        container.push_section("error_history", model.error_history.clone());
        container.push_section("s_snapshots", model.s_snapshots.clone());
        container.push_section("magic_points", model.magic_points.clone());
        let path = Path::new(&config.out_dir).join(format!("eim_{}.frbm", subdomain.name()));
        container.save(&path)?;
    }
    Ok(())
}

/// Trains one subdomain model (with optional stability data) and returns
/// the bundle.
pub fn train_subdomain(config: &RunConfig, subdomain: Subdomain) -> Result<ModelBundle> {
    let problem = build_problem(config, subdomain)?;
    let training = training_set(config, subdomain);
    let opts = config.greedy_options();

    let scm = if config.with_scm && config.with_certification {
        let gref = ReferenceMetric::new(&problem)?;
        Some(scm_build(
            &problem,
            &gref,
            &training,
            config.scm_constraints,
            &EigenOptions::default(),
        )?)
    } else {
        None
    };
    let reduced = match (&scm, opts.mode) {
        (Some(scm), rbm::GreedyMode::ResidualBased) => {
            let stability = ScmStability {
                problem: &problem,
                scm,
            };
            greedy_offline(&problem, &training, &opts, Some(&stability))?
        }
        _ => greedy_offline(&problem, &training, &opts, None)?,
    };
    Ok(ModelBundle {
        mesh: MeshParams {
            n: config.n,
            m_fe: config.m_fe,
            gamma: config.gamma(subdomain),
            y_plus: config.y_plus,
        },
        reduced,
        scm,
    })
}

fn cmd_train(config: &RunConfig) -> Result<()> {
    use std::io::Write;
    let mut csv = csv_create(config, "convergence.csv")?;
    writeln!(
        csv,
        "subdomain,n_basis,median_e,max_e,min_e,median_f,max_f,min_f"
    )?;
    for subdomain in [Subdomain::D1, Subdomain::D2] {
        let start = Instant::now();
        let bundle = train_subdomain(config, subdomain)?;
        let offline = start.elapsed().as_secs_f64();
        // The ensembles need the assembled truth problem again.
        let problem =
            build_problem_with_eim(config, subdomain, bundle.reduced.eim.clone())?;
        let test = test_set(config, subdomain);
        let n_values: Vec<usize> = (1..=bundle.reduced.n_basis()).collect();
        let report = error_ensembles(&problem, &bundle.reduced, &test, &n_values)?;
        for (i, &n) in report.n_values.iter().enumerate() {
            let e = rbm::stats(&report.errors_interpolated[i]);
            let f = rbm::stats(&report.errors_exact[i]);
            writeln!(
                csv,
                "{},{n},{},{},{},{},{},{}",
                subdomain.name(),
                e.median,
                e.max,
                e.min,
                f.median,
                f.max,
                f.min
            )?;
        }
        let path = Path::new(&config.out_dir).join(format!("model_{}.frbm", subdomain.name()));
        model_io::save_bundle(
            &bundle,
            &path,
            &[(
                "config_hash".to_string(),
                format!("{:016x}", config.hash()),
            )],
        )?;
        let last = rbm::stats(&report.errors_interpolated[report.n_values.len() - 1]);
        println!(
            "{}: trained {} basis vectors in {:.1}s, median test error {:.3e}, saved {}",
            subdomain.name(),
            bundle.reduced.n_basis(),
            offline,
            last.median,
            path.display()
        );
    }
    Ok(())
}

fn cmd_eval(
    config: &RunConfig,
    model_path: &Path,
    s: f64,
    nu: Option<f64>,
    n_basis: Option<usize>,
    dump: Option<&Path>,
) -> Result<()> {
    let bundle = load_bundle(model_path)?;
    let mu = match nu {
        Some(nu) => Parameter::with_nu(s, nu),
        None => Parameter::new(s),
    };
    let start = Instant::now();
    let sol = bundle.reduced.online_solve(&mu, n_basis)?;
    let trace = bundle.reduced.online_trace(&sol);
    let online_time = start.elapsed();

    // L2 norm needs the 2D mass matrix of the stored mesh.
    let tri = build_unit_square_triangulation(bundle.mesh.n)?;
    let (_, mass) = crate::fem::p2d::assemble_stiffness_mass(&tri);
    let l2 = mass.quadratic_form(&trace, &trace).max(0.0).sqrt();
    let vmin = trace.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = trace.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("model: {}", model_path.display());
    println!(
        "mu = {mu}, basis size {} of {}",
        sol.n_used,
        bundle.reduced.n_basis()
    );
    println!("online solve: {:.1} us", online_time.as_secs_f64() * 1e6);
    println!("trace: |u|_L2 = {l2:.6e}, range [{vmin:.6e}, {vmax:.6e}]");
    if let Some(scm) = &bundle.scm {
        let problem = build_problem_for_bundle(config, &bundle)?;
        let cert = certify::error_bound(&problem, &bundle.reduced, scm, &mu, &sol)?;
        println!(
            "certificate: |r| = {:.3e}, beta_lb = {:.3e}, Lambda = {:.3e}, Delta = {:.3e}",
            cert.residual_dual_norm, cert.beta_lb, cert.continuity_ub, cert.delta
        );
    }
    if let Some(path) = dump {
        use std::io::Write;
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "# config_hash={:016x}", config.hash())?;
        writeln!(file, "x1,x2,u")?;
        for (v, p) in trace.iter().zip(&tri.vertices) {
            writeln!(file, "{},{},{}", p[0], p[1], v)?;
        }
        println!("trace field written to {}", path.display());
    }
    Ok(())
}

/// Rebuilds the truth problem matching a stored bundle (same mesh, same
/// interpolation model, same right-hand side).
pub fn build_problem_for_bundle(config: &RunConfig, bundle: &ModelBundle) -> Result<TruthProblem> {
    bundle.rebuild_problem(config.solver_options())
}

fn cmd_certify(config: &RunConfig, model_path: &Path, grid: usize, true_error: bool) -> Result<()> {
    use std::io::Write;
    let bundle = load_bundle(model_path)?;
    let scm = bundle
        .scm
        .as_ref()
        .ok_or_else(|| Error::NoCertification("model has no stability data".into()))?;
    let problem = build_problem_for_bundle(config, &bundle)?;
    let subdomain = bundle.reduced.subdomain;
    let (lo, hi) = subdomain.s_range();
    let points = equispaced(lo, hi, grid + 2)[1..=grid].to_vec();

    let mut csv = csv_create(config, &format!("certificates_{}.csv", subdomain.name()))?;
    writeln!(
        csv,
        "s,nu,residual_dual,beta_lb,lambda,delta,true_hs_error,effectivity"
    )?;
    let mut worst_eff = 0.0f64;
    let mut violations = 0usize;
    for &s in &points {
        let mu = match bundle.reduced.rhs {
            RhsDescription::Example2 => Parameter::with_nu(s, 0.5),
            _ => Parameter::new(s),
        };
        let sol = bundle.reduced.online_solve(&mu, None)?;
        let cert = certify::error_bound(&problem, &bundle.reduced, scm, &mu, &sol)?;
        let (true_err, eff) = if true_error {
            let truth = problem.solve_truth(&mu)?;
            let online = bundle.reduced.online_trace(&sol);
            let diff: Vec<f64> = online
                .iter()
                .zip(problem.trace_bottom(&truth))
                .map(|(a, b)| a - b)
                .collect();
            let l2 = problem.l2_norm_omega(&diff);
            let proj = oracle::project_to_modes(&problem.mesh.tri, &diff, l2, config.modes_j);
            let err = oracle::hs_norm(&proj.field, mu.s);
            if cert.delta < err {
                violations += 1;
            }
            let eff = if err > 0.0 { cert.delta / err } else { f64::NAN };
            worst_eff = worst_eff.max(eff);
            (err.to_string(), eff.to_string())
        } else {
            (String::new(), String::new())
        };
        writeln!(
            csv,
            "{s},{},{},{},{},{},{true_err},{eff}",
            mu.nu.map(|v| v.to_string()).unwrap_or_default(),
            cert.residual_dual_norm,
            cert.beta_lb,
            cert.continuity_ub,
            cert.delta
        )?;
    }
    println!(
        "{}: {} certificates, {} violations, worst effectivity {:.3e}",
        subdomain.name(),
        points.len(),
        violations,
        worst_eff
    );
    if violations > 0 {
        return Err(Error::GreedyDegenerate(format!(
            "{violations} certificate(s) fell below the true error"
        )));
    }
    Ok(())
}

fn median_time<F: FnMut()>(repeats: usize, mut f: F) -> f64 {
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        f();
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times[times.len() / 2]
}

fn cmd_bench(config: &RunConfig) -> Result<()> {
    use std::io::Write;
    let mut csv = csv_create(config, "bench.csv")?;
    writeln!(
        csv,
        "subdomain,n,m_fe,free_dofs,offline_s,truth_solve_s,online_solve_s,marginal_speedup,crossover_queries"
    )?;
    let mut cumulative = csv_create(config, "bench_cumulative.csv")?;
    writeln!(
        cumulative,
        "subdomain,free_dofs,queries,truth_cumulative_s,rbm_cumulative_s"
    )?;

    for subdomain in [Subdomain::D1, Subdomain::D2] {
        for scale in [1usize, 2] {
            let mut scaled = config.clone();
            scaled.n = config.n * scale;
            scaled.m_fe = config.m_fe * scale;
            // Certification data is not needed for timing.
            scaled.with_scm = false;
            scaled.with_certification = false;

            let probe_mu = Parameter::new(match subdomain {
                Subdomain::D1 => 0.37,
                Subdomain::D2 => 0.71,
            });
            let start = Instant::now();
            let bundle = train_subdomain(&scaled, subdomain)?;
            let offline = start.elapsed().as_secs_f64();
            let problem = build_problem_with_eim(&scaled, subdomain, bundle.reduced.eim.clone())?;

            let truth_time = median_time(3, || {
                let _ = problem.solve_truth(&probe_mu).unwrap();
            });
            let online_reps = 200;
            let start = Instant::now();
            for _ in 0..online_reps {
                let sol = bundle.reduced.online_solve(&probe_mu, None).unwrap();
                std::hint::black_box(bundle.reduced.online_trace(&sol));
            }
            let online_time = start.elapsed().as_secs_f64() / online_reps as f64;
            let speedup = truth_time / online_time;
            let crossover = (offline / (truth_time - online_time).max(1e-12)).ceil() as u64;
            writeln!(
                csv,
                "{},{},{},{},{offline},{truth_time},{online_time},{speedup},{crossover}",
                subdomain.name(),
                scaled.n,
                scaled.m_fe,
                problem.n_free()
            )?;
            println!(
                "{} n={} ({} dofs): truth {:.3}s, online {:.1}us, speedup {:.0}x, crossover at {} queries",
                subdomain.name(),
                scaled.n,
                problem.n_free(),
                truth_time,
                online_time * 1e6,
                speedup,
                crossover
            );
            let mut queries = 1u64;
            while queries <= 1024 {
                writeln!(
                    cumulative,
                    "{},{},{queries},{},{}",
                    subdomain.name(),
                    problem.n_free(),
                    truth_time * queries as f64,
                    offline + online_time * queries as f64
                )?;
                queries *= 2;
            }
        }
    }
    Ok(())
}

fn cmd_validate_oracle(config: &RunConfig) -> Result<()> {
    use std::io::Write;
    let mut csv = csv_create(config, "oracle_convergence.csv")?;
    writeln!(csv, "s,n,m_fe,free_dofs,rel_l2_error,ratio_vs_previous")?;
    println!("{:>6} {:>6} {:>6} {:>10} {:>14} {:>8}", "s", "n", "M", "dofs", "rel_l2", "ratio");
    for &s in &[0.2, 0.5, 0.8] {
        let mut previous: Option<f64> = None;
        for scale in [1usize, 2] {
            let mut scaled = config.clone();
            scaled.n = config.n * scale;
            scaled.m_fe = config.m_fe * scale;
            scaled.rhs = RhsDescription::Example1;
            let error = oracle_trace_error(&scaled, s)?;
            let ratio = previous.map(|p| p / error);
            writeln!(
                csv,
                "{s},{},{},{},{error},{}",
                scaled.n,
                scaled.m_fe,
                (scaled.n - 1) * (scaled.n - 1) * scaled.m_fe,
                ratio.map(|r| r.to_string()).unwrap_or_default()
            )?;
            println!(
                "{:>6} {:>6} {:>6} {:>10} {:>14.6e} {:>8}",
                s,
                scaled.n,
                scaled.m_fe,
                (scaled.n - 1) * (scaled.n - 1) * scaled.m_fe,
                error,
                ratio.map(|r| format!("{r:.2}")).unwrap_or_default()
            );
            previous = Some(error);
        }
    }
    Ok(())
}

/// Relative L2 trace error of the truth pipeline against the analytic
/// solution for the eigenfunction right-hand side.
pub fn oracle_trace_error(config: &RunConfig, s: f64) -> Result<f64> {
    let subdomain = Parameter::new(s).subdomain();
    let problem = build_problem(config, subdomain)?;
    let mu = Parameter::new(s);
    let sol = problem.solve_truth(&mu)?;
    let trace = problem.trace_bottom(&sol);
    // Analytic: the right-hand side is an eigenfunction, so the solution is
    // the same function scaled by lambda^{-s}.
    let scale = (8.0 * std::f64::consts::PI * std::f64::consts::PI).powf(-s);
    let exact: Vec<f64> = problem
        .mesh
        .tri
        .vertices
        .iter()
        .map(|p| {
            scale
                * (2.0 * std::f64::consts::PI * p[0]).sin()
                * (2.0 * std::f64::consts::PI * p[1]).sin()
        })
        .collect();
    let diff: Vec<f64> = trace.iter().zip(&exact).map(|(a, b)| a - b).collect();
    Ok(problem.l2_norm_omega(&diff) / problem.l2_norm_omega(&exact))
}

/// Convenience wrapper used by the acceptance suite: per-subdomain stability
/// lower bound at `s` for a trained bundle.
pub fn bundle_stability_lower_bound(
    config: &RunConfig,
    bundle: &ModelBundle,
    s: f64,
) -> Result<f64> {
    let scm = bundle
        .scm
        .as_ref()
        .ok_or_else(|| Error::NoCertification("model has no stability data".into()))?;
    let problem = build_problem_for_bundle(config, bundle)?;
    stability_lower_bound(&problem, scm, s)
}

/// Exact stability constant at `s` for a trained bundle (eigensolver).
pub fn bundle_beta_hat(config: &RunConfig, bundle: &ModelBundle, s: f64) -> Result<f64> {
    let problem = build_problem_for_bundle(config, bundle)?;
    let gref = ReferenceMetric::new(&problem)?;
    Ok(beta_hat_exact(
        &problem,
        &gref,
        &Parameter::new(s),
        &EigenOptions::default(),
    )?
    .beta_hat)
}

/// Used by tests: the trained model reproduced from disk must match the
/// in-memory model online, bit for bit.
pub fn online_outputs(model: &ReducedModel, mus: &[Parameter]) -> Result<Vec<Vec<f64>>> {
    mus.iter()
        .map(|mu| {
            let sol = model.online_solve(mu, None)?;
            Ok(model.online_trace(&sol))
        })
        .collect()
}
