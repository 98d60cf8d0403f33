//! Reduced basis training and online evaluation.
//!
//! Offline, parameter snapshots are selected greedily over a finite training
//! set, the truth is solved at each, and the affine operator and loads are
//! projected onto the growing (orthonormalized) snapshot basis. Online, a
//! dense `N x N` Galerkin system is assembled from the projected terms and
//! solved; nothing of the cylinder's size is touched, so the per-query cost
//! is independent of the truth dimension.
//!
//! The certification data prepared here is the Riesz machinery of the
//! residual: representers of every load component and of every operator term
//! applied to a basis vector, with respect to the reference inner product.
//! The representers are orthonormalized offline and only the triangular
//! factor is kept, so the online residual dual norm is a plain Euclidean norm
//! of a small vector (linear, not quadratic, in the stored data; this avoids
//! the catastrophic cancellation of the textbook Gram expansion near
//! snapshots).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::eim::EimModel;
use crate::error::{Error, Result};
use crate::fem::tensor::TensorSolver;
use crate::fem::{CylinderOperator, RhsDescription, TruthProblem};
use crate::param::{ds_coefficient, Parameter, Subdomain};

/// Trained reduced model for one subdomain.
pub struct ReducedModel {
    pub subdomain: Subdomain,
    pub rhs: RhsDescription,
    pub eim: Arc<EimModel>,
    pub mu_snapshots: Vec<Parameter>,
    /// Projected operator terms in the orthonormal basis, `Q` matrices `N x N`.
    pub reduced_ops: Vec<DMatrix<f64>>,
    /// Projected load components, length `N` each.
    pub reduced_loads: Vec<DVector<f64>>,
    /// Bottom traces of the raw snapshots (full 2D nodal fields).
    pub trace_snapshots: Vec<Vec<f64>>,
    /// Upper-triangular change of basis: raw snapshot `n` equals
    /// `sum_k basis_r[(k, n)] xi_k`.
    pub basis_r: DMatrix<f64>,
    /// Greedy objective value at each accepted extension.
    pub greedy_objectives: Vec<f64>,
    pub cert: Option<CertificationBlock>,
}

/// Offline residual data: the triangular factor of the orthonormalized Riesz
/// representer family. Column order: load components first, then for each
/// snapshot `n` the `Q` operator terms applied to basis vector `n`.
#[derive(Clone, Debug)]
pub struct CertificationBlock {
    pub n_loads: usize,
    pub n_terms: usize,
    pub riesz_r: DMatrix<f64>,
}

impl ReducedModel {
    pub fn n_basis(&self) -> usize {
        self.mu_snapshots.len()
    }

    /// Per-term coefficients of the reduced operator at `mu`.
    pub fn theta_scaled(&self, s: f64) -> Result<Vec<f64>> {
        let theta = self.eim.eval_theta(s)?;
        let ds = ds_coefficient(s);
        Ok(theta.into_iter().map(|t| t / ds).collect())
    }

    /// Assembles and solves the reduced Galerkin system with the leading
    /// `n_used` basis vectors (`None` = all).
    pub fn online_solve(&self, mu: &Parameter, n_used: Option<usize>) -> Result<OnlineSolution> {
        let n = n_used.unwrap_or(self.n_basis());
        if n == 0 || n > self.n_basis() {
            return Err(Error::InvalidInput(format!(
                "online solve with {n} basis vectors, trained {}",
                self.n_basis()
            )));
        }
        let theta = self.theta_scaled(mu.s)?;
        let rho = self.rhs.coefficients(mu)?;
        let mut a = DMatrix::zeros(n, n);
        for (t, op) in theta.iter().zip(&self.reduced_ops) {
            if *t != 0.0 {
                a += op.view((0, 0), (n, n)) * *t;
            }
        }
        let mut b = DVector::zeros(n);
        for (r, load) in rho.iter().zip(&self.reduced_loads) {
            b += load.rows(0, n) * *r;
        }
        // The reference-orthonormal basis can leave the reduced system badly
        // conditioned at extreme orders. Equilibrate, factor, and polish with
        // one compensated-residual refinement step; reproduction of the
        // snapshots then holds far below the conditioning limit.
        let scale: Vec<f64> = (0..n)
            .map(|i| {
                let d = a[(i, i)];
                if d > 0.0 {
                    1.0 / d.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let mut a_eq = a.clone();
        for i in 0..n {
            for j in 0..n {
                a_eq[(i, j)] *= scale[i] * scale[j];
            }
        }
        let b_eq = DVector::from_iterator(n, b.iter().zip(&scale).map(|(v, s)| v * s));
        let Some(chol) = nalgebra::Cholesky::new(a_eq) else {
            let min_eig = nalgebra::SymmetricEigen::new(a)
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            return Err(Error::ReducedIndefinite {
                min_eigenvalue: min_eig,
            });
        };
        let mut c_eq = chol.solve(&b_eq);
        for _refine in 0..2 {
            let r = compensated_residual(&a, &b, &scale, &c_eq);
            let correction = chol.solve(&r);
            c_eq += correction;
        }
        let c_orth = DVector::from_iterator(n, c_eq.iter().zip(&scale).map(|(v, s)| v * s));
        // Convert to Lagrange (raw snapshot) coefficients.
        let r = self.basis_r.view((0, 0), (n, n));
        let mut c_raw = c_orth.clone();
        for i in (0..n).rev() {
            let mut acc = c_raw[i];
            for j in i + 1..n {
                acc -= r[(i, j)] * c_raw[j];
            }
            c_raw[i] = acc / r[(i, i)];
        }
        Ok(OnlineSolution {
            mu: *mu,
            n_used: n,
            c_orth,
            c_raw,
        })
    }

    /// Trace field of an online solution: a combination of the stored
    /// snapshot traces, never touching cylinder-sized data.
    pub fn online_trace(&self, sol: &OnlineSolution) -> Vec<f64> {
        let len = self.trace_snapshots[0].len();
        let mut out = vec![0.0; len];
        for (c, trace) in sol.c_raw.iter().zip(&self.trace_snapshots) {
            if *c != 0.0 {
                for (o, &t) in out.iter_mut().zip(trace) {
                    *o += c * t;
                }
            }
        }
        out
    }

    /// Euclidean weight vector of the residual functional in the Riesz
    /// basis ordering (loads positive, operator terms negative).
    fn residual_weights(&self, mu: &Parameter, sol: &OnlineSolution) -> Result<Vec<f64>> {
        let cert = self
            .cert
            .as_ref()
            .ok_or_else(|| Error::NoCertification("model trained without residual data".into()))?;
        let theta = self.theta_scaled(mu.s)?;
        let rho = self.rhs.coefficients(mu)?;
        let mut w = Vec::with_capacity(cert.n_loads + sol.n_used * cert.n_terms);
        w.extend_from_slice(&rho);
        for n in 0..sol.n_used {
            for t in &theta {
                w.push(-t * sol.c_orth[n]);
            }
        }
        Ok(w)
    }

    /// Dual norm of the residual with respect to the reference inner
    /// product, evaluated online from the stored triangular factor.
    pub fn residual_dual_norm(&self, mu: &Parameter, sol: &OnlineSolution) -> Result<f64> {
        let cert = self.cert.as_ref().unwrap();
        let w = self.residual_weights(mu, sol)?;
        Ok(triangular_image_norm(&cert.riesz_r, &w))
    }

    /// Dual norm of the bare load functional (the `N = 0` residual).
    pub fn load_dual_norm(&self, mu: &Parameter) -> Result<f64> {
        let cert = self
            .cert
            .as_ref()
            .ok_or_else(|| Error::NoCertification("model trained without residual data".into()))?;
        let rho = self.rhs.coefficients(mu)?;
        Ok(triangular_image_norm(&cert.riesz_r, &rho))
    }
}

/// Residual `scale . (b - A (scale . c_eq))` of the equilibrated reduced
/// system, accumulated with compensated (error-free transformed) products so
/// refinement is not limited by the conditioning.
fn compensated_residual(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    scale: &[f64],
    c_eq: &DVector<f64>,
) -> DVector<f64> {
    let n = b.len();
    let c: Vec<f64> = (0..n).map(|j| scale[j] * c_eq[j]).collect();
    DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let mut sum = b[i];
            let mut comp = 0.0;
            for (j, &cj) in c.iter().enumerate() {
                let m = -a[(i, j)];
                let p = m * cj;
                let err = m.mul_add(cj, -p);
                let t = sum + p;
                if sum.abs() >= p.abs() {
                    comp += (sum - t) + p;
                } else {
                    comp += (p - t) + sum;
                }
                sum = t;
                comp += err;
            }
            (sum + comp) * scale[i]
        }),
    )
}

/// `|| R[..m, ..m] w ||_2` for the leading block matching the weight length.
fn triangular_image_norm(r: &DMatrix<f64>, w: &[f64]) -> f64 {
    let m = w.len();
    debug_assert!(m <= r.ncols());
    let mut acc = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for j in i..m {
            row += r[(i, j)] * w[j];
        }
        acc += row * row;
    }
    acc.sqrt()
}

pub struct OnlineSolution {
    pub mu: Parameter,
    pub n_used: usize,
    pub c_orth: DVector<f64>,
    pub c_raw: DVector<f64>,
}

/// Snapshot-selection objective of the greedy loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreedyMode {
    /// `l1` norm of the Lagrange coefficients; no error estimator needed.
    ResidualFree,
    /// Certified error bound (requires a stability model).
    ResidualBased,
}

#[derive(Clone, Copy, Debug)]
pub enum FirstSnapshot {
    /// Training point nearest the subdomain midpoint (deterministic default).
    Midpoint,
    /// Uniformly random training point from a seeded generator.
    SeededRandom(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct GreedyOptions {
    pub n_max: usize,
    /// Residual-free mode: stop when the largest relative L2 change of the
    /// online trace between consecutive iterations falls below this.
    /// Residual-based mode: stop when the largest bound falls below this.
    pub tol: f64,
    pub mode: GreedyMode,
    pub first: FirstSnapshot,
    pub with_certification: bool,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions {
            n_max: 15,
            tol: 0.0,
            mode: GreedyMode::ResidualFree,
            first: FirstSnapshot::Midpoint,
            with_certification: true,
        }
    }
}

/// Stability data consumed by the residual-based objective: a callable lower
/// bound of the inf-sup constant and an upper bound of the continuity
/// constant, both with respect to the reference inner product.
pub trait StabilityBounds: Sync {
    fn beta_lower(&self, model: &ReducedModel, mu: &Parameter) -> Result<f64>;
    fn continuity_upper(&self, model: &ReducedModel, mu: &Parameter) -> Result<f64>;
}

/// Greedy offline training over the finite set `training`.
pub fn greedy_offline(
    problem: &TruthProblem,
    training: &[Parameter],
    opts: &GreedyOptions,
    stability: Option<&dyn StabilityBounds>,
) -> Result<ReducedModel> {
    if training.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if opts.mode == GreedyMode::ResidualBased && (stability.is_none() || !opts.with_certification)
    {
        return Err(Error::NoCertification(
            "residual-based greedy needs certification data and stability bounds".into(),
        ));
    }
    let gref_op = problem.reference_operator()?;
    let gref = TensorSolver::new(&problem.sx, &problem.mx, &gref_op.my, &gref_op.sy)?;

    let mut builder = Builder::new(problem, &gref_op, &gref, opts.with_certification)?;

    let first_idx = match opts.first {
        FirstSnapshot::Midpoint => {
            let target_s = problem.eim.subdomain.midpoint();
            let target_nu = 0.5;
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (i, mu) in training.iter().enumerate() {
                let dn = mu.nu.map_or(0.0, |nu| (nu - target_nu).abs());
                let d = (mu.s - target_s).abs() + dn;
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            best
        }
        FirstSnapshot::SeededRandom(seed) => {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            rng.random_range(0..training.len())
        }
    };

    let mut selected = vec![false; training.len()];
    selected[first_idx] = true;
    let mut next = training[first_idx];
    let mut prev_raw: Option<Vec<Option<DVector<f64>>>> = None;

    loop {
        let extended = builder.add_snapshot(&next)?;
        if !extended {
            log::warn!("snapshot at {next} linearly dependent, skipped");
        }
        if builder.n() >= opts.n_max || selected.iter().all(|&s| s) {
            break;
        }
        if !extended && builder.n() == 0 {
            return Err(Error::GreedyDegenerate(
                "first snapshot is numerically zero".into(),
            ));
        }

        let model = builder.current_model();
        let best = match opts.mode {
            GreedyMode::ResidualFree => {
                // Lagrange solves over the whole training set: the maximal
                // l1 coefficient norm drives selection, and the sweep doubles
                // as the change tracker for the stopping rule.
                let solves: Vec<Option<OnlineSolution>> = training
                    .par_iter()
                    .map(|mu| model.online_solve(mu, None).ok())
                    .collect();
                let (best, objective) = argmax(
                    solves.iter().enumerate().map(|(i, sol)| match sol {
                        Some(s) if !selected[i] => s.c_raw.lp_norm(1),
                        _ => f64::NEG_INFINITY,
                    }),
                );
                builder.greedy_objectives.push(objective);

                if opts.tol > 0.0 {
                    let raws: Vec<Option<DVector<f64>>> = solves
                        .iter()
                        .map(|s| s.as_ref().map(|s| s.c_raw.clone()))
                        .collect();
                    if let Some(prev) = &prev_raw {
                        let change = max_trace_change(problem, &model, prev, &raws);
                        if change < opts.tol {
                            break;
                        }
                    }
                    prev_raw = Some(raws);
                }
                best
            }
            GreedyMode::ResidualBased => {
                let bounds = stability.unwrap();
                let deltas: Vec<f64> = training
                    .par_iter()
                    .map(|mu| {
                        let sol = model.online_solve(mu, None)?;
                        let res = model.residual_dual_norm(mu, &sol)?;
                        let beta = bounds.beta_lower(&model, mu)?;
                        let lambda = bounds.continuity_upper(&model, mu)?;
                        if beta <= 0.0 {
                            return Err(Error::NonPositiveStabilityBound {
                                s: mu.s,
                                beta_lb: beta,
                            });
                        }
                        Ok(lambda.sqrt() * res / beta)
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let (best, objective) = argmax(
                    deltas
                        .iter()
                        .enumerate()
                        .map(|(i, &d)| if selected[i] { f64::NEG_INFINITY } else { d }),
                );
                builder.greedy_objectives.push(objective);
                if objective < opts.tol {
                    break;
                }
                best
            }
        };
        selected[best] = true;
        next = training[best];
    }
    if builder.n() == 0 {
        return Err(Error::GreedyDegenerate("no snapshots accepted".into()));
    }
    Ok(builder.into_model())
}

fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    (best, best_v)
}

/// Largest relative L2 change of the online trace between two sweeps.
fn max_trace_change(
    problem: &TruthProblem,
    model: &ReducedModel,
    prev: &[Option<DVector<f64>>],
    curr: &[Option<DVector<f64>>],
) -> f64 {
    prev.par_iter()
        .zip(curr.par_iter())
        .map(|(p, c)| {
            let (Some(p), Some(c)) = (p, c) else {
                return f64::INFINITY;
            };
            let len = model.trace_snapshots[0].len();
            let mut diff = vec![0.0; len];
            let mut now = vec![0.0; len];
            for (n, trace) in model.trace_snapshots.iter().enumerate() {
                let cn = c.get(n).copied().unwrap_or(0.0);
                let pn = p.get(n).copied().unwrap_or(0.0);
                for i in 0..len {
                    diff[i] += (cn - pn) * trace[i];
                    now[i] += cn * trace[i];
                }
            }
            let d = problem.l2_norm_omega(&diff);
            let n = problem.l2_norm_omega(&now);
            if n == 0.0 {
                0.0
            } else {
                d / n
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// Incremental model builder: orthonormal basis, projections, Riesz factor.
struct Builder<'a> {
    problem: &'a TruthProblem,
    gref_op: &'a CylinderOperator,
    gref: &'a TensorSolver,
    with_cert: bool,
    basis: Vec<Vec<f64>>,
    g_basis: Vec<Vec<f64>>,
    basis_r: Vec<Vec<f64>>,
    mu_snapshots: Vec<Parameter>,
    trace_snapshots: Vec<Vec<f64>>,
    reduced_ops: Vec<DMatrix<f64>>,
    reduced_loads: Vec<Vec<f64>>,
    riesz: Vec<Vec<f64>>,
    g_riesz: Vec<Vec<f64>>,
    riesz_r: Vec<Vec<f64>>,
    greedy_objectives: Vec<f64>,
}

impl<'a> Builder<'a> {
    fn new(
        problem: &'a TruthProblem,
        gref_op: &'a CylinderOperator,
        gref: &'a TensorSolver,
        with_cert: bool,
    ) -> Result<Self> {
        let q = problem.op.n_terms();
        let mut builder = Builder {
            problem,
            gref_op,
            gref,
            with_cert,
            basis: Vec::new(),
            g_basis: Vec::new(),
            basis_r: Vec::new(),
            mu_snapshots: Vec::new(),
            trace_snapshots: Vec::new(),
            reduced_ops: vec![DMatrix::zeros(0, 0); q],
            reduced_loads: vec![Vec::new(); problem.loads.len()],
            riesz: Vec::new(),
            g_riesz: Vec::new(),
            riesz_r: Vec::new(),
            greedy_objectives: Vec::new(),
        };
        if with_cert {
            for p in 0..problem.loads.len() {
                let b = problem.loads[p].free_vector.clone();
                builder.extend_riesz(&b);
            }
        }
        Ok(builder)
    }

    fn n(&self) -> usize {
        self.basis.len()
    }

    /// Solves the truth at `mu` and extends the model. Returns `false` when
    /// the snapshot is linearly dependent on the current basis.
    fn add_snapshot(&mut self, mu: &Parameter) -> Result<bool> {
        let sol = self.problem.solve_truth(mu)?;
        let u = sol.coeffs;
        let dofs = u.len();

        // Gram-Schmidt in the reference inner product, with one
        // reorthogonalization pass.
        let mut v = u.clone();
        let mut col = vec![0.0; self.n() + 1];
        for _pass in 0..2 {
            for (k, g) in self.g_basis.iter().enumerate() {
                let r: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
                col[k] += r;
                for (vi, xi) in v.iter_mut().zip(&self.basis[k]) {
                    *vi -= r * xi;
                }
            }
        }
        let mut gv = vec![0.0; dofs];
        self.problem.apply(self.gref_op, &v, &mut gv);
        let norm_v = v
            .iter()
            .zip(&gv)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
            .sqrt();
        let mut gu = vec![0.0; dofs];
        self.problem.apply(self.gref_op, &u, &mut gu);
        let norm_u = u
            .iter()
            .zip(&gu)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
            .sqrt();
        if norm_v <= 1e-12 * norm_u || norm_v == 0.0 {
            return Ok(false);
        }
        col[self.n()] = norm_v;
        let xi: Vec<f64> = v.iter().map(|&t| t / norm_v).collect();
        let g_xi: Vec<f64> = gv.iter().map(|&t| t / norm_v).collect();

        self.mu_snapshots.push(*mu);
        self.trace_snapshots.push(self.problem.mesh.bottom_trace(&u));
        self.basis_r.push(col);

        // Project operator terms and loads onto the new basis vector.
        let n_new = self.n() + 1;
        let mut term_images = Vec::with_capacity(self.reduced_ops.len());
        for q in 0..self.reduced_ops.len() {
            let mut w = vec![0.0; dofs];
            self.problem.apply_component(q, &xi, &mut w);
            term_images.push(w);
        }
        for (op, w) in self.reduced_ops.iter_mut().zip(&term_images) {
            let mut grown = DMatrix::zeros(n_new, n_new);
            grown.view_mut((0, 0), (n_new - 1, n_new - 1)).copy_from(op);
            for (k, basis_k) in self.basis.iter().enumerate() {
                let a: f64 = basis_k.iter().zip(w).map(|(a, b)| a * b).sum();
                grown[(k, n_new - 1)] = a;
                grown[(n_new - 1, k)] = a;
            }
            grown[(n_new - 1, n_new - 1)] = xi.iter().zip(w).map(|(a, b)| a * b).sum();
            *op = grown;
        }
        for (p, load) in self.reduced_loads.iter_mut().enumerate() {
            let f = &self.problem.loads[p].free_vector;
            load.push(f.iter().zip(&xi).map(|(a, b)| a * b).sum());
        }

        self.basis.push(xi);
        self.g_basis.push(g_xi);
        if self.with_cert {
            for w in &term_images {
                self.extend_riesz(w);
            }
        }
        Ok(true)
    }

    /// Orthonormalizes the Riesz representer of `rhs` against the current
    /// family and appends the triangular column.
    fn extend_riesz(&mut self, rhs: &[f64]) {
        let z = self.gref.solve(rhs);
        let mut v = z.clone();
        let m = self.riesz.len();
        let mut col = vec![0.0; m + 1];
        for _pass in 0..2 {
            for (k, g) in self.g_riesz.iter().enumerate() {
                let r: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
                col[k] += r;
                for (vi, qi) in v.iter_mut().zip(&self.riesz[k]) {
                    *vi -= r * qi;
                }
            }
        }
        let mut gv = vec![0.0; v.len()];
        self.problem.apply(self.gref_op, &v, &mut gv);
        let norm_sq: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
        let norm = norm_sq.max(0.0).sqrt();
        // Near-dependent representers leave only rounding-level remainders;
        // keeping them (rather than truncating) preserves the dual norm down
        // to machine precision, which matters for residuals near snapshots.
        if norm == 0.0 {
            col[m] = 0.0;
            self.riesz.push(vec![0.0; v.len()]);
            self.g_riesz.push(vec![0.0; v.len()]);
        } else {
            col[m] = norm;
            self.riesz.push(v.iter().map(|&t| t / norm).collect());
            self.g_riesz.push(gv.iter().map(|&t| t / norm).collect());
        }
        // Factorization self-check: |z|_G^2 must match the column norm.
        let z_sq: f64 = z.iter().zip(rhs).map(|(a, b)| a * b).sum();
        let col_sq: f64 = col.iter().map(|c| c * c).sum();
        let defect = (z_sq.max(0.0).sqrt() - col_sq.sqrt()).abs();
        if defect > 1e-10 * z_sq.max(0.0).sqrt().max(1e-300) {
            log::warn!(
                "riesz column {m}: norm defect {defect:.3e} (|z| = {:.6e}, |col| = {:.6e})",
                z_sq.max(0.0).sqrt(),
                col_sq.sqrt()
            );
        }
        self.riesz_r.push(col);
    }

    fn assemble_r(cols: &[Vec<f64>]) -> DMatrix<f64> {
        let n = cols.len();
        let mut r = DMatrix::zeros(n, n);
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                r[(i, j)] = v;
            }
        }
        r
    }

    fn current_model(&self) -> ReducedModel {
        ReducedModel {
            subdomain: self.problem.eim.subdomain,
            rhs: self.problem.rhs.clone(),
            eim: self.problem.eim.clone(),
            mu_snapshots: self.mu_snapshots.clone(),
            reduced_ops: self.reduced_ops.clone(),
            reduced_loads: self
                .reduced_loads
                .iter()
                .map(|v| DVector::from_column_slice(v))
                .collect(),
            trace_snapshots: self.trace_snapshots.clone(),
            basis_r: Self::assemble_r(&self.basis_r),
            greedy_objectives: self.greedy_objectives.clone(),
            cert: self.with_cert.then(|| CertificationBlock {
                n_loads: self.problem.loads.len(),
                n_terms: self.problem.op.n_terms(),
                riesz_r: Self::assemble_r(&self.riesz_r),
            }),
        }
    }

    fn into_model(self) -> ReducedModel {
        self.current_model()
    }
}

/// Per-test-point error data of the trained surrogate against both truth
/// discretizations, for a list of basis sizes.
pub struct EnsembleReport {
    pub n_values: Vec<usize>,
    /// `errors_interpolated[i][p]`: L2 trace error against the
    /// interpolated-weight truth at `n_values[i]`, test point `p`.
    pub errors_interpolated: Vec<Vec<f64>>,
    /// Same against the exact-weight truth.
    pub errors_exact: Vec<Vec<f64>>,
    /// Truth-to-truth gap per test point (the interpolation-error floor).
    pub truth_gap: Vec<f64>,
}

/// Summary statistics of one error ensemble.
#[derive(Clone, Copy, Debug)]
pub struct EnsembleStats {
    pub median: f64,
    pub max: f64,
    pub min: f64,
}

pub fn stats(values: &[f64]) -> EnsembleStats {
    assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    EnsembleStats {
        median,
        max: *sorted.last().unwrap(),
        min: sorted[0],
    }
}

/// Computes the error ensembles over a test set: truth solves per point (both
/// discretizations), then online errors for every requested basis size.
pub fn error_ensembles(
    problem: &TruthProblem,
    model: &ReducedModel,
    test_set: &[Parameter],
    n_values: &[usize],
) -> Result<EnsembleReport> {
    struct PointData {
        trace_interp: Vec<f64>,
        trace_exact: Vec<f64>,
    }
    let points: Vec<PointData> = test_set
        .par_iter()
        .map(|mu| {
            let interp = problem.solve_truth(mu)?;
            let exact = problem.solve_truth_exact_weight(mu)?;
            Ok(PointData {
                trace_interp: problem.trace_bottom(&interp),
                trace_exact: problem.trace_bottom(&exact),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let truth_gap: Vec<f64> = points
        .iter()
        .map(|p| {
            let diff: Vec<f64> = p
                .trace_interp
                .iter()
                .zip(&p.trace_exact)
                .map(|(a, b)| a - b)
                .collect();
            problem.l2_norm_omega(&diff)
        })
        .collect();

    let mut errors_interpolated = Vec::with_capacity(n_values.len());
    let mut errors_exact = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let per_point: Vec<(f64, f64)> = test_set
            .par_iter()
            .zip(points.par_iter())
            .map(|(mu, data)| {
                let sol = model.online_solve(mu, Some(n))?;
                let trace = model.online_trace(&sol);
                let d_interp: Vec<f64> = trace
                    .iter()
                    .zip(&data.trace_interp)
                    .map(|(a, b)| a - b)
                    .collect();
                let d_exact: Vec<f64> = trace
                    .iter()
                    .zip(&data.trace_exact)
                    .map(|(a, b)| a - b)
                    .collect();
                Ok((
                    problem.l2_norm_omega(&d_interp),
                    problem.l2_norm_omega(&d_exact),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        errors_interpolated.push(per_point.iter().map(|p| p.0).collect());
        errors_exact.push(per_point.iter().map(|p| p.1).collect());
    }
    Ok(EnsembleReport {
        n_values: n_values.to_vec(),
        errors_interpolated,
        errors_exact,
        truth_gap,
    })
}

#[cfg(test)]
mod tests;
