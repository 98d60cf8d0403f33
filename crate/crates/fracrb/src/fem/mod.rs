//! Truth solver on the tensorized cylinder.
//!
//! Weak problem: find `U` vanishing on the lateral boundary and the top with
//! `(1/d_s) int_C y^{1-2s} grad U . grad phi = <f, phi(., 0)>`. The trace of
//! `U` at `y = 0` is the solution of the fractional problem on the square.
//!
//! Every operator in play is a two-term Kronecker sum
//! `My (x) Sx + Sy (x) Mx` of 2D stiffness/mass with weighted 1D mass/
//! stiffness: the interpolated-weight Galerkin operator (after collapsing the
//! affine expansion at a given order), the exact-weight operator, and the
//! reference inner product. Applications are matrix-free through that
//! structure; solves use conjugate gradients with a configurable
//! preconditioner.

pub mod interval;
pub mod p2d;
pub mod tensor;

use std::sync::Arc;

use crate::eim::EimModel;
use crate::error::{Error, Result};
use crate::mesh::CylinderMesh;
use crate::param::{ds_coefficient, weight_exponent, Parameter, Subdomain};
use crate::sparse::{Csr, SymTridiag};

pub use interval::{weighted_interval_matrices, weighted_interval_matrices_free};
pub use p2d::TriRule;
use tensor::{apply_cylinder_operator, TensorSolver};

/// One-dimensional factors of a collapsed cylinder operator
/// `My (x) Sx + Sy (x) Mx` (the 2D factors are shared and live in
/// [`TruthProblem`]).
#[derive(Clone, Debug)]
pub struct CylinderOperator {
    pub my: SymTridiag,
    pub sy: SymTridiag,
}

/// Affine expansion of the interpolated-weight bilinear form: per expansion
/// term a pure-power weight exponent and its exact weighted 1D matrices on
/// free levels. The term coefficients are `theta_q(s) / d_s`.
#[derive(Clone, Debug)]
pub struct AffineTruthOperator {
    pub subdomain: Subdomain,
    pub exponents: Vec<f64>,
    pub my: Vec<SymTridiag>,
    pub sy: Vec<SymTridiag>,
}

impl AffineTruthOperator {
    pub fn n_terms(&self) -> usize {
        self.exponents.len()
    }

    /// Collapses the expansion at given per-term coefficients into a single
    /// operator; cost is one tridiagonal combination, independent of the 2D
    /// size.
    pub fn collapse(&self, coefficients: &[f64]) -> CylinderOperator {
        let my_refs: Vec<&SymTridiag> = self.my.iter().collect();
        let sy_refs: Vec<&SymTridiag> = self.sy.iter().collect();
        CylinderOperator {
            my: SymTridiag::linear_combination(&my_refs, coefficients),
            sy: SymTridiag::linear_combination(&sy_refs, coefficients),
        }
    }
}

/// Assembles the affine components from the interpolation snapshots: term `q`
/// carries the weight `y^{1 - 2 s_q}` (the premultiplication by `y` on the
/// upper subdomain is already folded into the exponent).
pub fn assemble_affine_components(
    mesh: &CylinderMesh,
    eim: &EimModel,
) -> Result<AffineTruthOperator> {
    let exponents = eim.exponents();
    let mut my = Vec::with_capacity(exponents.len());
    let mut sy = Vec::with_capacity(exponents.len());
    for &alpha in &exponents {
        if alpha <= -1.0 {
            return Err(Error::InvalidInput(format!(
                "effective weight exponent {alpha} <= -1 is not integrable"
            )));
        }
        let (m, s) = weighted_interval_matrices_free(&mesh.interval, alpha)?;
        my.push(m);
        sy.push(s);
    }
    Ok(AffineTruthOperator {
        subdomain: eim.subdomain,
        exponents,
        my,
        sy,
    })
}

/// Right-hand sides understood by the drivers.
#[derive(Clone, Debug, PartialEq)]
pub enum RhsDescription {
    /// `f = sin(2 pi x1) sin(2 pi x2)`, independent of `nu`.
    Example1,
    /// `f = f1 nu^2 + f2 (1 - nu^2)` with
    /// `f1 = sin(2 pi x1) sin(2 pi x2)`, `f2 = sin(3 pi x1) sin(3 pi x2) e^{x1 x2}`.
    Example2,
    /// Sum of L2-normalized sine modes `coeff * 2 sin(j pi x1) sin(k pi x2)`.
    Modal(Vec<(usize, usize, f64)>),
}

impl RhsDescription {
    /// Number of affine load components.
    pub fn n_components(&self) -> usize {
        match self {
            RhsDescription::Example2 => 2,
            _ => 1,
        }
    }

    /// Parameter-dependent coefficients of the load components.
    pub fn coefficients(&self, mu: &Parameter) -> Result<Vec<f64>> {
        match self {
            RhsDescription::Example2 => {
                let nu = mu.nu.ok_or_else(|| {
                    Error::InvalidInput("the two-parameter right-hand side needs nu".into())
                })?;
                Ok(vec![nu * nu, 1.0 - nu * nu])
            }
            _ => Ok(vec![1.0]),
        }
    }

    fn component_function(&self, p: usize) -> Box<dyn Fn(f64, f64) -> f64 + Send + Sync + '_> {
        use std::f64::consts::PI;
        match (self, p) {
            (RhsDescription::Example1, 0) => {
                Box::new(|x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).sin())
            }
            (RhsDescription::Example2, 0) => {
                Box::new(|x: f64, y: f64| (2.0 * PI * x).sin() * (2.0 * PI * y).sin())
            }
            (RhsDescription::Example2, 1) => Box::new(|x: f64, y: f64| {
                (3.0 * PI * x).sin() * (3.0 * PI * y).sin() * (x * y).exp()
            }),
            (RhsDescription::Modal(modes), 0) => Box::new(move |x: f64, y: f64| {
                modes
                    .iter()
                    .map(|&(j, k, c)| {
                        c * 2.0 * (j as f64 * PI * x).sin() * (k as f64 * PI * y).sin()
                    })
                    .sum()
            }),
            _ => unreachable!("load component index out of range"),
        }
    }
}

/// One affine load component, supported on the bottom level only.
#[derive(Clone, Debug)]
pub struct LoadComponent {
    /// Load vector over free dofs; entries vanish above level zero.
    pub free_vector: Vec<f64>,
    /// The same data restricted to interior 2D vertices.
    pub interior_2d: Vec<f64>,
}

/// Assembles the affine load components `<f_p, phi(., 0)>`; the trace pairing
/// puts all mass on the bottom level.
pub fn assemble_load(mesh: &CylinderMesh, rhs: &RhsDescription) -> Vec<LoadComponent> {
    let n2 = mesh.tri.n_interior;
    let free = mesh.free_dofs();
    (0..rhs.n_components())
        .map(|p| {
            let f = rhs.component_function(p);
            let full = p2d::load_vector(&mesh.tri, &f, TriRule::Degree4);
            let interior = mesh.tri.restrict_interior(&full);
            let mut free_vector = vec![0.0; free];
            free_vector[..n2].copy_from_slice(&interior);
            LoadComponent {
                free_vector,
                interior_2d: interior,
            }
        })
        .collect()
}

/// Preconditioner for the conjugate gradient iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    /// Diagonal scaling. Cheap per iteration but the iteration count grows
    /// quickly on strongly graded meshes.
    Jacobi,
    /// Exact tensor-structured factorization of the collapsed operator
    /// itself; CG then acts as iterative refinement and converges in a
    /// couple of steps.
    Tensor,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tolerance: f64,
    /// Iteration cap: `factor * sqrt(free dofs)`.
    pub max_iter_factor: f64,
    pub preconditioner: Preconditioner,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-10,
            max_iter_factor: 20.0,
            preconditioner: Preconditioner::Tensor,
        }
    }
}

/// Which Galerkin system a truth solution solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruthKind {
    /// Interpolated-weight operator (the reduced-basis truth).
    InterpolatedWeight,
    /// Exact-weight operator (reference for the interpolation-error floor).
    ExactWeight,
}

#[derive(Clone, Debug)]
pub struct TruthSolution {
    pub mu: Parameter,
    pub kind: TruthKind,
    pub coeffs: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Everything needed to solve the truth problem on one subdomain: mesh, 2D
/// factors, affine operator, interpolation model and loads.
pub struct TruthProblem {
    pub mesh: Arc<CylinderMesh>,
    pub eim: Arc<EimModel>,
    pub rhs: RhsDescription,
    pub sx: Csr,
    pub mx: Csr,
    pub mass_full: Csr,
    pub op: AffineTruthOperator,
    pub loads: Vec<LoadComponent>,
    pub options: SolverOptions,
}

impl TruthProblem {
    pub fn new(
        mesh: Arc<CylinderMesh>,
        eim: Arc<EimModel>,
        rhs: RhsDescription,
        options: SolverOptions,
    ) -> Result<Self> {
        let (s_full, m_full) = p2d::assemble_stiffness_mass(&mesh.tri);
        let sx = p2d::restrict_to_interior(&mesh.tri, &s_full);
        let mx = p2d::restrict_to_interior(&mesh.tri, &m_full);
        let op = assemble_affine_components(&mesh, &eim)?;
        let loads = assemble_load(&mesh, &rhs);
        Ok(TruthProblem {
            mesh,
            eim,
            rhs,
            sx,
            mx,
            mass_full: m_full,
            op,
            loads,
            options,
        })
    }

    pub fn n_free(&self) -> usize {
        self.mesh.free_dofs()
    }

    /// Coefficients `theta_q(s) / d_s` of the affine operator at `s`.
    pub fn theta_scaled(&self, s: f64) -> Result<Vec<f64>> {
        let theta = self.eim.eval_theta(s)?;
        let ds = ds_coefficient(s);
        Ok(theta.into_iter().map(|t| t / ds).collect())
    }

    /// Collapsed interpolated-weight operator at `s`.
    pub fn collapsed_operator(&self, s: f64) -> Result<CylinderOperator> {
        Ok(self.op.collapse(&self.theta_scaled(s)?))
    }

    /// Exact-weight operator `(1/d_s)(Sx (x) My^a + Mx (x) Sy^a)` at `s`.
    pub fn exact_weight_operator(&self, s: f64) -> Result<CylinderOperator> {
        let alpha = weight_exponent(s);
        let (my, sy) = weighted_interval_matrices_free(&self.mesh.interval, alpha)?;
        let inv_ds = 1.0 / ds_coefficient(s);
        Ok(CylinderOperator {
            my: SymTridiag::linear_combination(&[&my], &[inv_ds]),
            sy: SymTridiag::linear_combination(&[&sy], &[inv_ds]),
        })
    }

    /// Reference inner product: the unweighted cylinder Dirichlet form
    /// (the interpolated operator at `s = 1/2`, where `d_s = 1`).
    pub fn reference_operator(&self) -> Result<CylinderOperator> {
        let (my, sy) = weighted_interval_matrices_free(&self.mesh.interval, 0.0)?;
        Ok(CylinderOperator { my, sy })
    }

    pub fn apply(&self, op: &CylinderOperator, x: &[f64], y: &mut [f64]) {
        apply_cylinder_operator(&self.sx, &self.mx, &op.my, &op.sy, x, y);
    }

    /// Applies a single affine operator term.
    pub fn apply_component(&self, q: usize, x: &[f64], y: &mut [f64]) {
        apply_cylinder_operator(&self.sx, &self.mx, &self.op.my[q], &self.op.sy[q], x, y);
    }

    /// Assembled load at the parameter (affine combination of components).
    pub fn load_at(&self, mu: &Parameter) -> Result<Vec<f64>> {
        let coeffs = self.rhs.coefficients(mu)?;
        let mut out = vec![0.0; self.n_free()];
        for (c, comp) in coeffs.iter().zip(&self.loads) {
            for (o, &v) in out.iter_mut().zip(&comp.free_vector) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    fn solve_with_operator(
        &self,
        op: &CylinderOperator,
        b: &[f64],
        mu: Parameter,
        kind: TruthKind,
    ) -> Result<TruthSolution> {
        if b.iter().all(|&v| v == 0.0) {
            return Ok(TruthSolution {
                mu,
                kind,
                coeffs: vec![0.0; self.n_free()],
                iterations: 0,
                rel_residual: 0.0,
            });
        }
        let cap = (self.options.max_iter_factor * (self.n_free() as f64).sqrt()).ceil() as usize;
        let apply = |x: &[f64], y: &mut [f64]| self.apply(op, x, y);
        let jacobi = |cap: usize| {
            let diag = self.operator_diagonal(op);
            let precond = move |r: &[f64], z: &mut [f64]| {
                for ((z, &r), &d) in z.iter_mut().zip(r).zip(&diag) {
                    *z = r / d;
                }
            };
            pcg(apply, precond, b, self.options.tolerance, cap)
        };
        let outcome = match self.options.preconditioner {
            Preconditioner::Jacobi => jacobi(cap)?,
            Preconditioner::Tensor => match TensorSolver::new(&self.sx, &self.mx, &op.my, &op.sy) {
                Ok(solver) => {
                    let precond = move |r: &[f64], z: &mut [f64]| {
                        z.copy_from_slice(&solver.solve(r));
                    };
                    pcg(apply, precond, b, self.options.tolerance, cap)?
                }
                Err(e) => {
                    // A 1D factor of the collapsed operator can lose
                    // definiteness even when the operator itself is SPD (the
                    // other Kronecker term compensates); diagonal
                    // preconditioning still applies there.
                    log::debug!("tensor preconditioner unavailable at {mu}: {e}");
                    jacobi(cap)?
                }
            },
        };
        Ok(TruthSolution {
            mu,
            kind,
            coeffs: outcome.x,
            iterations: outcome.iterations,
            rel_residual: outcome.rel_residual,
        })
    }

    /// Galerkin solve of the interpolated-weight system at `mu`.
    pub fn solve_truth(&self, mu: &Parameter) -> Result<TruthSolution> {
        let op = self.collapsed_operator(mu.s)?;
        let b = self.load_at(mu)?;
        self.solve_with_operator(&op, &b, *mu, TruthKind::InterpolatedWeight)
    }

    /// Galerkin solve of the exact-weight system at `mu`.
    pub fn solve_truth_exact_weight(&self, mu: &Parameter) -> Result<TruthSolution> {
        let op = self.exact_weight_operator(mu.s)?;
        let b = self.load_at(mu)?;
        self.solve_with_operator(&op, &b, *mu, TruthKind::ExactWeight)
    }

    fn operator_diagonal(&self, op: &CylinderOperator) -> Vec<f64> {
        let n2 = self.sx.n_rows();
        let levels = op.my.len();
        let sx_diag = self.sx.diagonal();
        let mx_diag = self.mx.diagonal();
        let mut d = vec![0.0; n2 * levels];
        for m in 0..levels {
            for v in 0..n2 {
                d[m * n2 + v] = op.my.diag[m] * sx_diag[v] + op.sy.diag[m] * mx_diag[v];
            }
        }
        d
    }

    /// Bottom trace of a truth solution as a full 2D nodal field.
    pub fn trace_bottom(&self, sol: &TruthSolution) -> Vec<f64> {
        self.mesh.bottom_trace(&sol.coeffs)
    }

    /// `L2(Omega)` norm of a full 2D nodal field via the mass matrix.
    pub fn l2_norm_omega(&self, field: &[f64]) -> f64 {
        self.mass_full.quadratic_form(field, field).max(0.0).sqrt()
    }

    /// Exact-weight energy norm `(int y^{1-2s} |grad .|^2)^{1/2}` of a
    /// free-dof vector (no `d_s` factor).
    pub fn xh_norm(&self, coeffs: &[f64], s: f64) -> Result<f64> {
        let alpha = weight_exponent(s);
        let (my, sy) = weighted_interval_matrices_free(&self.mesh.interval, alpha)?;
        let op = CylinderOperator { my, sy };
        let mut y = vec![0.0; coeffs.len()];
        self.apply(&op, coeffs, &mut y);
        let sq: f64 = coeffs.iter().zip(&y).map(|(a, b)| a * b).sum();
        Ok(sq.max(0.0).sqrt())
    }

    /// Energy `x^T A y` of a collapsed operator.
    pub fn energy_product(&self, op: &CylinderOperator, x: &[f64], y: &[f64]) -> f64 {
        let mut ay = vec![0.0; y.len()];
        self.apply(op, y, &mut ay);
        x.iter().zip(&ay).map(|(a, b)| a * b).sum()
    }
}

pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Preconditioned conjugate gradients with a curvature (positive
/// definiteness) check. Convergence is measured by the Euclidean residual
/// relative to the right-hand side.
pub fn pcg<A, P>(apply: A, precond: P, b: &[f64], tol: f64, max_iter: usize) -> Result<PcgOutcome>
where
    A: Fn(&[f64], &mut [f64]),
    P: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok(PcgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
        });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Indefinite {
                iteration: it,
                curvature: pap,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol * norm_b {
            return Ok(PcgOutcome {
                x,
                iterations: it + 1,
                rel_residual: rnorm / norm_b,
            });
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: rnorm / norm_b,
        tolerance: tol,
    })
}
