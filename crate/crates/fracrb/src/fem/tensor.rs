//! Direct solver for operators of the form `My (x) Sx + Sy (x) Mx` on the
//! tensorized cylinder.
//!
//! The 1D pencil `(Sy, My)` is diagonalized once (it is a dense
//! `levels x levels` generalized symmetric eigenproblem, cheap at any scale
//! used here), which block-diagonalizes the operator into one 2D problem
//! `Sx + lambda_k Mx` per eigenmode. Those are factored by a banded Cholesky;
//! the structured triangulation keeps the bandwidth at `n + 1`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::sparse::{Csr, SymTridiag};

/// Cholesky factorization of a symmetric positive definite banded matrix.
/// Lower band stored row-major: entry `(r, c)` at `data[r * (bw + 1) + c + bw - r]`.
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedCholesky {
    /// Factors `A + shift * B` where both matrices are given as CSR.
    pub fn factor_shifted(a: &Csr, b: &Csr, shift: f64) -> Result<Self> {
        let n = a.n_rows();
        let mut bw = 0usize;
        for r in 0..n {
            for (c, _) in a.row_entries(r).chain(b.row_entries(r)) {
                bw = bw.max(r.abs_diff(c));
            }
        }
        let stride = bw + 1;
        let mut data = vec![0.0; n * stride];
        for r in 0..n {
            for (c, v) in a.row_entries(r) {
                if c <= r {
                    data[r * stride + c + bw - r] += v;
                }
            }
            for (c, v) in b.row_entries(r) {
                if c <= r {
                    data[r * stride + c + bw - r] += shift * v;
                }
            }
        }
        let mut chol = BandedCholesky { n, bw, data };
        chol.factor_in_place()?;
        Ok(chol)
    }

    fn factor_in_place(&mut self) -> Result<()> {
        let (n, bw, stride) = (self.n, self.bw, self.bw + 1);
        for r in 0..n {
            let c0 = r.saturating_sub(bw);
            for c in c0..=r {
                let mut sum = self.data[r * stride + c + bw - r];
                let kmin = c0.max(c.saturating_sub(bw));
                for k in kmin..c {
                    sum -= self.data[r * stride + k + bw - r] * self.data[c * stride + k + bw - c];
                }
                if c == r {
                    if sum <= 0.0 {
                        return Err(Error::Indefinite {
                            iteration: r,
                            curvature: sum,
                        });
                    }
                    self.data[r * stride + bw] = sum.sqrt();
                } else {
                    self.data[r * stride + c + bw - r] = sum / self.data[c * stride + bw];
                }
            }
        }
        Ok(())
    }

    /// Solves `L L^T x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, stride) = (self.n, self.bw, self.bw + 1);
        debug_assert_eq!(x.len(), n);
        for r in 0..n {
            let c0 = r.saturating_sub(bw);
            let mut acc = x[r];
            for c in c0..r {
                acc -= self.data[r * stride + c + bw - r] * x[c];
            }
            x[r] = acc / self.data[r * stride + bw];
        }
        for r in (0..n).rev() {
            let cmax = (r + bw).min(n - 1);
            let mut acc = x[r];
            for c in r + 1..=cmax {
                acc -= self.data[c * stride + r + bw - c] * x[c];
            }
            x[r] = acc / self.data[r * stride + bw];
        }
    }
}

/// Generalized eigendecomposition of the symmetric pencil `(S, M)` with `M`
/// positive definite: returns `(lambda, V)` with `V^T M V = I` and
/// `V^T S V = diag(lambda)`, modes sorted ascending.
pub fn generalized_eigen_pencil(s: &SymTridiag, m: &SymTridiag) -> Result<(Vec<f64>, DMatrix<f64>)> {
    generalized_eigen_dense(&s.to_dense(), &m.to_dense())
}

/// Dense-path generalized symmetric eigensolver (also the test oracle for
/// the iterative eigenvalue machinery).
pub fn generalized_eigen_dense(
    s: &DMatrix<f64>,
    m: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = nalgebra::Cholesky::new(m.clone())
        .ok_or_else(|| Error::InvalidInput("pencil metric is not positive definite".into()))?;
    let l = chol.l();
    // B = L^-1 S L^-T, via two triangular solves.
    let u = l
        .solve_lower_triangular(s)
        .ok_or_else(|| Error::InvalidInput("singular Cholesky factor".into()))?;
    let w = l
        .solve_lower_triangular(&u.transpose())
        .ok_or_else(|| Error::InvalidInput("singular Cholesky factor".into()))?;
    let mut b = w.transpose();
    // Symmetrize against rounding before the eigensolve.
    let bt = b.transpose();
    b = (b + bt) * 0.5;
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap()
    });
    let n = s.nrows();
    let mut q_sorted = DMatrix::zeros(n, n);
    let mut lambda = Vec::with_capacity(n);
    for (k, &i) in order.iter().enumerate() {
        lambda.push(eig.eigenvalues[i]);
        q_sorted.set_column(k, &eig.eigenvectors.column(i));
    }
    // V = L^-T Q.
    let v = l
        .transpose()
        .solve_upper_triangular(&q_sorted)
        .ok_or_else(|| Error::InvalidInput("singular Cholesky factor".into()))?;
    Ok((lambda, v))
}

/// Direct solver for `My (x) Sx + Sy (x) Mx` restricted to free dofs.
pub struct TensorSolver {
    n2: usize,
    levels: usize,
    v: DMatrix<f64>,
    factors: Vec<BandedCholesky>,
}

impl TensorSolver {
    pub fn new(sx: &Csr, mx: &Csr, my: &SymTridiag, sy: &SymTridiag) -> Result<Self> {
        let n2 = sx.n_rows();
        let levels = my.len();
        let (lambda, v) = generalized_eigen_pencil(sy, my)?;
        let factors = lambda
            .iter()
            .map(|&lk| BandedCholesky::factor_shifted(sx, mx, lk.max(0.0)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TensorSolver {
            n2,
            levels,
            v,
            factors,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.n2 * self.levels
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n2, levels) = (self.n2, self.levels);
        debug_assert_eq!(b.len(), n2 * levels);
        // b_hat = (V^T (x) I) b
        let mut hat = vec![0.0; n2 * levels];
        for k in 0..levels {
            let out = &mut hat[k * n2..(k + 1) * n2];
            for m in 0..levels {
                let vm = self.v[(m, k)];
                if vm != 0.0 {
                    let src = &b[m * n2..(m + 1) * n2];
                    for (o, &s) in out.iter_mut().zip(src) {
                        *o += vm * s;
                    }
                }
            }
        }
        for (k, factor) in self.factors.iter().enumerate() {
            factor.solve_in_place(&mut hat[k * n2..(k + 1) * n2]);
        }
        // x = (V (x) I) x_hat
        let mut x = vec![0.0; n2 * levels];
        for m in 0..levels {
            let out = &mut x[m * n2..(m + 1) * n2];
            for k in 0..levels {
                let vm = self.v[(m, k)];
                if vm != 0.0 {
                    let src = &hat[k * n2..(k + 1) * n2];
                    for (o, &s) in out.iter_mut().zip(src) {
                        *o += vm * s;
                    }
                }
            }
        }
        x
    }
}

/// Matrix-free application of `My (x) Sx + Sy (x) Mx` to a level-blocked
/// free-dof vector.
pub fn apply_cylinder_operator(
    sx: &Csr,
    mx: &Csr,
    my: &SymTridiag,
    sy: &SymTridiag,
    x: &[f64],
    y: &mut [f64],
) {
    let n2 = sx.n_rows();
    let levels = my.len();
    debug_assert_eq!(x.len(), n2 * levels);
    debug_assert_eq!(y.len(), n2 * levels);
    let mut sx_x = vec![0.0; n2 * levels];
    let mut mx_x = vec![0.0; n2 * levels];
    for m in 0..levels {
        sx.mul_vec(&x[m * n2..(m + 1) * n2], &mut sx_x[m * n2..(m + 1) * n2]);
        mx.mul_vec(&x[m * n2..(m + 1) * n2], &mut mx_x[m * n2..(m + 1) * n2]);
    }
    for m in 0..levels {
        let out = &mut y[m * n2..(m + 1) * n2];
        out.fill(0.0);
        let mut add = |coeff: f64, src: &[f64]| {
            if coeff != 0.0 {
                for (o, &s) in out.iter_mut().zip(src) {
                    *o += coeff * s;
                }
            }
        };
        add(my.diag[m], &sx_x[m * n2..(m + 1) * n2]);
        add(sy.diag[m], &mx_x[m * n2..(m + 1) * n2]);
        if m > 0 {
            add(my.off[m - 1], &sx_x[(m - 1) * n2..m * n2]);
            add(sy.off[m - 1], &mx_x[(m - 1) * n2..m * n2]);
        }
        if m + 1 < levels {
            add(my.off[m], &sx_x[(m + 1) * n2..(m + 2) * n2]);
            add(sy.off[m], &mx_x[(m + 1) * n2..(m + 2) * n2]);
        }
    }
}

/// Dense assembly of the same operator, for small-mesh oracles.
pub fn cylinder_operator_dense(
    sx: &Csr,
    mx: &Csr,
    my: &SymTridiag,
    sy: &SymTridiag,
) -> DMatrix<f64> {
    let n2 = sx.n_rows();
    let levels = my.len();
    let sxd = sx.to_dense();
    let mxd = mx.to_dense();
    let myd = my.to_dense();
    let syd = sy.to_dense();
    let n = n2 * levels;
    let mut out = DMatrix::zeros(n, n);
    for m in 0..levels {
        for mp in 0..levels {
            let cm = myd[(m, mp)];
            let cs = syd[(m, mp)];
            if cm == 0.0 && cs == 0.0 {
                continue;
            }
            for v in 0..n2 {
                for vp in 0..n2 {
                    out[(m * n2 + v, mp * n2 + vp)] += cm * sxd[(v, vp)] + cs * mxd[(v, vp)];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interval::weighted_interval_matrices_free;
    use crate::fem::p2d::{assemble_stiffness_mass, restrict_to_interior};
    use crate::mesh::{build_graded_partition, build_unit_square_triangulation};
    use approx::assert_relative_eq;

    fn tiny_setup() -> (Csr, Csr, SymTridiag, SymTridiag) {
        let tri = build_unit_square_triangulation(4).unwrap();
        let (s_full, m_full) = assemble_stiffness_mass(&tri);
        let sx = restrict_to_interior(&tri, &s_full);
        let mx = restrict_to_interior(&tri, &m_full);
        let iv = build_graded_partition(5, 2.0, 2.233).unwrap();
        let (my, sy) = weighted_interval_matrices_free(&iv, 0.3).unwrap();
        (sx, mx, my, sy)
    }

    #[test]
    fn matrix_free_apply_matches_dense() {
        let (sx, mx, my, sy) = tiny_setup();
        let n = sx.n_rows() * my.len();
        let dense = cylinder_operator_dense(&sx, &mx, &my, &sy);
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 17) as f64 - 8.0) / 7.0).collect();
        let mut y = vec![0.0; n];
        apply_cylinder_operator(&sx, &mx, &my, &sy, &x, &mut y);
        let yd = &dense * nalgebra::DVector::from_column_slice(&x);
        let scale = yd.amax();
        for i in 0..n {
            assert!((y[i] - yd[i]).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn tensor_solver_inverts_operator() {
        let (sx, mx, my, sy) = tiny_setup();
        let n = sx.n_rows() * my.len();
        let solver = TensorSolver::new(&sx, &mx, &my, &sy).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let x = solver.solve(&b);
        let mut r = vec![0.0; n];
        apply_cylinder_operator(&sx, &mx, &my, &sy, &x, &mut r);
        let err: f64 = r
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err <= 1e-11 * norm, "residual {err:.3e}");
    }

    #[test]
    fn banded_cholesky_matches_dense_solve() {
        let (sx, mx, _, _) = tiny_setup();
        let chol = BandedCholesky::factor_shifted(&sx, &mx, 3.5).unwrap();
        let n = sx.n_rows();
        let dense = sx.to_dense() + 3.5 * mx.to_dense();
        let b: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let mut x = b.clone();
        chol.solve_in_place(&mut x);
        let xd = nalgebra::Cholesky::new(dense)
            .unwrap()
            .solve(&nalgebra::DVector::from_column_slice(&b));
        for i in 0..n {
            assert_relative_eq!(x[i], xd[i], max_relative = 1e-11, epsilon = 1e-13);
        }
    }

    #[test]
    fn pencil_eigen_orthogonality() {
        let iv = build_graded_partition(8, 3.0, 1.7).unwrap();
        let (my, sy) = weighted_interval_matrices_free(&iv, -0.5).unwrap();
        let (lambda, v) = generalized_eigen_pencil(&sy, &my).unwrap();
        assert!(lambda.windows(2).all(|w| w[0] <= w[1]));
        assert!(lambda[0] > 0.0);
        let myd = my.to_dense();
        let gram = v.transpose() * myd * &v;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() < 1e-10);
            }
        }
    }
}
