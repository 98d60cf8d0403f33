//! Extremal generalized eigenvalues of symmetric pencils `(A, G)` with `G`
//! positive definite, by a Lanczos iteration run in the `G` inner product.
//!
//! One iteration applies `G^{-1} A`; the metric solves are direct through the
//! tensor structure of `G`, so the iteration is cheap even at full truth
//! resolution. Full reorthogonalization keeps the small tridiagonal system
//! trustworthy; the classical residual bound `|beta_k y_k|` of the extreme
//! Ritz pairs is returned so callers can build rigorous safety margins.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub struct LanczosExtremes {
    pub min_value: f64,
    pub min_residual: f64,
    pub min_vector: Vec<f64>,
    pub max_value: f64,
    pub max_residual: f64,
    pub max_vector: Vec<f64>,
    pub steps: usize,
}

/// Runs the iteration on the pencil `(A, G)` where `apply_a` computes `A x`,
/// `apply_g` computes `G x`, and `solve_g` applies `G^{-1}`.
pub fn lanczos_extremes<FA, FG, FS>(
    apply_a: FA,
    apply_g: FG,
    solve_g: FS,
    n: usize,
    max_steps: usize,
    tol: f64,
) -> Result<LanczosExtremes>
where
    FA: Fn(&[f64], &mut [f64]),
    FG: Fn(&[f64], &mut [f64]),
    FS: Fn(&[f64]) -> Vec<f64>,
{
    assert!(n > 0);
    let max_steps = max_steps.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2b);
    let start: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

    let g_norm = |v: &[f64], gv: &[f64]| -> f64 {
        v.iter()
            .zip(gv)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    };

    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut g_vectors: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut gv = vec![0.0; n];
    apply_g(&start, &mut gv);
    let nrm = g_norm(&start, &gv);
    if nrm == 0.0 {
        return Err(Error::EigenNonConvergence {
            steps: 0,
            residual: f64::INFINITY,
        });
    }
    vectors.push(start.iter().map(|&v| v / nrm).collect());
    g_vectors.push(gv.iter().map(|&v| v / nrm).collect());

    let mut best: Option<LanczosExtremes> = None;
    let mut av = vec![0.0; n];
    for step in 0..max_steps {
        let v = vectors.last().unwrap().clone();
        apply_a(&v, &mut av);
        let mut w = solve_g(&av);
        let alpha: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        // Three-term recurrence plus full reorthogonalization in G.
        for _pass in 0..2 {
            for (vk, gk) in vectors.iter().zip(&g_vectors) {
                let c: f64 = gk.iter().zip(&w).map(|(a, b)| a * b).sum();
                if c != 0.0 {
                    for (wi, vi) in w.iter_mut().zip(vk) {
                        *wi -= c * vi;
                    }
                }
            }
        }
        let mut gw = vec![0.0; n];
        apply_g(&w, &mut gw);
        let beta = g_norm(&w, &gw);

        // Ritz data of the current tridiagonal.
        let k = alphas.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = nalgebra::SymmetricEigen::new(t);
        let mut min_i = 0;
        let mut max_i = 0;
        for i in 0..k {
            if eig.eigenvalues[i] < eig.eigenvalues[min_i] {
                min_i = i;
            }
            if eig.eigenvalues[i] > eig.eigenvalues[max_i] {
                max_i = i;
            }
        }
        let resid = |col: usize| beta * eig.eigenvectors[(k - 1, col)].abs();
        let min_value = eig.eigenvalues[min_i];
        let max_value = eig.eigenvalues[max_i];
        let min_residual = resid(min_i);
        let max_residual = resid(max_i);

        let happy = beta <= 1e-13 * alphas[0].abs().max(1.0);
        let converged = min_residual <= tol * min_value.abs().max(1e-300)
            && max_residual <= tol * max_value.abs();
        if converged || happy || step + 1 == max_steps || k == n {
            let ritz_vector = |col: usize| {
                let mut out = vec![0.0; n];
                for (j, vj) in vectors.iter().enumerate() {
                    let c = eig.eigenvectors[(j, col)];
                    for (o, &x) in out.iter_mut().zip(vj) {
                        *o += c * x;
                    }
                }
                out
            };
            let out = LanczosExtremes {
                min_value,
                min_residual,
                min_vector: ritz_vector(min_i),
                max_value,
                max_residual,
                max_vector: ritz_vector(max_i),
                steps: k,
            };
            if converged || happy || k == n {
                return Ok(out);
            }
            best = Some(out);
            break;
        }

        betas.push(beta);
        vectors.push(w.iter().map(|&x| x / beta).collect());
        g_vectors.push(gw.iter().map(|&x| x / beta).collect());
    }
    // Ran out of steps: return the best estimate with its (non-small)
    // residuals so the caller can widen margins accordingly.
    best.ok_or(Error::EigenNonConvergence {
        steps: max_steps,
        residual: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::interval::weighted_interval_matrices_free;
    use crate::fem::tensor::generalized_eigen_dense;
    use crate::mesh::build_graded_partition;

    #[test]
    fn matches_dense_oracle_on_tridiagonal_pencil() {
        let iv = build_graded_partition(40, 2.0, 2.233).unwrap();
        let (mass, stiffness) = weighted_interval_matrices_free(&iv, 0.4).unwrap();
        let (m_apply, s_apply) = (mass.clone(), stiffness.clone());
        let m_dense = mass.to_dense();
        let chol = nalgebra::Cholesky::new(m_dense.clone()).unwrap();
        let result = lanczos_extremes(
            |x, y| s_apply.mul_vec(x, y),
            |x, y| m_apply.mul_vec(x, y),
            |b| {
                let sol = chol.solve(&nalgebra::DVector::from_column_slice(b));
                sol.iter().copied().collect()
            },
            mass.len(),
            60,
            1e-10,
        )
        .unwrap();
        let (lambda, _) = generalized_eigen_dense(&stiffness.to_dense(), &m_dense).unwrap();
        let exact_min = lambda[0];
        let exact_max = *lambda.last().unwrap();
        assert!(
            (result.min_value - exact_min).abs() <= 1e-7 * exact_min,
            "min {} vs {}",
            result.min_value,
            exact_min
        );
        assert!(
            (result.max_value - exact_max).abs() <= 1e-7 * exact_max,
            "max {} vs {}",
            result.max_value,
            exact_max
        );
        // Safety margins actually bracket the exact values.
        assert!(result.min_value - result.min_residual <= exact_min * (1.0 + 1e-12));
        assert!(result.max_value + result.max_residual >= exact_max * (1.0 - 1e-12));
    }

    #[test]
    fn min_vector_is_a_good_rayleigh_minimizer() {
        let iv = build_graded_partition(25, 3.0, 1.5).unwrap();
        let (mass, stiffness) = weighted_interval_matrices_free(&iv, -0.3).unwrap();
        let m_dense = mass.to_dense();
        let chol = nalgebra::Cholesky::new(m_dense).unwrap();
        let result = lanczos_extremes(
            |x, y| stiffness.mul_vec(x, y),
            |x, y| mass.mul_vec(x, y),
            |b| {
                let sol = chol.solve(&nalgebra::DVector::from_column_slice(b));
                sol.iter().copied().collect()
            },
            mass.len(),
            40,
            1e-10,
        )
        .unwrap();
        let v = &result.min_vector;
        let mut sv = vec![0.0; v.len()];
        stiffness.mul_vec(v, &mut sv);
        let mut mv = vec![0.0; v.len()];
        mass.mul_vec(v, &mut mv);
        let num: f64 = v.iter().zip(&sv).map(|(a, b)| a * b).sum();
        let den: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let rayleigh = num / den;
        assert!(
            (rayleigh - result.min_value).abs() <= 1e-6 * result.min_value.abs(),
            "rayleigh {rayleigh} vs ritz {}",
            result.min_value
        );
    }
}
