//! Exact weighted integrals of hat functions on the graded partition.
//!
//! All matrices here are evaluated from power-rule antiderivatives of
//! `y^alpha`, never by quadrature. On strongly graded meshes the naive
//! antiderivative differences cancel catastrophically for narrow elements far
//! from the origin, so those elements are evaluated through a binomial
//! expansion of `(y0 + h t)^alpha` around the left endpoint instead; the
//! result is still the exact integral up to floating-point rounding.

use crate::error::{Error, Result};
use crate::mesh::GradedInterval;
use crate::sparse::SymTridiag;

/// `int_{y0}^{y1} y^beta dy` by the power rule. Requires `beta > -1`.
fn power_integral(beta: f64, y0: f64, y1: f64) -> f64 {
    (y1.powf(beta + 1.0) - y0.powf(beta + 1.0)) / (beta + 1.0)
}

/// Moments `P_k = int_{y0}^{y1} y^alpha ((y - y0)/h)^k dy` for `k = 0, 1, 2`.
fn element_moments(alpha: f64, y0: f64, y1: f64) -> [f64; 3] {
    let h = y1 - y0;
    if y0 == 0.0 {
        // t = y / y1, so P_k = y1^{alpha+1} / (alpha + k + 1).
        let c = y1.powf(alpha + 1.0);
        return [c / (alpha + 1.0), c / (alpha + 2.0), c / (alpha + 3.0)];
    }
    let r = h / y0;
    if r <= 0.5 {
        // P_k = h y0^alpha \sum_i binom(alpha, i) r^i / (i + k + 1),
        // convergent since r <= 1/2.
        let scale = h * y0.powf(alpha);
        let mut sums = [0.0f64; 3];
        let mut coeff = 1.0; // binom(alpha, i) r^i
        let mut i = 0usize;
        loop {
            let fi = i as f64;
            let mut done = true;
            for (k, sum) in sums.iter_mut().enumerate() {
                let term = coeff / (fi + k as f64 + 1.0);
                *sum += term;
                if term.abs() > 1e-17 * sum.abs() {
                    done = false;
                }
            }
            if (done && i > 2) || i > 400 {
                break;
            }
            coeff *= (alpha - fi) / (fi + 1.0) * r;
            i += 1;
        }
        [scale * sums[0], scale * sums[1], scale * sums[2]]
    } else {
        // Wide element: direct antiderivative differences, cancellation is
        // bounded because y0/h < 2.
        let j0 = power_integral(alpha, y0, y1);
        let j1 = power_integral(alpha + 1.0, y0, y1);
        let j2 = power_integral(alpha + 2.0, y0, y1);
        let p1 = (j1 - y0 * j0) / h;
        let p2 = (j2 - 2.0 * y0 * j1 + y0 * y0 * j0) / (h * h);
        [j0, p1, p2]
    }
}

/// Weighted mass and stiffness matrices of piecewise-linear hat functions on
/// the graded partition, over all `M + 1` nodes:
/// `mass[i][j] = int y^alpha phi_i phi_j`, `stiffness[i][j] = int y^alpha phi_i' phi_j'`.
pub fn weighted_interval_matrices(
    interval: &GradedInterval,
    alpha: f64,
) -> Result<(SymTridiag, SymTridiag)> {
    if !alpha.is_finite() || alpha <= -1.0 {
        return Err(Error::InvalidInput(format!(
            "weight exponent must satisfy alpha > -1, got {alpha}"
        )));
    }
    let n = interval.nodes.len();
    let mut mass = SymTridiag::zeros(n);
    let mut stiffness = SymTridiag::zeros(n);
    for e in 0..interval.m {
        let y0 = interval.nodes[e];
        let y1 = interval.nodes[e + 1];
        let h = y1 - y0;
        let [p0, p1, p2] = element_moments(alpha, y0, y1);
        // Left hat is (1 - t), right hat is t on this element.
        mass.diag[e] += p0 - 2.0 * p1 + p2;
        mass.diag[e + 1] += p2;
        mass.off[e] += p1 - p2;
        let s = p0 / (h * h);
        stiffness.diag[e] += s;
        stiffness.diag[e + 1] += s;
        stiffness.off[e] -= s;
    }
    Ok((mass, stiffness))
}

/// Same matrices restricted to the free nodes `0..M` (the top node carries a
/// homogeneous Dirichlet condition and is eliminated).
pub fn weighted_interval_matrices_free(
    interval: &GradedInterval,
    alpha: f64,
) -> Result<(SymTridiag, SymTridiag)> {
    let (mass, stiffness) = weighted_interval_matrices(interval, alpha)?;
    Ok((mass.drop_last(), stiffness.drop_last()))
}
