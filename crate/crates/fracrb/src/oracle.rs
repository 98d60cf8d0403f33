//! Analytic spectral solver on the unit square.
//!
//! The Dirichlet Laplacian on `[0,1]^2` has the closed-form eigenpairs
//! `phi_{jk} = 2 sin(j pi x1) sin(k pi x2)`, `lambda_{jk} = pi^2 (j^2 + k^2)`,
//! so the fractional problem is solved exactly mode by mode. This is the
//! independent ground truth the whole pipeline is validated against, and the
//! evaluator of fractional Sobolev norms of trace fields.

use std::f64::consts::PI;

use crate::fem::p2d::TriRule;
use crate::mesh::Triangulation2d;

/// A field on the square in the sine eigenbasis: coefficients `u_{jk}` for
/// modes `1 <= j, k <= j_max` against the L2-normalized eigenfunctions.
#[derive(Clone, Debug)]
pub struct ModalField {
    pub j_max: usize,
    /// Row-major: `coeffs[(j - 1) * j_max + (k - 1)]`.
    pub coeffs: Vec<f64>,
}

/// Eigenvalue of the mode `(j, k)`.
pub fn eigenvalue(j: usize, k: usize) -> f64 {
    PI * PI * ((j * j + k * k) as f64)
}

impl ModalField {
    pub fn zeros(j_max: usize) -> Self {
        ModalField {
            j_max,
            coeffs: vec![0.0; j_max * j_max],
        }
    }

    pub fn from_modes(j_max: usize, modes: &[(usize, usize, f64)]) -> Self {
        let mut field = ModalField::zeros(j_max);
        for &(j, k, c) in modes {
            assert!(j >= 1 && k >= 1 && j <= j_max && k <= j_max);
            field.coeffs[(j - 1) * j_max + (k - 1)] += c;
        }
        field
    }

    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        self.coeffs[(j - 1) * self.j_max + (k - 1)]
    }

    /// Pointwise evaluation `sum u_jk 2 sin(j pi x) sin(k pi y)`.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for j in 1..=self.j_max {
            let sj = (j as f64 * PI * x).sin();
            if sj == 0.0 {
                continue;
            }
            for k in 1..=self.j_max {
                let c = self.coeff(j, k);
                if c != 0.0 {
                    acc += c * 2.0 * sj * (k as f64 * PI * y).sin();
                }
            }
        }
        acc
    }

    /// Nodal interpolant on a triangulation.
    pub fn values_on_vertices(&self, tri: &Triangulation2d) -> Vec<f64> {
        tri.vertices.iter().map(|p| self.eval(p[0], p[1])).collect()
    }

    /// `L2(Omega)` norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Exact modal solution of the fractional problem: divides each coefficient
/// by `lambda_{jk}^s`.
pub fn spectral_solve(f: &ModalField, s: f64) -> ModalField {
    modal_scale(f, -s)
}

/// The fractional operator itself on a modal field (multiplies by
/// `lambda_{jk}^s`).
pub fn apply_fractional_laplacian(u: &ModalField, s: f64) -> ModalField {
    modal_scale(u, s)
}

fn modal_scale(f: &ModalField, exponent: f64) -> ModalField {
    let mut out = ModalField::zeros(f.j_max);
    for j in 1..=f.j_max {
        for k in 1..=f.j_max {
            let c = f.coeff(j, k);
            if c != 0.0 {
                out.coeffs[(j - 1) * f.j_max + (k - 1)] = c * eigenvalue(j, k).powf(exponent);
            }
        }
    }
    out
}

/// Fractional Sobolev norm `(sum lambda_{jk}^s u_{jk}^2)^{1/2}`; `s = 0`
/// recovers the L2 norm.
pub fn hs_norm(field: &ModalField, s: f64) -> f64 {
    let mut acc = 0.0;
    for j in 1..=field.j_max {
        for k in 1..=field.j_max {
            let c = field.coeff(j, k);
            if c != 0.0 {
                acc += eigenvalue(j, k).powf(s) * c * c;
            }
        }
    }
    acc.sqrt()
}

/// Modal projection of a nodal field together with its Parseval defect.
#[derive(Clone, Debug)]
pub struct ProjectionReport {
    pub field: ModalField,
    /// L2 norm of the nodal field from the mass matrix.
    pub l2_nodal: f64,
    /// L2 norm captured by the retained modes.
    pub l2_modal: f64,
    /// `l2_nodal^2 - l2_modal^2`, mass beyond the truncation (>= 0 up to
    /// quadrature error).
    pub parseval_defect: f64,
    /// True when the quadrature had to refine (`j_max * h > 1` on the
    /// original grid).
    pub refined: bool,
}

/// Projects a P1 nodal field onto the sine modes by composite quadrature.
///
/// Each triangle is integrated with a degree-6 rule, subdividing until the
/// sub-triangle diameter resolves the fastest mode (`j_max * h <= 1`).
pub fn project_to_modes(
    tri: &Triangulation2d,
    nodal: &[f64],
    mass_l2: f64,
    j_max: usize,
) -> ProjectionReport {
    assert_eq!(nodal.len(), tri.n_vertices());
    let h = tri.grid_spacing();
    let product = j_max as f64 * h;
    let levels = if product > 1.0 {
        product.log2().ceil().max(1.0) as usize
    } else {
        0
    };
    if levels > 0 {
        log::debug!("modal projection refining {levels}x: j_max * h = {product:.2} > 1");
    }
    let pts = TriRule::Degree6.points();
    let mut coeffs = vec![0.0; j_max * j_max];
    for t in 0..tri.triangles.len() {
        let idx = tri.triangles[t];
        let p: Vec<[f64; 2]> = idx.iter().map(|&v| tri.vertices[v]).collect();
        let vals = [nodal[idx[0]], nodal[idx[1]], nodal[idx[2]]];
        project_triangle(&p, &vals, &pts, levels, j_max, &mut coeffs);
    }
    let field = ModalField { j_max, coeffs };
    let l2_modal = field.l2_norm();
    ProjectionReport {
        l2_nodal: mass_l2,
        l2_modal,
        parseval_defect: mass_l2 * mass_l2 - l2_modal * l2_modal,
        refined: levels > 0,
        field,
    }
}

fn project_triangle(
    p: &[[f64; 2]],
    vals: &[f64; 3],
    pts: &[(f64, [f64; 3])],
    levels: usize,
    j_max: usize,
    coeffs: &mut [f64],
) {
    if levels == 0 {
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
        for &(w, bary) in pts {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let v = bary[0] * vals[0] + bary[1] * vals[1] + bary[2] * vals[2];
            let scaled = 2.0 * w * area * v;
            for j in 1..=j_max {
                let sj = (j as f64 * PI * x).sin();
                for k in 1..=j_max {
                    coeffs[(j - 1) * j_max + (k - 1)] += scaled * sj * (k as f64 * PI * y).sin();
                }
            }
        }
        return;
    }
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5];
    let m01 = mid(p[0], p[1]);
    let m12 = mid(p[1], p[2]);
    let m20 = mid(p[2], p[0]);
    let v01 = 0.5 * (vals[0] + vals[1]);
    let v12 = 0.5 * (vals[1] + vals[2]);
    let v20 = 0.5 * (vals[2] + vals[0]);
    project_triangle(&[p[0], m01, m20], &[vals[0], v01, v20], pts, levels - 1, j_max, coeffs);
    project_triangle(&[m01, p[1], m12], &[v01, vals[1], v12], pts, levels - 1, j_max, coeffs);
    project_triangle(&[m20, m12, p[2]], &[v20, v12, vals[2]], pts, levels - 1, j_max, coeffs);
    project_triangle(&[m01, m12, m20], &[v01, v12, v20], pts, levels - 1, j_max, coeffs);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::p2d::assemble_stiffness_mass;
    use crate::mesh::build_unit_square_triangulation;
    use approx::assert_relative_eq;

    #[test]
    fn eigenfunction_right_hand_side_scales_by_eigenvalue() {
        // f = sin(2 pi x) sin(2 pi y) = 0.5 * phi_{2,2}.
        let f = ModalField::from_modes(4, &[(2, 2, 0.5)]);
        for &s in &[0.2, 0.5, 0.8] {
            let u = spectral_solve(&f, s);
            let expect = 0.5 * (8.0 * PI * PI).powf(-s);
            assert_relative_eq!(u.coeff(2, 2), expect, max_relative = 1e-14);
        }
        // s = 0 is the identity, s = 1 divides by the Laplace eigenvalue.
        let u0 = spectral_solve(&f, 0.0);
        assert_relative_eq!(u0.coeff(2, 2), 0.5);
        let f11 = ModalField::from_modes(3, &[(1, 1, 1.0)]);
        let u1 = spectral_solve(&f11, 1.0);
        assert_relative_eq!(u1.coeff(1, 1), 1.0 / (2.0 * PI * PI), max_relative = 1e-14);
    }

    #[test]
    fn solve_then_apply_round_trips() {
        let f = ModalField::from_modes(6, &[(1, 2, 0.7), (3, 3, -0.2), (5, 1, 0.05)]);
        for &s in &[0.1, 0.45, 0.9] {
            let u = spectral_solve(&f, s);
            let back = apply_fractional_laplacian(&u, s);
            for j in 1..=6 {
                for k in 1..=6 {
                    assert_relative_eq!(
                        back.coeff(j, k),
                        f.coeff(j, k),
                        max_relative = 1e-14,
                        epsilon = 1e-16
                    );
                }
            }
        }
    }

    #[test]
    fn hs_norm_identities() {
        let zero = ModalField::zeros(5);
        assert_eq!(hs_norm(&zero, 0.4), 0.0);
        let phi11 = ModalField::from_modes(5, &[(1, 1, 1.0)]);
        for &s in &[0.0, 0.3, 0.75] {
            assert_relative_eq!(
                hs_norm(&phi11, s),
                (2.0 * PI * PI).powf(0.5 * s),
                max_relative = 1e-14
            );
        }
        // Monotone in s when every eigenvalue is at least one.
        let f = ModalField::from_modes(5, &[(1, 1, 0.3), (4, 2, -0.8)]);
        let norms: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&s| hs_norm(&f, s))
            .collect();
        assert!(norms.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn projection_recovers_dominant_mode_under_refinement() {
        let exact = ModalField::from_modes(8, &[(1, 1, 1.0)]);
        let mut prev_off = f64::INFINITY;
        for &n in &[8usize, 16, 32] {
            let tri = build_unit_square_triangulation(n).unwrap();
            let nodal = exact.values_on_vertices(&tri);
            let (_, mass) = assemble_stiffness_mass(&tri);
            let l2 = mass.quadratic_form(&nodal, &nodal).sqrt();
            let report = project_to_modes(&tri, &nodal, l2, 8);
            let mut off = 0.0f64;
            for j in 1..=8 {
                for k in 1..=8 {
                    if (j, k) != (1, 1) {
                        off = off.max(report.field.coeff(j, k).abs());
                    }
                }
            }
            assert!(off < prev_off.max(1e-12));
            prev_off = off;
            assert!((report.field.coeff(1, 1) - 1.0).abs() < 4.0 / (n * n) as f64);
        }
    }

    #[test]
    fn projection_of_zero_field() {
        let tri = build_unit_square_triangulation(6).unwrap();
        let nodal = vec![0.0; tri.n_vertices()];
        let report = project_to_modes(&tri, &nodal, 0.0, 5);
        assert!(report.field.coeffs.iter().all(|&c| c == 0.0));
        assert_eq!(report.parseval_defect, 0.0);
    }

    #[test]
    fn parseval_defect_small_at_production_resolution() {
        let exact = ModalField::from_modes(20, &[(2, 2, 0.5)]);
        let tri = build_unit_square_triangulation(50).unwrap();
        let nodal = exact.values_on_vertices(&tri);
        let (_, mass) = assemble_stiffness_mass(&tri);
        let l2 = mass.quadratic_form(&nodal, &nodal).sqrt();
        let report = project_to_modes(&tri, &nodal, l2, 20);
        assert!(
            report.parseval_defect.abs() <= 1e-3,
            "defect {}",
            report.parseval_defect
        );
    }
}
