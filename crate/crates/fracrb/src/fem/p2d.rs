//! P1 assembly and quadrature on the 2D triangulation.

use crate::mesh::Triangulation2d;
use crate::sparse::Csr;

/// Symmetric quadrature rules on the reference triangle in barycentric form.
/// Weights sum to one and are scaled by the triangle area on use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriRule {
    /// 6-point rule, exact for total degree 4. Used for load assembly.
    Degree4,
    /// 7-point rule, exact for total degree 5. Independent cross-check rule.
    Degree5,
    /// 12-point rule, exact for total degree 6. Used for modal projections.
    Degree6,
}

impl TriRule {
    /// `(weight, [l0, l1, l2])` pairs.
    pub fn points(&self) -> Vec<(f64, [f64; 3])> {
        fn orbit3(points: &mut Vec<(f64, [f64; 3])>, w: f64, a: f64, b: f64) {
            points.push((w, [a, b, b]));
            points.push((w, [b, a, b]));
            points.push((w, [b, b, a]));
        }
        fn orbit6(points: &mut Vec<(f64, [f64; 3])>, w: f64, a: f64, b: f64, c: f64) {
            points.push((w, [a, b, c]));
            points.push((w, [a, c, b]));
            points.push((w, [b, a, c]));
            points.push((w, [b, c, a]));
            points.push((w, [c, a, b]));
            points.push((w, [c, b, a]));
        }
        let mut pts = Vec::new();
        match self {
            TriRule::Degree4 => {
                orbit3(
                    &mut pts,
                    0.109951743655322,
                    0.816847572980459,
                    0.091576213509771,
                );
                orbit3(
                    &mut pts,
                    0.223381589678011,
                    0.108103018168070,
                    0.445948490915965,
                );
            }
            TriRule::Degree5 => {
                pts.push((0.225, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]));
                orbit3(
                    &mut pts,
                    0.125939180544827,
                    0.797426985353087,
                    0.101286507323456,
                );
                orbit3(
                    &mut pts,
                    0.132394152788506,
                    0.059715871789770,
                    0.470142064105115,
                );
            }
            TriRule::Degree6 => {
                orbit3(
                    &mut pts,
                    0.050844906370207,
                    0.873821971016996,
                    0.063089014491502,
                );
                orbit3(
                    &mut pts,
                    0.116786275726379,
                    0.501426509658179,
                    0.249286745170910,
                );
                orbit6(
                    &mut pts,
                    0.082851075618374,
                    0.636502499121399,
                    0.310352451033785,
                    0.053145049844816,
                );
            }
        }
        pts
    }
}

/// P1 stiffness and mass on all vertices.
pub fn assemble_stiffness_mass(tri: &Triangulation2d) -> (Csr, Csr) {
    let nv = tri.n_vertices();
    let mut s_trip = Vec::with_capacity(tri.triangles.len() * 9);
    let mut m_trip = Vec::with_capacity(tri.triangles.len() * 9);
    for t in 0..tri.triangles.len() {
        let idx = tri.triangles[t];
        let p: Vec<[f64; 2]> = idx.iter().map(|&v| tri.vertices[v]).collect();
        let area = tri.triangle_area(t);
        let grads = [
            [p[1][1] - p[2][1], p[2][0] - p[1][0]],
            [p[2][1] - p[0][1], p[0][0] - p[2][0]],
            [p[0][1] - p[1][1], p[1][0] - p[0][0]],
        ];
        let inv2a = 1.0 / (2.0 * area);
        for i in 0..3 {
            for j in 0..3 {
                let gij = (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1])
                    * inv2a
                    * inv2a
                    * area;
                s_trip.push((idx[i], idx[j], gij));
                let mij = area / if i == j { 6.0 } else { 12.0 };
                m_trip.push((idx[i], idx[j], mij));
            }
        }
    }
    (
        Csr::from_triplets(nv, nv, &s_trip),
        Csr::from_triplets(nv, nv, &m_trip),
    )
}

/// Restriction of a full-vertex matrix to interior vertices.
pub fn restrict_to_interior(tri: &Triangulation2d, full: &Csr) -> Csr {
    let mut triplets = Vec::with_capacity(full.nnz());
    for r in 0..tri.n_vertices() {
        let Some(ri) = tri.interior_index[r] else {
            continue;
        };
        for (c, v) in full.row_entries(r) {
            if let Some(ci) = tri.interior_index[c] {
                triplets.push((ri, ci, v));
            }
        }
    }
    Csr::from_triplets(tri.n_interior, tri.n_interior, &triplets)
}

/// Load vector `int f phi_v` over all vertices, by the given rule per triangle.
pub fn load_vector<F: Fn(f64, f64) -> f64>(
    tri: &Triangulation2d,
    f: &F,
    rule: TriRule,
) -> Vec<f64> {
    let pts = rule.points();
    let mut load = vec![0.0; tri.n_vertices()];
    for t in 0..tri.triangles.len() {
        let idx = tri.triangles[t];
        let p: Vec<[f64; 2]> = idx.iter().map(|&v| tri.vertices[v]).collect();
        let area = tri.triangle_area(t);
        for &(w, bary) in &pts {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            let fv = f(x, y) * w * area;
            for i in 0..3 {
                load[idx[i]] += fv * bary[i];
            }
        }
    }
    load
}

/// Integrates `f` over the square by the rule, refining each triangle into
/// `4^levels` congruent sub-triangles first.
pub fn integrate_refined<F: Fn(f64, f64) -> f64>(
    tri: &Triangulation2d,
    f: &F,
    rule: TriRule,
    levels: usize,
) -> f64 {
    let pts = rule.points();
    let mut acc = 0.0;
    for t in 0..tri.triangles.len() {
        let idx = tri.triangles[t];
        let p: Vec<[f64; 2]> = idx.iter().map(|&v| tri.vertices[v]).collect();
        acc += integrate_sub(&p, f, &pts, levels);
    }
    acc
}

fn integrate_sub<F: Fn(f64, f64) -> f64>(
    p: &[[f64; 2]],
    f: &F,
    pts: &[(f64, [f64; 3])],
    levels: usize,
) -> f64 {
    if levels == 0 {
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]));
        let mut acc = 0.0;
        for &(w, bary) in pts {
            let x = bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0];
            let y = bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1];
            acc += w * area * f(x, y);
        }
        return acc;
    }
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5];
    let m01 = mid(p[0], p[1]);
    let m12 = mid(p[1], p[2]);
    let m20 = mid(p[2], p[0]);
    integrate_sub(&[p[0], m01, m20], f, pts, levels - 1)
        + integrate_sub(&[m01, p[1], m12], f, pts, levels - 1)
        + integrate_sub(&[m20, m12, p[2]], f, pts, levels - 1)
        + integrate_sub(&[m01, m12, m20], f, pts, levels - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_unit_square_triangulation;
    use approx::assert_relative_eq;

    /// Exact integral of `x^p y^q` over the reference triangle.
    fn monomial_exact(p: u64, q: u64) -> f64 {
        fn fact(n: u64) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        fact(p) * fact(q) / fact(p + q + 2)
    }

    #[test]
    fn quadrature_rules_are_exact_to_their_degree() {
        for (rule, degree) in [
            (TriRule::Degree4, 4u64),
            (TriRule::Degree5, 5),
            (TriRule::Degree6, 6),
        ] {
            let pts = rule.points();
            let wsum: f64 = pts.iter().map(|&(w, _)| w).sum();
            assert_relative_eq!(wsum, 1.0, epsilon = 1e-13);
            for p in 0..=degree {
                for q in 0..=(degree - p) {
                    // Reference triangle (0,0), (1,0), (0,1): x = l1, y = l2.
                    let val: f64 = pts
                        .iter()
                        .map(|&(w, b)| {
                            0.5 * w * b[1].powi(p as i32) * b[2].powi(q as i32)
                        })
                        .sum();
                    assert_relative_eq!(
                        val,
                        monomial_exact(p, q),
                        epsilon = 1e-14,
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn stiffness_and_mass_basic_identities() {
        let tri = build_unit_square_triangulation(8).unwrap();
        let (s, m) = assemble_stiffness_mass(&tri);
        let ones = vec![1.0; tri.n_vertices()];
        // Constants are in the stiffness kernel and integrate to the area.
        let mut sv = vec![0.0; tri.n_vertices()];
        s.mul_vec(&ones, &mut sv);
        assert!(sv.iter().all(|v| v.abs() < 1e-12));
        assert_relative_eq!(m.quadratic_form(&ones, &ones), 1.0, max_relative = 1e-12);
        // Dirichlet energy of the interpolant of x equals 1.
        let xs: Vec<f64> = tri.vertices.iter().map(|p| p[0]).collect();
        assert_relative_eq!(s.quadratic_form(&xs, &xs), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn load_of_constant_is_vertex_measure() {
        let tri = build_unit_square_triangulation(4).unwrap();
        let load = load_vector(&tri, &|_, _| 1.0, TriRule::Degree4);
        let total: f64 = load.iter().sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn refined_integration_converges() {
        let tri = build_unit_square_triangulation(4).unwrap();
        let f = |x: f64, y: f64| (3.0 * std::f64::consts::PI * x).sin() * y;
        let exact = 2.0 / (3.0 * std::f64::consts::PI) * 0.5;
        let coarse = integrate_refined(&tri, &f, TriRule::Degree6, 0);
        let fine = integrate_refined(&tri, &f, TriRule::Degree6, 2);
        assert!((fine - exact).abs() < (coarse - exact).abs().max(1e-12));
        assert_relative_eq!(fine, exact, max_relative = 1e-9);
    }
}
