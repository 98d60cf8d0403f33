//! Meshes: the structured triangulation of the unit square, the graded
//! partition of the extension interval `[0, y_+]`, and their tensor product.

use crate::error::{Error, Result};

/// Graded 1D partition of `[0, y_plus]` with nodes `y_m = y_plus (m/M)^gamma`.
///
/// Large `gamma` concentrates nodes near `y = 0` where the diffusion weight
/// degenerates.
#[derive(Clone, Debug)]
pub struct GradedInterval {
    pub m: usize,
    pub gamma: f64,
    pub y_plus: f64,
    pub nodes: Vec<f64>,
}

/// Builds the graded partition. Rejects `M = 0` and non-finite or
/// non-positive `gamma`, `y_plus`.
pub fn build_graded_partition(m: usize, gamma: f64, y_plus: f64) -> Result<GradedInterval> {
    if m == 0 {
        return Err(Error::InvalidInput("graded partition needs M >= 1".into()));
    }
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "grading exponent must be finite and positive, got {gamma}"
        )));
    }
    if !y_plus.is_finite() || y_plus <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "truncation height must be finite and positive, got {y_plus}"
        )));
    }
    let nodes = (0..=m)
        .map(|i| {
            if i == m {
                y_plus
            } else {
                y_plus * (i as f64 / m as f64).powf(gamma)
            }
        })
        .collect();
    Ok(GradedInterval {
        m,
        gamma,
        y_plus,
        nodes,
    })
}

/// Conforming triangulation of the unit square: an `n x n` grid of cells,
/// each split along the same diagonal.
#[derive(Clone, Debug)]
pub struct Triangulation2d {
    pub n: usize,
    /// Vertex coordinates, index `j * (n + 1) + i` for grid position `(i, j)`.
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_mask: Vec<bool>,
    /// Map from vertex index to interior (free) index, `None` on the boundary.
    pub interior_index: Vec<Option<usize>>,
    pub n_interior: usize,
}

impl Triangulation2d {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn grid_spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]))
    }

    /// Interior vertex indices in free-dof order.
    pub fn interior_vertices(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.n_interior];
        for (v, idx) in self.interior_index.iter().enumerate() {
            if let Some(k) = idx {
                out[*k] = v;
            }
        }
        out
    }

    /// Scatters a vector over interior vertices into a full nodal field with
    /// zeros on the boundary.
    pub fn scatter_interior(&self, interior: &[f64]) -> Vec<f64> {
        debug_assert_eq!(interior.len(), self.n_interior);
        let mut full = vec![0.0; self.n_vertices()];
        for (v, idx) in self.interior_index.iter().enumerate() {
            if let Some(k) = idx {
                full[v] = interior[*k];
            }
        }
        full
    }

    pub fn restrict_interior(&self, full: &[f64]) -> Vec<f64> {
        debug_assert_eq!(full.len(), self.n_vertices());
        let mut out = vec![0.0; self.n_interior];
        for (v, idx) in self.interior_index.iter().enumerate() {
            if let Some(k) = idx {
                out[*k] = full[v];
            }
        }
        out
    }
}

/// Builds the structured triangulation: `(n+1)^2` vertices, `2 n^2` triangles,
/// every cell split along its lower-left to upper-right diagonal.
pub fn build_unit_square_triangulation(n: usize) -> Result<Triangulation2d> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "triangulation needs n >= 2, got {n}"
        )));
    }
    let np = n + 1;
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(np * np);
    let mut boundary_mask = Vec::with_capacity(np * np);
    for j in 0..np {
        for i in 0..np {
            let x = if i == n { 1.0 } else { i as f64 * h };
            let y = if j == n { 1.0 } else { j as f64 * h };
            vertices.push([x, y]);
            boundary_mask.push(i == 0 || i == n || j == 0 || j == n);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let a = j * np + i;
            let b = j * np + i + 1;
            let c = (j + 1) * np + i + 1;
            let d = (j + 1) * np + i;
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut interior_index = vec![None; np * np];
    let mut n_interior = 0;
    for (v, &on_boundary) in boundary_mask.iter().enumerate() {
        if !on_boundary {
            interior_index[v] = Some(n_interior);
            n_interior += 1;
        }
    }
    Ok(Triangulation2d {
        n,
        vertices,
        triangles,
        boundary_mask,
        interior_index,
        n_interior,
    })
}

/// Tensor-product mesh of the truncated cylinder `Omega x [0, y_plus]`.
///
/// Degrees of freedom are blocked by level: the global index of the
/// free dof at interior vertex `v` (free index `k`) and level `m` is
/// `m * n_interior + k`. Levels `0..M-1` are free (the bottom `y = 0`
/// carries the trace), level `M` and the lateral boundary are constrained
/// to zero.
#[derive(Clone, Debug)]
pub struct CylinderMesh {
    pub tri: Triangulation2d,
    pub interval: GradedInterval,
}

impl CylinderMesh {
    pub fn total_dofs(&self) -> usize {
        self.tri.n_vertices() * (self.interval.m + 1)
    }

    pub fn free_dofs(&self) -> usize {
        self.tri.n_interior * self.interval.m
    }

    /// Number of free levels in the extension direction.
    pub fn n_levels(&self) -> usize {
        self.interval.m
    }

    pub fn is_free(&self, vertex: usize, level: usize) -> bool {
        level < self.interval.m && !self.tri.boundary_mask[vertex]
    }

    /// Global free index of `(vertex, level)`; `None` when constrained.
    pub fn free_index(&self, vertex: usize, level: usize) -> Option<usize> {
        if level >= self.interval.m {
            return None;
        }
        self.tri.interior_index[vertex]
            .map(|k| level * self.tri.n_interior + k)
    }

    /// The bottom-level (`y = 0`) slice of a free-dof vector as a full 2D
    /// nodal field, zero on the boundary.
    pub fn bottom_trace(&self, free: &[f64]) -> Vec<f64> {
        debug_assert_eq!(free.len(), self.free_dofs());
        self.tri.scatter_interior(&free[..self.tri.n_interior])
    }
}

pub fn build_cylinder_mesh(tri: Triangulation2d, interval: GradedInterval) -> CylinderMesh {
    CylinderMesh { tri, interval }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn graded_partition_uniform_when_gamma_one() {
        let g = build_graded_partition(4, 1.0, 1.0).unwrap();
        assert_eq!(g.nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn graded_partition_quadratic() {
        let g = build_graded_partition(4, 2.0, 1.0).unwrap();
        assert_eq!(g.nodes, vec![0.0, 1.0 / 16.0, 0.25, 9.0 / 16.0, 1.0]);
    }

    #[test]
    fn graded_partition_production_scale_first_node() {
        // EIM-scale grid: 16 x 158 subintervals on [0, 2.233].
        let g = build_graded_partition(2528, 2.0, 2.233).unwrap();
        assert_relative_eq!(g.nodes[1], 3.494e-7, max_relative = 1e-3);
        let g6 = build_graded_partition(2528, 6.0, 2.233).unwrap();
        assert_relative_eq!(g6.nodes[1], 8.5e-21, max_relative = 1e-2);
    }

    #[test]
    fn graded_partition_rejects_bad_input() {
        assert!(build_graded_partition(0, 2.0, 1.0).is_err());
        assert!(build_graded_partition(4, f64::NAN, 1.0).is_err());
        assert!(build_graded_partition(4, 2.0, f64::INFINITY).is_err());
        assert!(build_graded_partition(4, -1.0, 1.0).is_err());
    }

    #[test]
    fn triangulation_counts() {
        let t = build_unit_square_triangulation(2).unwrap();
        assert_eq!(t.triangles.len(), 8);
        assert_eq!(t.n_vertices(), 9);
        assert_eq!(t.n_interior, 1);

        let t = build_unit_square_triangulation(50).unwrap();
        assert_eq!(t.triangles.len(), 5000);
        assert_eq!(t.n_interior, 2401);
        let n_boundary = t.boundary_mask.iter().filter(|&&b| b).count();
        assert_eq!(n_boundary, 4 * 50);
        assert!(build_unit_square_triangulation(1).is_err());
    }

    #[test]
    fn triangulation_positive_areas_cover_square() {
        let t = build_unit_square_triangulation(7).unwrap();
        let mut total = 0.0;
        for k in 0..t.triangles.len() {
            let a = t.triangle_area(k);
            assert!(a > 0.0);
            total += a;
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cylinder_dof_counts_production_scale() {
        let tri = build_unit_square_triangulation(50).unwrap();
        let iv = build_graded_partition(158, 6.0, 2.233).unwrap();
        let mesh = build_cylinder_mesh(tri, iv);
        assert_eq!(mesh.total_dofs(), 413_559);
        assert_eq!(mesh.free_dofs(), 2401 * 158);
    }

    #[test]
    fn cylinder_dof_counts_tiny() {
        let tri = build_unit_square_triangulation(2).unwrap();
        let iv = build_graded_partition(1, 2.0, 1.0).unwrap();
        let mesh = build_cylinder_mesh(tri, iv);
        assert_eq!(mesh.total_dofs(), 18);
        assert_eq!(mesh.free_dofs(), 1);
    }

    #[test]
    fn free_dof_bookkeeping() {
        let tri = build_unit_square_triangulation(4).unwrap();
        let iv = build_graded_partition(3, 2.0, 1.5).unwrap();
        let mesh = build_cylinder_mesh(tri, iv);
        let mut seen = vec![false; mesh.free_dofs()];
        for level in 0..=mesh.interval.m {
            for v in 0..mesh.tri.n_vertices() {
                match mesh.free_index(v, level) {
                    Some(g) => {
                        assert!(mesh.is_free(v, level));
                        assert!(!mesh.tri.boundary_mask[v] && level < mesh.interval.m);
                        assert!(!seen[g]);
                        seen[g] = true;
                    }
                    None => assert!(!mesh.is_free(v, level)),
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    proptest! {
        #[test]
        fn graded_nodes_increase(m in 1usize..200, gamma in 0.2f64..8.0, y_plus in 0.1f64..5.0) {
            let g = build_graded_partition(m, gamma, y_plus).unwrap();
            prop_assert_eq!(g.nodes[0], 0.0);
            prop_assert_eq!(g.nodes[m], y_plus);
            for w in g.nodes.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
        }

        #[test]
        fn graded_gaps_monotone_for_gamma_at_least_one(m in 2usize..200, gamma in 1.0f64..8.0) {
            let g = build_graded_partition(m, gamma, 2.233).unwrap();
            let gaps: Vec<f64> = g.nodes.windows(2).map(|w| w[1] - w[0]).collect();
            for w in gaps.windows(2) {
                prop_assert!(w[1] >= w[0] * (1.0 - 1e-12));
            }
        }

        #[test]
        fn triangulation_area_property(n in 2usize..30) {
            let t = build_unit_square_triangulation(n).unwrap();
            let total: f64 = (0..t.triangles.len()).map(|k| t.triangle_area(k)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            prop_assert_eq!(t.n_interior, (n - 1) * (n - 1));
        }
    }
}
