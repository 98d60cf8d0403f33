//! Empirical interpolation of the degenerate diffusion weight.
//!
//! The weight `h(y; s) = y^{1-2s}` is not affine in `s`, which blocks an
//! offline/online split of the solver. Interpolating the family greedily in a
//! handful of snapshot orders `s_q` restores an affine expansion
//! `h ~ sum_q theta_q(s) y^{1-2s_q}` whose terms are pure powers, so the
//! weighted element integrals stay in closed form.
//!
//! The fractional-order range is treated in two halves. On `s <= 1/2` the
//! weight itself is bounded on `[0, y_+]` and is interpolated directly. On
//! `s > 1/2` the weight blows up at the origin, so the bounded family
//! `y * h(y; s) = y^{2-2s}` is interpolated on `[y_-, y_+]` instead and the
//! division by `y` is folded back into the expansion exponents.
//!
//! Internally the greedy runs on pivot-normalized residual basis vectors (the
//! interpolation system is then unit lower triangular and well conditioned);
//! the public coefficients are with respect to the raw snapshot powers, which
//! is what the operator assembly consumes.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::param::Subdomain;

/// Piecewise empirical interpolation model for one subdomain.
#[derive(Clone, Debug)]
pub struct EimModel {
    pub subdomain: Subdomain,
    /// Greedily selected parameter snapshots `s_1..s_Q`.
    pub s_snapshots: Vec<f64>,
    /// Interpolation points `y_1..y_Q` ("magic points").
    pub magic_points: Vec<f64>,
    /// Indices of the magic points into `y_grid`.
    pub magic_indices: Vec<usize>,
    /// Training grid in `y` (graded).
    pub y_grid: Vec<f64>,
    /// Training grid in `s`.
    pub s_grid: Vec<f64>,
    /// Unit lower-triangular interpolation matrix: `B[i][j]` is the `j`-th
    /// normalized basis function at the `i`-th magic point.
    interp_lower: DMatrix<f64>,
    /// Upper-triangular change of basis: column `j` expresses the raw
    /// snapshot `g(.; s_j)` in the normalized basis.
    snapshot_upper: DMatrix<f64>,
    /// Normalized residual basis sampled on `y_grid` (row-major per function).
    basis_grid: Vec<Vec<f64>>,
    /// Sup error over the training grids after `q` terms; entry `0` is the
    /// sup norm of the family itself.
    pub error_history: Vec<f64>,
    /// True when the greedy residual vanished before reaching `q_max`.
    pub exhausted: bool,
}

/// Value of the interpolated family: the weight itself on `D1`, the
/// `y`-premultiplied weight on `D2`.
///
/// At `y = 0` on `D1` the pointwise limit of `y^{1-2s}` is used: `0` for
/// `s < 1/2` and `1` for `s = 1/2`.
pub fn family_value(subdomain: Subdomain, y: f64, s: f64) -> f64 {
    match subdomain {
        Subdomain::D1 => {
            if y == 0.0 {
                if s == 0.5 {
                    1.0
                } else {
                    0.0
                }
            } else {
                y.powf(1.0 - 2.0 * s)
            }
        }
        Subdomain::D2 => y.powf(2.0 - 2.0 * s),
    }
}

/// Greedy construction of the interpolation model.
///
/// Each step picks the order `s` with the worst sup-norm residual over the
/// training grids, then places the next interpolation point at the residual
/// maximum in `y`.
pub fn eim_build(
    subdomain: Subdomain,
    y_grid: &[f64],
    s_grid: &[f64],
    q_max: usize,
    tol: f64,
) -> Result<EimModel> {
    if y_grid.len() < 2 || s_grid.is_empty() {
        return Err(Error::InvalidInput(
            "interpolation build needs a y grid and a nonempty s grid".into(),
        ));
    }
    if q_max == 0 || q_max > s_grid.len() {
        return Err(Error::InvalidInput(format!(
            "q_max must be in 1..={} (size of the s grid), got {q_max}",
            s_grid.len()
        )));
    }
    if subdomain == Subdomain::D2 && y_grid[0] <= 0.0 {
        return Err(Error::InvalidInput(
            "the premultiplied family on D2 requires y_- > 0".into(),
        ));
    }
    // Residual matrix, s-major. Starts as the raw family values and is
    // deflated in place as basis functions are added.
    let mut residual: Vec<Vec<f64>> = s_grid
        .par_iter()
        .map(|&s| y_grid.iter().map(|&y| family_value(subdomain, y, s)).collect())
        .collect();

    let mut s_snapshots = Vec::new();
    let mut magic_points = Vec::new();
    let mut magic_indices = Vec::new();
    let mut basis_grid: Vec<Vec<f64>> = Vec::new();
    let mut error_history = Vec::new();
    let mut exhausted = false;

    loop {
        // Locate the worst residual over the product grid.
        let (mut best_s, mut best_y, mut best_val) = (0usize, 0usize, 0.0f64);
        for (si, row) in residual.iter().enumerate() {
            for (yi, &v) in row.iter().enumerate() {
                if v.abs() > best_val {
                    best_val = v.abs();
                    best_s = si;
                    best_y = yi;
                }
            }
        }
        error_history.push(best_val);
        let q = s_snapshots.len();
        if best_val == 0.0 && q < q_max {
            // Family exhausted: every remaining residual is identically zero.
            exhausted = true;
            log::warn!("interpolation family on {subdomain} exhausted after {q} functions");
            break;
        }
        if q >= q_max || best_val <= tol {
            break;
        }

        let pivot = residual[best_s][best_y];
        let basis: Vec<f64> = residual[best_s].iter().map(|&v| v / pivot).collect();
        s_snapshots.push(s_grid[best_s]);
        magic_points.push(y_grid[best_y]);
        magic_indices.push(best_y);

        // Deflate every residual row at the new interpolation point. The
        // pivot row becomes identically zero in exact arithmetic; make that
        // exact in floating point too so exhaustion is detected cleanly.
        residual.par_iter_mut().for_each(|row| {
            let c = row[best_y];
            if c != 0.0 {
                for (r, b) in row.iter_mut().zip(&basis) {
                    *r -= c * b;
                }
                row[best_y] = 0.0;
            }
        });
        residual[best_s].iter_mut().for_each(|v| *v = 0.0);
        basis_grid.push(basis);
    }

    let q = s_snapshots.len();
    if q == 0 {
        return Err(Error::GreedyDegenerate(
            "the weight family is identically zero on the training grids".into(),
        ));
    }

    // Interpolation matrix in the normalized basis: unit lower triangular.
    let mut interp_lower = DMatrix::zeros(q, q);
    for j in 0..q {
        for i in 0..q {
            interp_lower[(i, j)] = basis_grid[j][magic_indices[i]];
        }
    }
    // Change of basis to raw snapshots: interpolate each snapshot function.
    // Coefficients of basis functions beyond the snapshot's own index are
    // mathematically zero and are stored as exact zeros.
    let mut snapshot_upper = DMatrix::zeros(q, q);
    for j in 0..q {
        let rhs: Vec<f64> = magic_indices
            .iter()
            .map(|&yi| family_value(subdomain, y_grid[yi], s_snapshots[j]))
            .collect();
        let coeffs = forward_substitute(&interp_lower, &rhs);
        for i in 0..=j {
            snapshot_upper[(i, j)] = coeffs[i];
        }
    }

    Ok(EimModel {
        subdomain,
        s_snapshots,
        magic_points,
        magic_indices,
        y_grid: y_grid.to_vec(),
        s_grid: s_grid.to_vec(),
        interp_lower,
        snapshot_upper,
        basis_grid,
        error_history,
        exhausted,
    })
}

fn forward_substitute(lower: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut acc = rhs[i];
        for j in 0..i {
            acc -= lower[(i, j)] * x[j];
        }
        x[i] = acc / lower[(i, i)];
    }
    x
}

fn backward_substitute(upper: &DMatrix<f64>, rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = rhs[i];
        for j in i + 1..n {
            acc -= upper[(i, j)] * x[j];
        }
        x[i] = acc / upper[(i, i)];
    }
    x
}

impl EimModel {
    pub fn q(&self) -> usize {
        self.s_snapshots.len()
    }

    /// Effective weight exponents `1 - 2 s_q` of the expansion terms. On `D2`
    /// these already account for the division by `y`.
    pub fn exponents(&self) -> Vec<f64> {
        self.s_snapshots.iter().map(|&s| 1.0 - 2.0 * s).collect()
    }

    /// Coefficients of the interpolant in the raw snapshot powers.
    ///
    /// At a snapshot order the coefficients are exactly a unit vector (the
    /// interpolant reproduces the snapshot), so that case is returned
    /// directly instead of round-tripping through the triangular solves.
    pub fn eval_theta(&self, s: f64) -> Result<Vec<f64>> {
        if !self.subdomain.contains(s) {
            return Err(Error::OutOfDomain {
                s,
                subdomain: self.subdomain.name(),
            });
        }
        if let Some(i) = self.s_snapshots.iter().position(|&t| t == s) {
            let mut unit = vec![0.0; self.q()];
            unit[i] = 1.0;
            return Ok(unit);
        }
        let rhs: Vec<f64> = self
            .magic_points
            .iter()
            .map(|&y| family_value(self.subdomain, y, s))
            .collect();
        let normalized = forward_substitute(&self.interp_lower, &rhs);
        Ok(backward_substitute(&self.snapshot_upper, &normalized))
    }

    /// Interpolant of the (transformed) family at arbitrary `y` values.
    pub fn reconstruct(&self, theta: &[f64], ys: &[f64]) -> Vec<f64> {
        ys.iter()
            .map(|&y| {
                self.s_snapshots
                    .iter()
                    .zip(theta)
                    .map(|(&sq, &t)| t * family_value(self.subdomain, y, sq))
                    .sum()
            })
            .collect()
    }

    /// Sup error of the interpolant over a validation product grid.
    pub fn sup_error(&self, s_points: &[f64], y_points: &[f64]) -> Result<f64> {
        let errors = s_points
            .par_iter()
            .map(|&s| {
                let theta = self.eval_theta(s)?;
                let rec = self.reconstruct(&theta, y_points);
                let mut m = 0.0f64;
                for (&y, r) in y_points.iter().zip(rec) {
                    m = m.max((family_value(self.subdomain, y, s) - r).abs());
                }
                Ok(m)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(errors.into_iter().fold(0.0, f64::max))
    }

    /// Sup error on the model's own training grids.
    pub fn training_sup_error(&self) -> Result<f64> {
        self.sup_error(&self.s_grid, &self.y_grid)
    }

    /// Positivity check of the reconstructed weight over the training grids.
    ///
    /// The reconstruction can only be certified positive where the family
    /// value dominates the interpolation error, so orders whose minimum
    /// family value (over `y > 0`) is below the recorded sup error are
    /// skipped and counted separately. A violation means the interpolated
    /// operator has lost ellipticity.
    pub fn positivity_report(&self) -> Result<PositivityReport> {
        let sup_err = *self.error_history.last().unwrap();
        let mut checked = 0usize;
        let mut skipped = 0usize;
        let mut violations = 0usize;
        let mut min_margin = f64::INFINITY;
        for &s in &self.s_grid {
            let floor = self
                .y_grid
                .iter()
                .filter(|&&y| y > 0.0)
                .map(|&y| family_value(self.subdomain, y, s))
                .fold(f64::INFINITY, f64::min);
            if floor <= sup_err {
                skipped += 1;
                continue;
            }
            checked += 1;
            let theta = self.eval_theta(s)?;
            let rec = self.reconstruct(&theta, &self.y_grid);
            let mut rec_min = f64::INFINITY;
            for (&y, &r) in self.y_grid.iter().zip(&rec) {
                if y > 0.0 {
                    rec_min = rec_min.min(r);
                }
            }
            if rec_min <= 0.0 {
                violations += 1;
            }
            min_margin = min_margin.min(rec_min);
        }
        Ok(PositivityReport {
            checked,
            skipped,
            violations,
            min_margin,
        })
    }

    /// Raw internal tables, used by the container codec.
    pub(crate) fn parts(
        &self,
    ) -> (
        &DMatrix<f64>,
        &DMatrix<f64>,
        &Vec<Vec<f64>>,
    ) {
        (&self.interp_lower, &self.snapshot_upper, &self.basis_grid)
    }

    pub(crate) fn from_parts(
        subdomain: Subdomain,
        s_snapshots: Vec<f64>,
        magic_points: Vec<f64>,
        magic_indices: Vec<usize>,
        y_grid: Vec<f64>,
        s_grid: Vec<f64>,
        interp_lower: DMatrix<f64>,
        snapshot_upper: DMatrix<f64>,
        basis_grid: Vec<Vec<f64>>,
        error_history: Vec<f64>,
        exhausted: bool,
    ) -> Self {
        EimModel {
            subdomain,
            s_snapshots,
            magic_points,
            magic_indices,
            y_grid,
            s_grid,
            interp_lower,
            snapshot_upper,
            basis_grid,
            error_history,
            exhausted,
        }
    }
}

/// Outcome of the ellipticity (positivity) scan of the reconstructed weight.
#[derive(Clone, Copy, Debug)]
pub struct PositivityReport {
    /// Orders where the family floor dominates the interpolation error.
    pub checked: usize,
    /// Orders skipped because the family itself dips below the sup error.
    pub skipped: usize,
    pub violations: usize,
    /// Smallest reconstructed value among the checked orders.
    pub min_margin: f64,
}

/// Grids used to train the interpolation: a graded `y` grid (16x finer than
/// the finite element partition by default) and an equispaced `s` grid on the
/// subdomain.
pub fn training_grids(
    subdomain: Subdomain,
    m_fe: usize,
    refine: usize,
    y_plus: f64,
    s_points: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let gamma = subdomain.default_grading();
    let graded = crate::mesh::build_graded_partition(m_fe * refine, gamma, y_plus)?;
    let y_grid = match subdomain {
        Subdomain::D1 => graded.nodes,
        // Truncate below at the first nonzero node.
        Subdomain::D2 => graded.nodes[1..].to_vec(),
    };
    let (lo, hi) = subdomain.s_range();
    Ok((y_grid, crate::param::equispaced(lo, hi, s_points)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::equispaced;
    use approx::assert_relative_eq;

    fn small_model(subdomain: Subdomain) -> EimModel {
        let (y, s) = training_grids(subdomain, 20, 8, 2.233, 65).unwrap();
        eim_build(subdomain, &y, &s, 20, 1e-12).unwrap()
    }

    #[test]
    fn cardinality_is_exact() {
        for sub in [Subdomain::D1, Subdomain::D2] {
            let model = small_model(sub);
            for (i, &si) in model.s_snapshots.iter().enumerate() {
                let theta = model.eval_theta(si).unwrap();
                for (j, &t) in theta.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (t - expected).abs() <= 1e-13,
                        "theta_{j}(s_{i}) = {t} on {sub}"
                    );
                }
            }
        }
    }

    #[test]
    fn single_snapshot_family_exhausts_immediately() {
        let y = equispaced(0.0, 2.233, 101);
        let model = eim_build(Subdomain::D1, &y, &[0.3], 1, 0.0).unwrap();
        assert_eq!(model.q(), 1);
        assert_eq!(*model.error_history.last().unwrap(), 0.0);
    }

    #[test]
    fn reconstruction_exact_at_magic_points() {
        let model = small_model(Subdomain::D2);
        let probe = 0.5 * (model.s_snapshots[0] + model.s_snapshots[1]);
        let theta = model.eval_theta(probe).unwrap();
        let rec = model.reconstruct(&theta, &model.magic_points);
        for (&y, r) in model.magic_points.iter().zip(rec) {
            let g = family_value(Subdomain::D2, y, probe);
            assert!((g - r).abs() <= 1e-13 * g.abs().max(1.0));
        }
    }

    #[test]
    fn training_points_bounded_by_final_error() {
        for sub in [Subdomain::D1, Subdomain::D2] {
            let model = small_model(sub);
            let bound = *model.error_history.last().unwrap() * (1.0 + 1e-9);
            // Grid points nearest to snapshot midpoints are training points,
            // so the recorded history bounds their residual by construction.
            for pair in model.s_snapshots.windows(2) {
                let mid = 0.5 * (pair[0] + pair[1]);
                let s = model
                    .s_grid
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        (a - mid).abs().partial_cmp(&(b - mid).abs()).unwrap()
                    })
                    .unwrap();
                let theta = model.eval_theta(s).unwrap();
                let rec = model.reconstruct(&theta, &model.y_grid);
                let err = model
                    .y_grid
                    .iter()
                    .zip(rec)
                    .map(|(&y, r)| (family_value(sub, y, s) - r).abs())
                    .fold(0.0f64, f64::max);
                assert!(err <= bound, "residual {err:.3e} > bound {bound:.3e}");
            }
        }
    }

    #[test]
    fn error_history_monotone_and_small() {
        for sub in [Subdomain::D1, Subdomain::D2] {
            let model = small_model(sub);
            for w in model.error_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            assert!(*model.error_history.last().unwrap() < 1e-8);
        }
    }

    #[test]
    fn nested_builds_share_prefix() {
        let (y, s) = training_grids(Subdomain::D1, 16, 8, 2.233, 65).unwrap();
        let small = eim_build(Subdomain::D1, &y, &s, 6, 0.0).unwrap();
        let large = eim_build(Subdomain::D1, &y, &s, 7, 0.0).unwrap();
        assert_eq!(small.s_snapshots, large.s_snapshots[..6]);
        assert_eq!(small.magic_points, large.magic_points[..6]);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(small.interp_lower[(i, j)], large.interp_lower[(i, j)]);
            }
        }
    }

    #[test]
    fn rejects_out_of_domain_evaluation() {
        let model = small_model(Subdomain::D1);
        assert!(model.eval_theta(0.7).is_err());
        assert!(model.eval_theta(0.001).is_err());
    }

    #[test]
    fn interp_matrix_diagonally_dominant_columns() {
        let model = small_model(Subdomain::D1);
        let q = model.q();
        for j in 0..q {
            assert_relative_eq!(model.interp_lower[(j, j)], 1.0);
            for i in j + 1..q {
                assert!(model.interp_lower[(i, j)].abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn positivity_of_reconstruction() {
        for sub in [Subdomain::D1, Subdomain::D2] {
            let model = small_model(sub);
            let report = model.positivity_report().unwrap();
            assert_eq!(report.violations, 0, "{report:?} on {sub}");
            assert!(report.checked > 0);
            assert!(report.min_margin > 0.0);
        }
    }
}
