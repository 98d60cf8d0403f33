//! Dense two-phase simplex for the small stability linear programs.
//!
//! Problems have the shape: minimize `c^T x` subject to box bounds
//! `l <= x <= u` and inequality rows `A x >= b`. Dimensions stay tiny (tens
//! of variables and rows), so a full-tableau method with Bland's rule is
//! adequate and deterministic.

use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

/// Minimizes `c^T x` over `l <= x <= u`, `rows[k] . x >= rhs[k]`.
pub fn solve_box_lp(
    c: &[f64],
    lower: &[f64],
    upper: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
) -> Result<LpSolution> {
    let q = c.len();
    assert_eq!(lower.len(), q);
    assert_eq!(upper.len(), q);
    assert_eq!(rows.len(), rhs.len());
    for (l, u) in lower.iter().zip(upper) {
        if l > u {
            return Err(Error::LpInfeasible);
        }
    }
    let k = rows.len();
    // Shifted variables x' = x - l >= 0 with x' <= u - l:
    //   x'_q + w_q = u_q - l_q           (q rows, slack w basic)
    //   rows . x' - t = rhs - rows . l   (k rows, surplus t)
    let n_structural = q; // x'
    let n_slack = q; // w
    let n_surplus = k; // t
    let m = q + k;
    let mut n = n_structural + n_slack + n_surplus;

    let mut a = vec![vec![0.0; n]; m];
    let mut b = vec![0.0; m];
    for i in 0..q {
        a[i][i] = 1.0;
        a[i][n_structural + i] = 1.0;
        b[i] = upper[i] - lower[i];
    }
    for i in 0..k {
        let mut shifted = rhs[i];
        for (j, coeff) in rows[i].iter().enumerate() {
            a[q + i][j] = *coeff;
            shifted -= coeff * lower[j];
        }
        a[q + i][n_structural + n_slack + i] = -1.0;
        b[q + i] = shifted;
        if b[q + i] < 0.0 {
            for v in a[q + i].iter_mut() {
                *v = -*v;
            }
            b[q + i] = -b[q + i];
        }
    }

    // Basis: slacks for the box rows; artificials for constraint rows whose
    // surplus column has the wrong sign after normalization.
    let mut basis = Vec::with_capacity(m);
    let mut artificial = Vec::new();
    for i in 0..q {
        basis.push(n_structural + i);
    }
    for i in 0..k {
        let t_col = n_structural + n_slack + i;
        if a[q + i][t_col] > 0.5 {
            basis.push(t_col);
        } else {
            let col = n + artificial.len();
            artificial.push(col);
            basis.push(col);
        }
    }
    if !artificial.is_empty() {
        for (i, row) in a.iter_mut().enumerate() {
            row.resize(n + artificial.len(), 0.0);
            if basis[i] >= n {
                row[basis[i]] = 1.0;
            }
        }
        n += artificial.len();
        let mut phase1 = vec![0.0; n];
        for &col in &artificial {
            phase1[col] = 1.0;
        }
        let value = run_simplex(&mut a, &mut b, &mut basis, &phase1, n)?;
        if value > FEAS_TOL {
            return Err(Error::LpInfeasible);
        }
        // Pivot any artificial still basic (at zero level) out if possible.
        for i in 0..m {
            if basis[i] >= n_structural + n_slack + n_surplus {
                if let Some(j) = (0..n_structural + n_slack + n_surplus)
                    .find(|&j| a[i][j].abs() > PIVOT_TOL)
                {
                    pivot(&mut a, &mut b, &mut basis, i, j);
                }
            }
        }
    }

    let mut costs = vec![0.0; n];
    costs[..q].copy_from_slice(c);
    let shift: f64 = c.iter().zip(lower).map(|(c, l)| c * l).sum();
    // Artificial columns (beyond the structural/slack/surplus block) must
    // never re-enter in phase 2.
    let n_eligible = n_structural + n_slack + n_surplus;
    let value = run_simplex(&mut a, &mut b, &mut basis, &costs, n_eligible)?;

    let mut x = lower.to_vec();
    for (i, &col) in basis.iter().enumerate() {
        if col < q {
            x[col] = lower[col] + b[i];
        }
    }
    Ok(LpSolution {
        x,
        value: value + shift,
    })
}

/// Runs the simplex on the current tableau with Bland's anti-cycling rule;
/// returns the optimal objective value. Only columns below `n_eligible` may
/// enter the basis.
fn run_simplex(
    a: &mut [Vec<f64>],
    b: &mut [f64],
    basis: &mut [usize],
    costs: &[f64],
    n_eligible: usize,
) -> Result<f64> {
    let m = a.len();
    let max_pivots = 200 * (m + costs.len());
    for _ in 0..max_pivots {
        // Reduced costs d_j = c_j - c_B^T a_j.
        let mut entering = None;
        for j in 0..n_eligible {
            if basis.contains(&j) {
                continue;
            }
            let mut d = costs[j];
            for i in 0..m {
                let cb = costs[basis[i]];
                if cb != 0.0 {
                    d -= cb * a[i][j];
                }
            }
            if d < -FEAS_TOL {
                entering = Some(j);
                break; // Bland: smallest index
            }
        }
        let Some(j) = entering else {
            let value = (0..m).map(|i| costs[basis[i]] * b[i]).sum();
            return Ok(value);
        };
        // Ratio test, ties broken by smallest basic variable index.
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            if a[i][j] > PIVOT_TOL {
                let ratio = b[i] / a[i][j];
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12
                            || (ratio < lr + 1e-12 && basis[i] < basis[li])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leaving else {
            return Err(Error::LpInfeasible); // unbounded below: cannot occur with the box
        };
        pivot(a, b, basis, i, j);
    }
    Err(Error::LpInfeasible)
}

fn pivot(a: &mut [Vec<f64>], b: &mut [f64], basis: &mut [usize], row: usize, col: usize) {
    let m = a.len();
    let p = a[row][col];
    for v in a[row].iter_mut() {
        *v /= p;
    }
    b[row] /= p;
    for i in 0..m {
        if i != row {
            let f = a[i][col];
            if f != 0.0 {
                for j in 0..a[i].len() {
                    let upd = a[row][j];
                    a[i][j] -= f * upd;
                }
                b[i] -= f * b[row];
            }
        }
    }
    basis[row] = col;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unconstrained_box_picks_bound_corners() {
        // min x0 - 2 x1 over [0,1]^2: x = (0, 1), value -2.
        let sol = solve_box_lp(&[1.0, -2.0], &[0.0, 0.0], &[1.0, 1.0], &[], &[]).unwrap();
        assert!((sol.value + 2.0).abs() < 1e-9);
        assert!((sol.x[0]).abs() < 1e-9 && (sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_constraint_binds() {
        // min x0 + x1 over [0,2]^2 with x0 + 2 x1 >= 2.
        let sol = solve_box_lp(
            &[1.0, 1.0],
            &[0.0, 0.0],
            &[2.0, 2.0],
            &[vec![1.0, 2.0]],
            &[2.0],
        )
        .unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9, "value {}", sol.value);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn negative_costs_and_shifted_box() {
        // min -x over [3, 5] with no rows: x = 5.
        let sol = solve_box_lp(&[-1.0], &[3.0], &[5.0], &[], &[]).unwrap();
        assert!((sol.value + 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // x in [0,1], constraint x >= 2.
        let r = solve_box_lp(&[1.0], &[0.0], &[1.0], &[vec![1.0]], &[2.0]);
        assert!(matches!(r, Err(Error::LpInfeasible)));
    }

    #[test]
    fn degenerate_equal_bounds() {
        let sol = solve_box_lp(
            &[1.0, -1.0],
            &[0.5, 0.5],
            &[0.5, 1.5],
            &[vec![1.0, 1.0]],
            &[1.5],
        )
        .unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-9);
        assert!((sol.value - (0.5 - 1.5)).abs() < 1e-9);
    }

    /// Brute-force oracle: enumerate candidate active sets (vertices of the
    /// polytope) for tiny problems.
    fn brute_force(
        c: &[f64],
        lower: &[f64],
        upper: &[f64],
        rows: &[Vec<f64>],
        rhs: &[f64],
    ) -> Option<f64> {
        let q = c.len();
        // Constraints as a list: x_i >= l_i, -x_i >= -u_i, rows >= rhs.
        let mut normals: Vec<Vec<f64>> = Vec::new();
        let mut offsets: Vec<f64> = Vec::new();
        for i in 0..q {
            let mut e = vec![0.0; q];
            e[i] = 1.0;
            normals.push(e.clone());
            offsets.push(lower[i]);
            for v in e.iter_mut() {
                *v = -*v;
            }
            normals.push(e);
            offsets.push(-upper[i]);
        }
        for (r, &b) in rows.iter().zip(rhs) {
            normals.push(r.clone());
            offsets.push(b);
        }
        let total = normals.len();
        let feasible = |x: &[f64]| {
            normals
                .iter()
                .zip(&offsets)
                .all(|(n, &o)| n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() >= o - 1e-7)
        };
        let mut best: Option<f64> = None;
        let mut idx = vec![0usize; q];
        // All q-subsets of constraints.
        fn subsets(total: usize, k: usize, start: usize, idx: &mut Vec<usize>, pos: usize, f: &mut impl FnMut(&[usize])) {
            if pos == k {
                f(&idx[..k]);
                return;
            }
            for i in start..total {
                idx[pos] = i;
                subsets(total, k, i + 1, idx, pos + 1, f);
            }
        }
        let mut visit = |subset: &[usize]| {
            let mut m = nalgebra::DMatrix::zeros(q, q);
            let mut b = nalgebra::DVector::zeros(q);
            for (r, &ci) in subset.iter().enumerate() {
                for j in 0..q {
                    m[(r, j)] = normals[ci][j];
                }
                b[r] = offsets[ci];
            }
            if let Some(sol) = m.lu().solve(&b) {
                let x: Vec<f64> = sol.iter().copied().collect();
                if x.iter().all(|v| v.is_finite()) && feasible(&x) {
                    let value: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                    best = Some(best.map_or(value, |b: f64| b.min(value)));
                }
            }
        };
        subsets(total, q, 0, &mut idx, 0, &mut visit);
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_vertex_enumeration(
            c in proptest::collection::vec(-3.0f64..3.0, 3),
            widths in proptest::collection::vec(0.1f64..2.0, 3),
            lows in proptest::collection::vec(-1.0f64..1.0, 3),
            row in proptest::collection::vec(-2.0f64..2.0, 3),
            margin in -0.5f64..0.5,
        ) {
            let lower = lows.clone();
            let upper: Vec<f64> = lows.iter().zip(&widths).map(|(l, w)| l + w).collect();
            // Pick an rhs that keeps the problem feasible: value of the row
            // at the box midpoint plus a margin.
            let mid: Vec<f64> = lower.iter().zip(&upper).map(|(l, u)| 0.5 * (l + u)).collect();
            let rhs = row.iter().zip(&mid).map(|(a, b)| a * b).sum::<f64>() + margin;
            let result = solve_box_lp(&c, &lower, &upper, &[row.clone()], &[rhs]);
            let oracle = brute_force(&c, &lower, &upper, &[row.clone()], &[rhs]);
            match (result, oracle) {
                (Ok(sol), Some(best)) => {
                    prop_assert!((sol.value - best).abs() <= 1e-6 * (1.0 + best.abs()),
                        "lp {} vs oracle {}", sol.value, best);
                    // Feasibility of the returned point.
                    for i in 0..3 {
                        prop_assert!(sol.x[i] >= lower[i] - 1e-7 && sol.x[i] <= upper[i] + 1e-7);
                    }
                    let rv: f64 = row.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
                    prop_assert!(rv >= rhs - 1e-7);
                }
                (Err(_), None) => {}
                (Ok(sol), None) => prop_assert!(false, "lp found {} but oracle infeasible", sol.value),
                (Err(e), Some(best)) => prop_assert!(false, "lp {e} but oracle {best}"),
            }
        }
    }
}
