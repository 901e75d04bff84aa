//! Exact maximum-weight bipartite matching.
//!
//! Solved as a square assignment problem (Hungarian method with
//! potentials, O(n³)) over a zero-padded matrix: pairing a row with a
//! padding column, or through a zero-weight cell, means "unmatched".
//! Among optimal matchings the lexicographically smallest link set is
//! selected by fixing links greedily in `(row, col)` order and re-solving
//! the residual problem for each candidate.

use ndarray::{Array2, ArrayView2};

/// Relative tolerance used when comparing totals of different matchings.
const TIE_TOLERANCE: f64 = 1e-12;

/// Returns the pairs `(row, col)` of a maximum-weight matching, sorted.
///
/// Cells with weight `<= 0` are never matched: they cannot raise the
/// total. Among optimal matchings, the one whose sorted pair list is
/// lexicographically smallest is returned.
pub fn max_weight_matching(weights: ArrayView2<f64>) -> Vec<(usize, usize)> {
    let (m, n) = weights.dim();
    if m == 0 || n == 0 {
        return Vec::new();
    }
    let best = assignment_value(weights, &vec![true; m], &vec![true; n]);
    let tol = TIE_TOLERANCE * best.max(1.0);

    // Upper bound on what each row can still contribute.
    let row_max: Vec<f64> = weights
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().fold(0.0, f64::max))
        .collect();

    let mut row_free = vec![true; m];
    let mut col_free = vec![true; n];
    let mut fixed_weight = 0.0;
    let mut links = Vec::new();

    for i in 0..m {
        row_free[i] = false;
        let rest_bound: f64 = (i + 1..m).map(|r| row_max[r]).sum();
        let mut chosen = None;
        for j in 0..n {
            let w = weights[[i, j]];
            if !col_free[j] || w <= 0.0 {
                continue;
            }
            if fixed_weight + w + rest_bound < best - tol {
                continue;
            }
            col_free[j] = false;
            let total = fixed_weight + w + assignment_value(weights, &row_free, &col_free);
            if total >= best - tol {
                chosen = Some(j);
                break;
            }
            col_free[j] = true;
        }
        if let Some(j) = chosen {
            fixed_weight += weights[[i, j]];
            links.push((i, j));
        }
    }
    links
}

/// Maximum total weight achievable using only free rows and columns.
fn assignment_value(weights: ArrayView2<f64>, row_free: &[bool], col_free: &[bool]) -> f64 {
    let rows: Vec<usize> = (0..row_free.len()).filter(|&i| row_free[i]).collect();
    let cols: Vec<usize> = (0..col_free.len()).filter(|&j| col_free[j]).collect();
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    let size = rows.len().max(cols.len());
    let mut cost = Array2::<f64>::zeros((size, size));
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            cost[[a, b]] = -weights[[i, j]].max(0.0);
        }
    }
    let assignment = hungarian(cost.view());
    // Summed in row order so equal matchings always give identical totals.
    assignment
        .iter()
        .enumerate()
        .filter(|&(a, &b)| a < rows.len() && b < cols.len())
        .map(|(a, &b)| weights[[rows[a], cols[b]]].max(0.0))
        .sum()
}

/// Minimum-cost perfect assignment on a square matrix; `result[row] = col`.
fn hungarian(cost: ArrayView2<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
