//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use ndarray::Array2;

/// Every partial matching of an `m × n` bipartite graph, each as a sorted
/// list of `(row, col)` pairs. Includes the empty matching.
pub fn all_matchings(m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(
        row: usize,
        m: usize,
        n: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if row == m {
            out.push(cur.clone());
            return;
        }
        go(row + 1, m, n, used, cur, out);
        for col in 0..n {
            if !used[col] {
                used[col] = true;
                cur.push((row, col));
                go(row + 1, m, n, used, cur, out);
                cur.pop();
                used[col] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, m, n, &mut vec![false; n], &mut Vec::new(), &mut out);
    out
}

/// Total weight summed in `(row, col)` order.
pub fn weight(w: &Array2<f64>, links: &[(usize, usize)]) -> f64 {
    links.iter().map(|&(i, j)| w[[i, j]]).sum()
}

pub fn brute_force_max_weight(w: &Array2<f64>) -> f64 {
    let (m, n) = w.dim();
    all_matchings(m, n)
        .iter()
        .map(|l| weight(w, l))
        .fold(0.0, f64::max)
}

/// Lexicographically smallest optimal matching using only positive cells.
/// Exact comparison, so only meaningful for exactly representable weights.
pub fn brute_force_lex_min(w: &Array2<f64>) -> Vec<(usize, usize)> {
    let (m, n) = w.dim();
    let candidates: Vec<Vec<(usize, usize)>> = all_matchings(m, n)
        .into_iter()
        .filter(|l| l.iter().all(|&(i, j)| w[[i, j]] > 0.0))
        .collect();
    let best = candidates.iter().map(|l| weight(w, l)).fold(0.0, f64::max);
    candidates
        .into_iter()
        .filter(|l| weight(w, l) == best)
        .min()
        .unwrap()
}

/// Row/column argmax by exhaustive scan, smallest index on ties.
pub fn naive_mutual(w: &Array2<f64>) -> Vec<(usize, usize)> {
    let (m, n) = w.dim();
    let mut out = Vec::new();
    for i in 0..m {
        let mut j = 0;
        for c in 1..n {
            if w[[i, c]] > w[[i, j]] {
                j = c;
            }
        }
        let mut best_i = 0;
        for r in 1..m {
            if w[[r, j]] > w[[best_i, j]] {
                best_i = r;
            }
        }
        if best_i == i {
            out.push((i, j));
        }
    }
    out
}

#[test]
fn enumeration_counts() {
    // partial matchings of K_{2,2}: 1 + 4 + 2
    assert_eq!(all_matchings(2, 2).len(), 7);
    // K_{3,3}: 1 + 9 + 18 + 6
    assert_eq!(all_matchings(3, 3).len(), 34);
    assert_eq!(all_matchings(0, 4).len(), 1);
}
