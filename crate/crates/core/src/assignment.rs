//! Maximum-weight rectangular linear sum assignment.

/// A one-to-one matching of rows to columns.
#[derive(Clone, Debug, PartialEq)]
pub struct AssignmentResult {
    /// Matched `(row, col)` pairs, sorted by row. Each row and each column
    /// appears at most once; there are exactly `min(rows, cols)` pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the selected weights, maximal over all partial matchings of
    /// size `min(rows, cols)`.
    pub total_weight: f64,
}

impl AssignmentResult {
    pub fn empty() -> Self {
        AssignmentResult { pairs: Vec::new(), total_weight: 0.0 }
    }
}

/// Solve the assignment problem on a non-negative weight matrix, maximizing
/// the total selected weight.
///
/// Rectangular matrices are handled by implicit zero padding to a square;
/// padded pairs are never reported. An empty matrix returns an empty result.
/// Among multiple optimal matchings, any may be returned.
///
/// O(n^3) shortest augmenting path (Jonker-Volgenant style potentials),
/// run on the negated matrix so the inner loop minimizes.
pub fn solve_assignment(weights: &[Vec<f64>]) -> AssignmentResult {
    let rows = weights.len();
    let cols = weights.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return AssignmentResult::empty();
    }
    debug_assert!(weights.iter().all(|r| r.len() == cols), "matrix must be rectangular");

    let n = rows.max(cols);
    let cost = |i: usize, j: usize| -> f64 {
        if i < rows && j < cols {
            -weights[i][j]
        } else {
            0.0
        }
    };

    // 1-based arrays; index 0 is the virtual column that seeds each phase.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut col_to_row = vec![0usize; n + 1]; // 0 = unmatched
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        col_to_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_to_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_to_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_to_row[j0] == 0 {
                break;
            }
        }
        // Augment along the alternating path back to the virtual column.
        loop {
            let j1 = way[j0];
            col_to_row[j0] = col_to_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut pairs = Vec::new();
    let mut total = 0.0;
    for j in 1..=n {
        let i = col_to_row[j];
        if i >= 1 && i - 1 < rows && j - 1 < cols {
            pairs.push((i - 1, j - 1));
            total += weights[i - 1][j - 1];
        }
    }
    pairs.sort_unstable();
    AssignmentResult { pairs, total_weight: total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// Exhaustive maximum over all maximal partial matchings. Test oracle,
    /// independent of the solver above.
    pub fn brute_force(weights: &[Vec<f64>]) -> f64 {
        let rows = weights.len();
        let cols = weights.first().map_or(0, |r| r.len());
        if rows == 0 || cols == 0 {
            return 0.0;
        }
        fn recurse(weights: &[Vec<f64>], row: usize, used_cols: &mut [bool], acc: f64, best: &mut f64) {
            if row == weights.len() {
                if acc > *best {
                    *best = acc;
                }
                return;
            }
            let cols = weights[0].len();
            let free: Vec<usize> = (0..cols).filter(|&c| !used_cols[c]).collect();
            if free.is_empty() {
                if acc > *best {
                    *best = acc;
                }
                return;
            }
            for c in free {
                used_cols[c] = true;
                recurse(weights, row + 1, used_cols, acc + weights[row][c], best);
                used_cols[c] = false;
            }
            // A row may stay unmatched only when there are more rows than
            // columns; maximal matchings always fill the smaller side, and
            // non-negative weights make skipping never beneficial otherwise.
            if weights.len() > cols {
                recurse(weights, row + 1, used_cols, acc, best);
            }
        }
        let mut best = f64::NEG_INFINITY;
        recurse(weights, 0, &mut vec![false; cols], 0.0, &mut best);
        best
    }

    #[test]
    fn two_by_two_diagonal() {
        let w = vec![vec![0.9, 0.2], vec![0.3, 0.8]];
        let r = solve_assignment(&w);
        assert_eq!(r.pairs, vec![(0, 0), (1, 1)]);
        assert!((r.total_weight - 1.7).abs() < 1e-12);
    }

    #[test]
    fn one_by_one() {
        let r = solve_assignment(&[vec![0.4]]);
        assert_eq!(r.pairs, vec![(0, 0)]);
        assert!((r.total_weight - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rectangular_two_by_three() {
        let w = vec![vec![0.1, 0.9, 0.0], vec![0.8, 0.2, 0.0]];
        let r = solve_assignment(&w);
        assert_eq!(r.pairs, vec![(0, 1), (1, 0)]);
        assert!((r.total_weight - 1.7).abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_is_empty_result() {
        assert_eq!(solve_assignment(&[]), AssignmentResult::empty());
        let no_cols: Vec<Vec<f64>> = vec![vec![], vec![]];
        assert_eq!(solve_assignment(&no_cols), AssignmentResult::empty());
    }

    #[test]
    fn matches_brute_force_on_random_matrices() {
        let mut rng = crate::rng::substream(17, "assignment-test");
        for _ in 0..300 {
            let rows = rng.random_range(1..=6);
            let cols = rng.random_range(1..=6);
            let w: Vec<Vec<f64>> =
                (0..rows).map(|_| (0..cols).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
            let got = solve_assignment(&w);
            let want = brute_force(&w);
            assert!(
                (got.total_weight - want).abs() < 1e-9,
                "solver {} vs brute force {} on {w:?}",
                got.total_weight,
                want
            );
            assert_eq!(got.pairs.len(), rows.min(cols));
            let sum: f64 = got.pairs.iter().map(|&(i, j)| w[i][j]).sum();
            assert!((sum - got.total_weight).abs() < 1e-12);
        }
    }

    #[test]
    fn row_permutation_permutes_result() {
        let mut rng = crate::rng::substream(5, "assignment-perm");
        for _ in 0..50 {
            let n = rng.random_range(2..=5);
            let w: Vec<Vec<f64>> =
                (0..n).map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
            let mut perm: Vec<usize> = (0..n).collect();
            // Fisher-Yates with the test rng
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| w[i].clone()).collect();
            let base = solve_assignment(&w);
            let shuffled = solve_assignment(&permuted);
            assert!((base.total_weight - shuffled.total_weight).abs() < 1e-9);
            let mut mapped: Vec<(usize, usize)> =
                shuffled.pairs.iter().map(|&(r, c)| (perm[r], c)).collect();
            mapped.sort_unstable();
            assert_eq!(mapped, base.pairs);
        }
    }

    #[test]
    fn constant_shift_preserves_argmatching() {
        let mut rng = crate::rng::substream(11, "assignment-shift");
        for _ in 0..50 {
            let n = rng.random_range(2..=5);
            let w: Vec<Vec<f64>> =
                (0..n).map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
            let c = 0.5;
            let shifted: Vec<Vec<f64>> =
                w.iter().map(|row| row.iter().map(|x| x + c).collect()).collect();
            let base = solve_assignment(&w);
            let moved = solve_assignment(&shifted);
            assert_eq!(base.pairs, moved.pairs);
            assert!((moved.total_weight - base.total_weight - n as f64 * c).abs() < 1e-9);
        }
    }
}
