//! Maximum-weight assignment on a rectangular, non-negative weight matrix.
//!
//! Shortest augmenting path Hungarian method with row/column potentials,
//! `O(n^2 m)` for an `n x m` matrix with `n <= m`. The matrix is transposed
//! internally when it has more rows than columns.

/// Returns, for each row, the column it is assigned to. Rows are left
/// unassigned only when there are more rows than columns or their best
/// assignment has weight zero. All weights must be non-negative.
pub fn max_weight_assignment(weights: &[Vec<i64>]) -> (i64, Vec<Option<usize>>) {
    let rows = weights.len();
    if rows == 0 {
        return (0, Vec::new());
    }
    let cols = weights[0].len();
    if cols == 0 {
        return (0, vec![None; rows]);
    }
    debug_assert!(weights.iter().all(|r| r.len() == cols));
    debug_assert!(weights.iter().flatten().all(|&w| w >= 0));

    let mut assign = vec![None; rows];
    if rows <= cols {
        let m = hungarian_min(rows, cols, |i, j| -weights[i][j]);
        for (i, j) in m.into_iter().enumerate() {
            assign[i] = Some(j);
        }
    } else {
        let m = hungarian_min(cols, rows, |j, i| -weights[i][j]);
        for (j, i) in m.into_iter().enumerate() {
            assign[i] = Some(j);
        }
    }
    // zero-weight pairs carry nothing; report them as unassigned
    let mut total = 0;
    for (i, a) in assign.iter_mut().enumerate() {
        if let Some(j) = *a {
            if weights[i][j] == 0 {
                *a = None;
            } else {
                total += weights[i][j];
            }
        }
    }
    (total, assign)
}

/// Minimum-cost assignment of every one of `n` rows to a distinct column out
/// of `m >= n`. Returns the column chosen for each row.
fn hungarian_min(n: usize, m: usize, cost: impl Fn(usize, usize) -> i64) -> Vec<usize> {
    const INF: i64 = i64::MAX / 4;
    // 1-based: index 0 is a virtual column used as the augmenting root
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=m {
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
            for j in 0..=m {
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
    let mut ans = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            ans[p[j] - 1] = j - 1;
        }
    }
    ans
}
