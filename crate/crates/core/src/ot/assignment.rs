use super::{check_inputs, CostMatrix, PlanKind, TransportPlan};
use crate::error::Result;

/// Minimum-cost assignment of every row to a distinct column.
///
/// `cost` must have no more rows than columns. Returns the column of each
/// row. Shortest augmenting paths with row/column potentials, `O(r^2 c)`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let rows = cost.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = cost[0].len();
    assert!(rows <= cols, "hungarian needs rows <= cols ({rows} > {cols})");

    // 1-based; index 0 is the virtual source column.
    let mut u = vec![0.0f64; rows + 1];
    let mut v = vec![0.0f64; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];

    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Linear assignment: each source row sends all of its mass `p[i]` to one
/// target column, minimizing `sum_i p[i] * cost[i][map(i)]`.
///
/// The map is injective when `m <= n` and surjective when `m >= n`. Target
/// weights `q` only need to be a valid distribution; they do not constrain
/// the map.
pub fn solve_la(cost: &CostMatrix, p: &[f64], q: &[f64]) -> Result<TransportPlan> {
    check_inputs(cost, p, q)?;
    let (m, n) = (cost.rows(), cost.cols());
    if m == 1 && n == 1 {
        return Ok(TransportPlan::trivial(PlanKind::Assignment, cost));
    }
    let weighted: Vec<Vec<f64>> = (0..m)
        .map(|i| cost.row(i).iter().map(|c| p[i] * c).collect())
        .collect();

    let map = if m <= n {
        hungarian(&weighted)
    } else {
        // Surjective: every column needs at least one row. Each row pays at
        // least its cheapest column; pick one distinct row per column to
        // minimize the excess over that floor, and send the rest to their
        // cheapest column.
        let cheapest: Vec<usize> = weighted
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold(0, |best, (j, &c)| if c < row[best] { j } else { best })
            })
            .collect();
        let excess: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..m).map(|i| weighted[i][j] - weighted[i][cheapest[i]]).collect())
            .collect();
        let cover = hungarian(&excess);
        let mut map = cheapest;
        for (j, &i) in cover.iter().enumerate() {
            map[i] = j;
        }
        map
    };

    let mut coupling = vec![vec![0.0; n]; m];
    let mut objective = 0.0;
    for (i, &j) in map.iter().enumerate() {
        coupling[i][j] = p[i];
        objective += p[i] * cost.get(i, j);
    }
    Ok(TransportPlan {
        kind: PlanKind::Assignment,
        coupling,
        objective,
        assignment: Some(map),
        duals: None,
        kl: None,
        epsilon: None,
        iterations: 0,
        converged: true,
    })
}
