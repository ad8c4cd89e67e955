//! Transportation simplex on the `m x n` transportation polytope.
//!
//! The basis is a spanning tree of `m + n - 1` cells over the bipartite
//! row/column graph. Entering and leaving cells follow Bland's rule (lowest
//! cell index), so degenerate pivots cannot cycle.

use std::collections::VecDeque;

use super::{check_inputs, CostMatrix, PlanKind, TransportPlan};
use crate::error::{Error, Result};

struct Simplex<'a> {
    cost: &'a CostMatrix,
    m: usize,
    n: usize,
    flow: Vec<f64>,
    basic: Vec<bool>,
}

impl<'a> Simplex<'a> {
    /// North-west corner start. Zero-flow cells are kept in the basis so it
    /// always has exactly `m + n - 1` cells.
    fn north_west(cost: &'a CostMatrix, p: &[f64], q: &[f64]) -> Simplex<'a> {
        let (m, n) = (cost.rows(), cost.cols());
        let mut flow = vec![0.0; m * n];
        let mut basic = vec![false; m * n];
        let mut supply = p.to_vec();
        let mut demand = q.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let x = supply[i].min(demand[j]);
            flow[i * n + j] = x;
            basic[i * n + j] = true;
            supply[i] -= x;
            demand[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || supply[i] <= demand[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Simplex {
            cost,
            m,
            n,
            flow,
            basic,
        }
    }

    /// Tree adjacency: node `i < m` is row `i`, node `m + j` is column `j`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for cell in (0..self.m * self.n).filter(|&c| self.basic[c]) {
            let (i, j) = (cell / self.n, cell % self.n);
            adj[i].push(self.m + j);
            adj[self.m + j].push(i);
        }
        adj
    }

    /// Potentials with `u[i] + v[j] = cost[i][j]` on every basic cell, `u[0] = 0`.
    fn potentials(&self, adj: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let mut pot = vec![f64::NAN; m + n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &next in &adj[node] {
                if !pot[next].is_nan() {
                    continue;
                }
                let c = if node < m {
                    self.cost.get(node, next - m)
                } else {
                    self.cost.get(next, node - m)
                };
                pot[next] = c - pot[node];
                queue.push_back(next);
            }
        }
        debug_assert!(pot.iter().all(|x| !x.is_nan()), "basis is not spanning");
        (pot[..m].to_vec(), pot[m..].to_vec())
    }

    /// Basic cells on the tree path from column `col` to row `row`, in order.
    fn tree_path(&self, adj: &[Vec<usize>], col: usize, row: usize) -> Vec<usize> {
        let (m, n) = (self.m, self.n);
        let start = m + col;
        let mut parent = vec![usize::MAX; m + n];
        parent[start] = start;
        let mut queue = VecDeque::from([start]);
        while let Some(node) = queue.pop_front() {
            if node == row {
                break;
            }
            for &next in &adj[node] {
                if parent[next] == usize::MAX {
                    parent[next] = node;
                    queue.push_back(next);
                }
            }
        }
        let mut cells = Vec::new();
        let mut node = row;
        while node != start {
            let prev = parent[node];
            let (i, j) = if node < m { (node, prev - m) } else { (prev, node - m) };
            cells.push(i * n + j);
            node = prev;
        }
        cells.reverse();
        cells
    }

    fn run(&mut self, max_pivots: usize) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        let tol = 1e-12 * self.cost.max_entry().max(1.0);
        for pivot in 0..=max_pivots {
            let adj = self.adjacency();
            let (u, v) = self.potentials(&adj);
            let entering = (0..self.m * self.n).find(|&cell| {
                let (i, j) = (cell / self.n, cell % self.n);
                !self.basic[cell] && self.cost.get(i, j) - u[i] - v[j] < -tol
            });
            let Some(entering) = entering else {
                return Ok((u, v, pivot));
            };
            if pivot == max_pivots {
                break;
            }
            let (ei, ej) = (entering / self.n, entering % self.n);
            // Cycle: entering (+), then alternating -, +, ... along the path
            // from column ej back to row ei.
            let path = self.tree_path(&adj, ej, ei);
            let minus: Vec<usize> = path.iter().copied().step_by(2).collect();
            let plus: Vec<usize> = path.iter().copied().skip(1).step_by(2).collect();
            let theta = minus
                .iter()
                .map(|&c| self.flow[c])
                .fold(f64::INFINITY, f64::min);
            let leaving = minus
                .iter()
                .copied()
                .filter(|&c| self.flow[c] == theta)
                .min()
                .expect("cycle has a decreasing cell");
            for &c in &minus {
                self.flow[c] -= theta;
            }
            for &c in &plus {
                self.flow[c] += theta;
            }
            self.flow[entering] = theta;
            self.flow[leaving] = 0.0;
            self.basic[leaving] = false;
            self.basic[entering] = true;
        }
        Err(Error::SolverNonconvergence(max_pivots))
    }
}

/// Exact Wasserstein cost between `p` (rows) and `q` (columns).
///
/// The returned plan carries dual potentials `(f, g)` with
/// `f[i] + g[j] <= cost[i][j]` everywhere and equality on the plan's support.
pub fn solve_wd(cost: &CostMatrix, p: &[f64], q: &[f64]) -> Result<TransportPlan> {
    check_inputs(cost, p, q)?;
    if cost.rows() == 1 && cost.cols() == 1 {
        return Ok(TransportPlan::trivial(PlanKind::Exact, cost));
    }
    let mut simplex = Simplex::north_west(cost, p, q);
    // Bland's rule terminates; the cap only guards against a logic error.
    let cells = cost.rows() * cost.cols();
    let max_pivots = 1000 + 50 * cells * cells;
    let (f, g, pivots) = simplex.run(max_pivots)?;
    let (m, n) = (cost.rows(), cost.cols());
    let coupling: Vec<Vec<f64>> = simplex.flow.chunks(n).map(<[f64]>::to_vec).collect();
    let mut objective = 0.0;
    for i in 0..m {
        for j in 0..n {
            objective += coupling[i][j] * cost.get(i, j);
        }
    }
    Ok(TransportPlan {
        kind: PlanKind::Exact,
        coupling,
        objective,
        assignment: None,
        duals: Some((f, g)),
        kl: None,
        epsilon: None,
        iterations: pivots,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: &[&[f64]]) -> CostMatrix {
        CostMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn identical_documents_cost_zero() {
        let c = cm(&[&[0.0, 0.7, 1.0], &[0.7, 0.0, 0.4], &[1.0, 0.4, 0.0]]);
        let w = [1.0 / 3.0; 3];
        let plan = solve_wd(&c, &w, &w).unwrap();
        assert_eq!(plan.objective, 0.0);
    }

    #[test]
    fn reorder_uses_anti_diagonal() {
        let c = cm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let plan = solve_wd(&c, &[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert_eq!(plan.coupling, vec![vec![0.0, 0.5], vec![0.5, 0.0]]);
    }

    #[test]
    fn merge_splits_mass() {
        let plan = solve_wd(&cm(&[&[0.2, 0.2]]), &[1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(plan.coupling, vec![vec![0.5, 0.5]]);
        assert!((plan.objective - 0.2).abs() < 1e-15);
        let plan = solve_wd(&cm(&[&[0.1, 0.3]]), &[1.0], &[0.5, 0.5]).unwrap();
        assert!((plan.objective - 0.2).abs() < 1e-15);
    }

    #[test]
    fn duals_certify_optimum() {
        let c = cm(&[&[0.3, 0.9, 0.1], &[0.5, 0.2, 0.8]]);
        let p = [0.4, 0.6];
        let q = [0.2, 0.5, 0.3];
        let plan = solve_wd(&c, &p, &q).unwrap();
        let (f, g) = plan.duals.clone().unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert!(f[i] + g[j] <= c.get(i, j) + 1e-12);
                if plan.coupling[i][j] > 0.0 {
                    assert!((f[i] + g[j] - c.get(i, j)).abs() < 1e-12);
                }
            }
        }
        let dual: f64 = f.iter().zip(&p).map(|(a, b)| a * b).sum::<f64>()
            + g.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>();
        assert!((dual - plan.objective).abs() < 1e-12);
    }

    #[test]
    fn degenerate_equal_marginals() {
        // Ties in the north-west corner produce zero-flow basic cells.
        let c = cm(&[&[0.5, 0.1, 0.9], &[0.2, 0.6, 0.3], &[0.7, 0.4, 0.0]]);
        let w = [1.0 / 3.0; 3];
        let plan = solve_wd(&c, &w, &w).unwrap();
        // Best permutation: 0->1, 1->0, 2->2 = (0.1 + 0.2 + 0.0) / 3.
        assert!((plan.objective - 0.1).abs() < 1e-15);
    }
}
