//! Log-domain Sinkhorn for entropic optimal transport.
//!
//! The optimal plan has the form
//! `plan[i][j] = p[i] q[j] exp((f[i] + g[j] - cost[i][j]) / eps)`; the
//! iterations alternate exact updates of `f` (rows) and `g` (columns).
//! Small `eps` is approached through a decreasing schedule of temperatures,
//! each warm-starting the next.

use super::{check_inputs, CostMatrix, EntropicParams, PlanKind, TransportPlan};
use crate::error::Result;

/// Iterations spent at each intermediate temperature of the schedule.
const STAGE_ITERATIONS: usize = 50;

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

struct State<'a> {
    cost: &'a CostMatrix,
    log_p: Vec<f64>,
    log_q: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
}

impl State<'_> {
    fn update_f(&mut self, eps: f64) {
        for i in 0..self.f.len() {
            if self.log_p[i] == f64::NEG_INFINITY {
                continue;
            }
            let lse = log_sum_exp(
                (0..self.g.len()).map(|j| self.log_q[j] + (self.g[j] - self.cost.get(i, j)) / eps),
            );
            self.f[i] = -eps * lse;
        }
    }

    fn update_g(&mut self, eps: f64) {
        for j in 0..self.g.len() {
            if self.log_q[j] == f64::NEG_INFINITY {
                continue;
            }
            let lse = log_sum_exp(
                (0..self.f.len()).map(|i| self.log_p[i] + (self.f[i] - self.cost.get(i, j)) / eps),
            );
            self.g[j] = -eps * lse;
        }
    }

    fn log_plan(&self, i: usize, j: usize, eps: f64) -> f64 {
        self.log_p[i] + self.log_q[j] + (self.f[i] + self.g[j] - self.cost.get(i, j)) / eps
    }

    /// L1 distance between the current plan's row sums and `p`.
    fn row_violation(&self, p: &[f64], eps: f64) -> f64 {
        (0..self.f.len())
            .map(|i| {
                let row: f64 = (0..self.g.len()).map(|j| self.log_plan(i, j, eps).exp()).sum();
                (row - p[i]).abs()
            })
            .sum()
    }
}

/// Entropic optimal transport: minimizes
/// `<plan, cost> + epsilon * KL(plan || p ⊗ q)`.
///
/// Hitting `max_iterations` is not an error; the plan is returned with
/// `converged == false`.
pub fn solve_ewd(
    cost: &CostMatrix,
    p: &[f64],
    q: &[f64],
    params: &EntropicParams,
) -> Result<TransportPlan> {
    check_inputs(cost, p, q)?;
    params.validate()?;
    let eps = params.epsilon;
    if cost.rows() == 1 && cost.cols() == 1 {
        let mut plan = TransportPlan::trivial(PlanKind::Entropic, cost);
        plan.epsilon = Some(eps);
        return Ok(plan);
    }

    let mut state = State {
        cost,
        log_p: p.iter().map(|x| x.ln()).collect(),
        log_q: q.iter().map(|x| x.ln()).collect(),
        f: vec![0.0; p.len()],
        g: vec![0.0; q.len()],
    };

    let mut iterations = 0usize;
    let mut stage_eps = cost.max_entry().max(eps);
    while stage_eps > eps && iterations < params.max_iterations {
        for _ in 0..STAGE_ITERATIONS.min(params.max_iterations - iterations) {
            state.update_f(stage_eps);
            state.update_g(stage_eps);
            iterations += 1;
        }
        stage_eps = (stage_eps * 0.5).max(eps);
    }

    let mut converged = false;
    while iterations < params.max_iterations {
        state.update_f(eps);
        state.update_g(eps);
        iterations += 1;
        if state.row_violation(p, eps) < params.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::debug!(
            "sinkhorn stopped after {iterations} iterations (eps = {eps}, violation = {})",
            state.row_violation(p, eps)
        );
    }

    let (m, n) = (cost.rows(), cost.cols());
    let mut coupling = vec![vec![0.0; n]; m];
    let mut objective = 0.0;
    let mut kl = 0.0;
    for i in 0..m {
        for j in 0..n {
            let log_gamma = state.log_plan(i, j, eps);
            let gamma = log_gamma.exp();
            coupling[i][j] = gamma;
            objective += gamma * cost.get(i, j);
            if gamma > 0.0 {
                // log(gamma / (p q)) without re-deriving it from gamma
                kl += gamma * (state.f[i] + state.g[j] - cost.get(i, j)) / eps;
            }
        }
    }

    Ok(TransportPlan {
        kind: PlanKind::Entropic,
        coupling,
        objective,
        assignment: None,
        duals: Some((state.f, state.g)),
        kl: Some(kl),
        epsilon: Some(eps),
        iterations,
        converged,
    })
}
