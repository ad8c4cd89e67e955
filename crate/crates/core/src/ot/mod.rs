//! Optimal transport between two discrete distributions over segments.
//!
//! Three objectives share one cost matrix:
//!
//! * [`solve_la`]: deterministic assignment of each source segment to one
//!   target, injective when there are fewer sources, surjective when there
//!   are fewer targets.
//! * [`solve_wd`]: the exact Wasserstein (earth mover's) cost, via the
//!   transportation simplex.
//! * [`solve_ewd`]: transport cost plus `epsilon * KL(plan || p ⊗ q)`, via
//!   log-domain Sinkhorn iterations.

mod assignment;
mod sinkhorn;
mod transport;

use serde::Serialize;

use crate::doc::validate_weights;
use crate::error::{Error, Result};

pub use assignment::{hungarian, solve_la};
pub use sinkhorn::solve_ewd;
pub use transport::solve_wd;

/// Dense row-major matrix of non-negative, finite segment-pair costs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    /// Builds a cost matrix whose entries must lie in `[0, 1]`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<CostMatrix> {
        let c = CostMatrix::nonnegative(rows)?;
        if let Some(bad) = c.data.iter().find(|&&x| x > 1.0) {
            return Err(Error::InvalidCost(format!("entry {bad} exceeds 1")));
        }
        Ok(c)
    }

    /// Like [`CostMatrix::new`] but only requires finite, non-negative entries.
    pub fn nonnegative(rows: Vec<Vec<f64>>) -> Result<CostMatrix> {
        let m = rows.len();
        if m == 0 || rows[0].is_empty() {
            return Err(Error::InvalidCost("cost matrix must be at least 1x1".into()));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidCost("ragged cost matrix".into()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if let Some(bad) = data.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidCost(format!("entry {bad} is not a finite cost")));
        }
        Ok(CostMatrix {
            rows: m,
            cols: n,
            data,
        })
    }

    pub(crate) fn from_flat(rows: usize, cols: usize, data: Vec<f64>) -> CostMatrix {
        debug_assert_eq!(data.len(), rows * cols);
        CostMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> CostMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        CostMatrix::from_flat(self.cols, self.rows, data)
    }

    pub fn scaled(&self, alpha: f64) -> CostMatrix {
        CostMatrix::from_flat(self.rows, self.cols, self.data.iter().map(|x| x * alpha).collect())
    }

    pub(crate) fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Assignment,
    Exact,
    Entropic,
}

/// A coupling between the two segment distributions and its cost.
#[derive(Debug, Clone, Serialize)]
pub struct TransportPlan {
    pub kind: PlanKind,
    /// `coupling[i][j]` is the mass moved from source `i` to target `j`.
    pub coupling: Vec<Vec<f64>>,
    /// `sum_ij coupling[i][j] * cost[i][j]`.
    pub objective: f64,
    /// Target chosen for each source row (assignment plans only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<usize>>,
    /// Dual potentials `(f, g)` certifying optimality of exact plans, or the
    /// Sinkhorn potentials of entropic ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duals: Option<(Vec<f64>, Vec<f64>)>,
    /// `KL(coupling || p ⊗ q)` (entropic plans only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub iterations: usize,
    /// False when Sinkhorn stopped at its iteration cap.
    pub converged: bool,
}

impl TransportPlan {
    /// Transport cost plus `epsilon * KL` for entropic plans; the plain
    /// objective otherwise.
    pub fn regularized_objective(&self) -> f64 {
        match (self.kl, self.epsilon) {
            (Some(kl), Some(eps)) => self.objective + eps * kl,
            _ => self.objective,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.coupling.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let n = self.coupling.first().map_or(0, Vec::len);
        (0..n)
            .map(|j| self.coupling.iter().map(|r| r[j]).sum())
            .collect()
    }

    fn trivial(kind: PlanKind, cost: &CostMatrix) -> TransportPlan {
        TransportPlan {
            kind,
            coupling: vec![vec![1.0]],
            objective: cost.get(0, 0),
            assignment: (kind == PlanKind::Assignment).then(|| vec![0]),
            duals: (kind == PlanKind::Exact).then(|| (vec![0.0], vec![cost.get(0, 0)])),
            kl: (kind == PlanKind::Entropic).then_some(0.0),
            epsilon: None,
            iterations: 0,
            converged: true,
        }
    }
}

/// Parameters of the entropic solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct EntropicParams {
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Stop once the L1 violation of the row marginal falls below this.
    pub tolerance: f64,
}

impl Default for EntropicParams {
    fn default() -> Self {
        EntropicParams {
            epsilon: 0.1,
            max_iterations: 10_000,
            tolerance: 1e-9,
        }
    }
}

impl EntropicParams {
    pub fn with_epsilon(epsilon: f64) -> EntropicParams {
        EntropicParams {
            epsilon,
            ..EntropicParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParams(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParams("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

fn check_inputs(cost: &CostMatrix, p: &[f64], q: &[f64]) -> Result<()> {
    validate_weights(p, cost.rows())?;
    validate_weights(q, cost.cols())
}
