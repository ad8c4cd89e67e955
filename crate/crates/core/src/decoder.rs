//! Minimum Bayes risk selection over a candidate pool that doubles as the
//! pseudo-reference pool.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::doc::Document;
use crate::doc_utility::{evaluate_pair, DocUtilityConfig, PairEvaluation, ScoreCache};
use crate::error::{Error, Result};
use crate::sent_utility::SentenceUtility;

#[derive(Debug, Clone)]
pub struct CandidateSet {
    instance_id: String,
    candidates: Vec<Document>,
}

impl CandidateSet {
    /// Requires at least one candidate and unique candidate ids.
    pub fn new(instance_id: impl Into<String>, candidates: Vec<Document>) -> Result<CandidateSet> {
        let instance_id = instance_id.into();
        if candidates.is_empty() {
            return Err(Error::InvalidCandidates(format!(
                "instance {instance_id:?} has no candidates"
            )));
        }
        let mut seen = HashSet::new();
        for c in &candidates {
            if !seen.insert(c.id()) {
                return Err(Error::InvalidCandidates(format!(
                    "duplicate candidate id {:?} in instance {instance_id:?}",
                    c.id()
                )));
            }
        }
        Ok(CandidateSet {
            instance_id,
            candidates,
        })
    }

    pub fn instance_id(&self) -> &str {
        &self.instance_id
    }

    pub fn candidates(&self) -> &[Document] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Which off-diagonal entries get evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixStrategy {
    /// Upper triangle only when the utility is symmetric, else everything.
    Auto,
    /// Every off-diagonal entry, regardless of symmetry.
    Full,
}

/// `U[i][j] = u(candidate_i, candidate_j)` with a unit diagonal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtilityMatrix(pub Vec<Vec<f64>>);

impl UtilityMatrix {
    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    /// Row means, self-pair included.
    pub fn expected_utilities(&self) -> Vec<f64> {
        let n = self.size() as f64;
        self.0.iter().map(|row| row.iter().sum::<f64>() / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDiagnostic {
    pub row: usize,
    pub col: usize,
    pub solved: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixReport {
    pub matrix: UtilityMatrix,
    /// Document-pair utilities evaluated (diagonal excluded).
    pub pair_evaluations: usize,
    /// Pairs that reached an OT solver (byte-identical candidates do not).
    pub solver_calls: usize,
    /// Pairs whose entropic solve hit the iteration cap.
    pub unconverged: Vec<PairDiagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub selected_index: usize,
    pub expected_utilities: Vec<f64>,
    pub matrix: UtilityMatrix,
    pub pair_evaluations: usize,
    pub solver_calls: usize,
    pub diagnostics: Vec<PairDiagnostic>,
}

/// First index attaining the maximum.
pub fn argmax_first(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best })
}

fn pairs_to_evaluate(n: usize, symmetric: bool) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| if symmetric { i < j } else { i != j })
        .collect()
}

fn assemble<F>(n: usize, symmetric: bool, eval: F) -> Result<MatrixReport>
where
    F: Fn(usize, usize) -> Result<PairEvaluation> + Sync,
{
    let pairs = pairs_to_evaluate(n, symmetric);
    let results: Vec<Result<PairEvaluation>> = pairs
        .par_iter()
        .map(|&(i, j)| eval(i, j).map_err(|e| e.at_pair(i, j)))
        .collect();

    let mut matrix = vec![vec![0.0; n]; n];
    for (i, row) in matrix.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut solver_calls = 0;
    let mut unconverged = Vec::new();
    for (&(i, j), result) in pairs.iter().zip(results) {
        let e = result?;
        matrix[i][j] = e.utility;
        if symmetric {
            matrix[j][i] = e.utility;
        }
        if e.solved {
            solver_calls += 1;
        }
        if !e.converged {
            unconverged.push(PairDiagnostic {
                row: i,
                col: j,
                solved: e.solved,
                converged: false,
            });
        }
    }
    Ok(MatrixReport {
        matrix: UtilityMatrix(matrix),
        pair_evaluations: pairs.len(),
        solver_calls,
        unconverged,
    })
}

/// Utility matrix with the symmetry shortcut where it applies.
pub fn compute_utility_matrix(cands: &CandidateSet, cfg: &DocUtilityConfig) -> Result<MatrixReport> {
    compute_utility_matrix_with(cands, cfg, &ScoreCache::new(), MatrixStrategy::Auto)
}

pub fn compute_utility_matrix_with(
    cands: &CandidateSet,
    cfg: &DocUtilityConfig,
    cache: &ScoreCache,
    strategy: MatrixStrategy,
) -> Result<MatrixReport> {
    cfg.validate()?;
    let docs = cands.candidates();
    let symmetric = strategy == MatrixStrategy::Auto && cfg.is_symmetric();
    assemble(docs.len(), symmetric, |i, j| {
        evaluate_pair(&docs[i], &docs[j], cfg, Some(cache))
    })
    .map_err(|e| e.in_instance(cands.instance_id()))
}

fn select_from_report(report: MatrixReport) -> SelectionResult {
    let expected_utilities = report.matrix.expected_utilities();
    SelectionResult {
        selected_index: argmax_first(&expected_utilities),
        expected_utilities,
        matrix: report.matrix,
        pair_evaluations: report.pair_evaluations,
        solver_calls: report.solver_calls,
        diagnostics: report.unconverged,
    }
}

/// MBR selection: the candidate with the highest mean utility against all
/// candidates (itself included); ties go to the lowest index.
pub fn select(cands: &CandidateSet, cfg: &DocUtilityConfig) -> Result<SelectionResult> {
    compute_utility_matrix(cands, cfg).map(select_from_report)
}

pub fn select_with(
    cands: &CandidateSet,
    cfg: &DocUtilityConfig,
    cache: &ScoreCache,
    strategy: MatrixStrategy,
) -> Result<SelectionResult> {
    compute_utility_matrix_with(cands, cfg, cache, strategy).map(select_from_report)
}

/// Standard MBR: the whole document text is scored by `u` as one unit.
pub fn select_with_baseline_doc_utility(
    cands: &CandidateSet,
    u: &SentenceUtility,
) -> Result<SelectionResult> {
    let docs = cands.candidates();
    let report = assemble(docs.len(), u.is_symmetric(), |i, j| {
        if docs[i].same_content(&docs[j]) {
            return Ok(PairEvaluation {
                utility: 1.0,
                solved: false,
                converged: true,
            });
        }
        Ok(PairEvaluation {
            utility: u.score_text(docs[i].text(), docs[j].text())?,
            solved: true,
            converged: true,
        })
    })
    .map_err(|e| e.in_instance(cands.instance_id()))?;
    Ok(select_from_report(report))
}
