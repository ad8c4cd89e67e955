//! Document utility `u(h, y) = 1 - OT(p_h, p_y)` over segment costs
//! `1 - u_s(h_i, y_j)`.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::doc::{Document, WeightScheme};
use crate::error::{Error, Result};
use crate::ot::{self, CostMatrix, EntropicParams, TransportPlan};
use crate::sent_utility::SentenceUtility;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Linear assignment.
    La,
    /// Exact Wasserstein distance.
    Wd,
    /// Entropic-regularized Wasserstein distance.
    Ewd,
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "la" | "al" => Ok(Formulation::La),
            "wd" => Ok(Formulation::Wd),
            "ewd" => Ok(Formulation::Ewd),
            other => Err(format!("unknown formulation {other:?} (expected la, wd or ewd)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DocUtilityConfig {
    pub formulation: Formulation,
    pub weight_scheme: WeightScheme,
    pub sent_utility: SentenceUtility,
    /// Present exactly when `formulation` is `Ewd`.
    pub entropic: Option<EntropicParams>,
    /// EWD only: subtract `epsilon * KL` as well as the transport cost.
    pub include_kl_in_utility: bool,
}

impl DocUtilityConfig {
    pub fn new(formulation: Formulation, weight_scheme: WeightScheme, sent_utility: SentenceUtility) -> Self {
        DocUtilityConfig {
            formulation,
            weight_scheme,
            sent_utility,
            entropic: (formulation == Formulation::Ewd).then(EntropicParams::default),
            include_kl_in_utility: true,
        }
    }

    pub fn la(u: SentenceUtility, scheme: WeightScheme) -> Self {
        Self::new(Formulation::La, scheme, u)
    }

    pub fn wd(u: SentenceUtility, scheme: WeightScheme) -> Self {
        Self::new(Formulation::Wd, scheme, u)
    }

    pub fn ewd(u: SentenceUtility, scheme: WeightScheme, params: EntropicParams) -> Self {
        DocUtilityConfig {
            entropic: Some(params),
            ..Self::new(Formulation::Ewd, scheme, u)
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.formulation, &self.entropic) {
            (Formulation::Ewd, Some(p)) => p.validate(),
            (Formulation::Ewd, None) => Err(Error::InvalidParams(
                "EWD needs entropic parameters".into(),
            )),
            (_, Some(_)) => Err(Error::InvalidParams(
                "entropic parameters are only valid with EWD".into(),
            )),
            (_, None) => Ok(()),
        }
    }

    /// True when `u(h, y) == u(y, h)` is guaranteed: WD and EWD are
    /// symmetric if the sentence utility is.
    pub fn is_symmetric(&self) -> bool {
        self.formulation != Formulation::La && self.sent_utility.is_symmetric()
    }

    /// Canonical algorithm name (`MBR-WD`, `MBR-WD^eps_L`, ...).
    pub fn algorithm_name(&self) -> String {
        let base = match self.formulation {
            Formulation::La => "MBR-AL",
            Formulation::Wd => "MBR-WD",
            Formulation::Ewd => "MBR-WD^eps",
        };
        match self.weight_scheme {
            WeightScheme::Uniform => base.to_owned(),
            WeightScheme::LengthProportional => format!("{base}_L"),
        }
    }
}

/// Sentence-pair score cache shared by all document pairs of one decoding
/// instance. Identical sentences recur across candidates, so most lookups hit.
/// Concurrent inserts of the same key write the same value.
#[derive(Debug, Default)]
pub struct ScoreCache {
    entries: RwLock<HashMap<(String, String, String), f64>>,
}

impl ScoreCache {
    pub fn new() -> ScoreCache {
        ScoreCache::default()
    }

    fn key(u: &SentenceUtility, scorer: &str, a: &str, b: &str) -> (String, String, String) {
        if u.is_symmetric() && b < a {
            (scorer.to_owned(), b.to_owned(), a.to_owned())
        } else {
            (scorer.to_owned(), a.to_owned(), b.to_owned())
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().map(|e| e.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `C[i][j] = 1 - u_s(h_i, y_j)`, clamped into `[0, 1]`.
pub fn build_cost_matrix(
    h: &Document,
    y: &Document,
    u: &SentenceUtility,
    cache: Option<&ScoreCache>,
) -> Result<CostMatrix> {
    let (m, n) = (h.len(), y.len());
    let mut scores = vec![f64::NAN; m * n];
    let scorer = u.id();

    let mut missing: Vec<(usize, usize)> = Vec::new();
    match cache {
        Some(cache) => {
            let entries = cache.entries.read().expect("score cache lock");
            for i in 0..m {
                for j in 0..n {
                    let key = ScoreCache::key(u, &scorer, h.segments()[i].text(), y.segments()[j].text());
                    match entries.get(&key) {
                        Some(&v) => scores[i * n + j] = v,
                        None => missing.push((i, j)),
                    }
                }
            }
        }
        None => missing.extend((0..m).flat_map(|i| (0..n).map(move |j| (i, j)))),
    }

    if !missing.is_empty() {
        // Score each distinct text pair once.
        let mut unique: Vec<(&str, &str)> = Vec::new();
        let mut slot: HashMap<(&str, &str), usize> = HashMap::new();
        let mut owner = Vec::with_capacity(missing.len());
        for &(i, j) in &missing {
            let pair = (h.segments()[i].text(), y.segments()[j].text());
            let k = *slot.entry(pair).or_insert_with(|| {
                unique.push(pair);
                unique.len() - 1
            });
            owner.push(k);
        }
        let fresh = u.batch_score_text(&unique)?;
        for (&(i, j), &k) in missing.iter().zip(&owner) {
            scores[i * n + j] = fresh[k];
        }
        if let Some(cache) = cache {
            let mut entries = cache.entries.write().expect("score cache lock");
            for (&(a, b), &v) in unique.iter().zip(&fresh) {
                entries.entry(ScoreCache::key(u, &scorer, a, b)).or_insert(v);
            }
        }
    }

    let data = scores.into_iter().map(|s| (1.0 - s).clamp(0.0, 1.0)).collect();
    Ok(CostMatrix::from_flat(m, n, data))
}

/// Solves the configured transport problem for one document pair.
pub fn transport_plan(
    h: &Document,
    y: &Document,
    cfg: &DocUtilityConfig,
    cache: Option<&ScoreCache>,
) -> Result<(CostMatrix, TransportPlan)> {
    cfg.validate()?;
    let cost = build_cost_matrix(h, y, &cfg.sent_utility, cache)?;
    let p = h.weights(cfg.weight_scheme);
    let q = y.weights(cfg.weight_scheme);
    let plan = match cfg.formulation {
        Formulation::La => ot::solve_la(&cost, &p, &q)?,
        Formulation::Wd => ot::solve_wd(&cost, &p, &q)?,
        Formulation::Ewd => {
            let params = cfg.entropic.expect("validated");
            ot::solve_ewd(&cost, &p, &q, &params)?
        }
    };
    Ok((cost, plan))
}

/// Outcome of one document-pair evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEvaluation {
    pub utility: f64,
    /// False when the identity shortcut answered without a solver call.
    pub solved: bool,
    /// False when Sinkhorn hit its iteration cap.
    pub converged: bool,
}

pub fn evaluate_pair(
    h: &Document,
    y: &Document,
    cfg: &DocUtilityConfig,
    cache: Option<&ScoreCache>,
) -> Result<PairEvaluation> {
    if h.same_content(y) {
        return Ok(PairEvaluation {
            utility: 1.0,
            solved: false,
            converged: true,
        });
    }
    let (_, plan) = transport_plan(h, y, cfg, cache)?;
    let distance = if cfg.include_kl_in_utility {
        plan.regularized_objective()
    } else {
        plan.objective
    };
    Ok(PairEvaluation {
        utility: 1.0 - distance,
        solved: true,
        converged: plan.converged,
    })
}

/// `u(h, y) = 1 - OT(p_h, p_y)`. Self-pairs score exactly 1. EWD utilities
/// that include the KL term may be negative and are not clamped.
pub fn doc_utility(h: &Document, y: &Document, cfg: &DocUtilityConfig) -> Result<f64> {
    evaluate_pair(h, y, cfg, None).map(|e| e.utility)
}
