//! System-level evaluation of the document utility as a metric: average the
//! per-document utility into a system score, then correlate system scores
//! with human judgments.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;

use crate::doc::{Document, Language};
use crate::doc_utility::{doc_utility, DocUtilityConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ScoredInstance {
    pub instance_id: String,
    pub hypothesis: Document,
    pub reference: Document,
}

#[derive(Debug, Clone)]
pub struct SystemOutputs {
    pub system_id: String,
    pub documents: Vec<ScoredInstance>,
}

impl SystemOutputs {
    pub fn new(system_id: impl Into<String>, documents: Vec<ScoredInstance>) -> Result<SystemOutputs> {
        let system_id = system_id.into();
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.instance_id.as_str()) {
                return Err(Error::InvalidCandidates(format!(
                    "system {system_id:?} has instance {:?} twice",
                    d.instance_id
                )));
            }
        }
        Ok(SystemOutputs {
            system_id,
            documents,
        })
    }

    /// Segments `(instance_id, hypothesis, reference)` triples. Instances
    /// where either side is empty are skipped; the second value counts them.
    pub fn from_texts<I, S>(system_id: impl Into<String>, items: I, language: Language) -> Result<(SystemOutputs, usize)>
    where
        I: IntoIterator<Item = (S, S, S)>,
        S: AsRef<str>,
    {
        let system_id = system_id.into();
        let mut documents = Vec::new();
        let mut skipped = 0;
        for (id, hyp, reference) in items {
            let id = id.as_ref();
            let h = Document::from_text(format!("{system_id}/{id}"), hyp.as_ref(), language);
            let r = Document::from_text(format!("ref/{id}"), reference.as_ref(), language);
            match (h, r) {
                (Ok(hypothesis), Ok(reference)) => documents.push(ScoredInstance {
                    instance_id: id.to_owned(),
                    hypothesis,
                    reference,
                }),
                _ => {
                    log::warn!("system {system_id}: skipping instance {id} (empty hypothesis or reference)");
                    skipped += 1;
                }
            }
        }
        Ok((SystemOutputs::new(system_id, documents)?, skipped))
    }
}

/// Mean document utility of the system's hypotheses against their references.
pub fn system_score(sys: &SystemOutputs, cfg: &DocUtilityConfig) -> Result<f64> {
    if sys.documents.is_empty() {
        return Err(Error::InvalidCandidates(format!(
            "system {:?} has no scorable documents",
            sys.system_id
        )));
    }
    let scores: Vec<Result<f64>> = sys
        .documents
        .par_iter()
        .map(|d| doc_utility(&d.hypothesis, &d.reference, cfg).map_err(|e| e.in_instance(&d.instance_id)))
        .collect();
    let mut total = 0.0;
    for s in scores {
        total += s?;
    }
    Ok(total / sys.documents.len() as f64)
}

fn paired(metric: &BTreeMap<String, f64>, human: &BTreeMap<String, f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, y): (Vec<f64>, Vec<f64>) = metric
        .iter()
        .filter_map(|(k, &m)| human.get(k).map(|&h| (m, h)))
        .unzip();
    if x.len() < 2 {
        return Err(Error::DegenerateVariance(format!(
            "need at least two systems scored by both sides, have {}",
            x.len()
        )));
    }
    Ok((x, y))
}

/// Sample Pearson correlation over the systems present in both maps.
pub fn pearson(system_scores: &BTreeMap<String, f64>, human: &BTreeMap<String, f64>) -> Result<f64> {
    let (x, y) = paired(system_scores, human)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(&y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance(
            "metric or human scores are constant across systems".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Kendall's tau-b over the systems present in both maps.
pub fn kendall_tau(system_scores: &BTreeMap<String, f64>, human: &BTreeMap<String, f64>) -> Result<f64> {
    let (x, y) = paired(system_scores, human)?;
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0i64, 0i64, 0i64, 0i64);
    for a in 0..x.len() {
        for b in a + 1..x.len() {
            let dx = (x[a] - x[b]).partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal);
            let dy = (y[a] - y[b]).partial_cmp(&0.0).unwrap_or(std::cmp::Ordering::Equal);
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {}
                (Equal, _) => ties_x += 1,
                (_, Equal) => ties_y += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n1 = (concordant + discordant + ties_x) as f64;
    let n2 = (concordant + discordant + ties_y) as f64;
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::DegenerateVariance("no untied pairs".into()));
    }
    Ok((concordant - discordant) as f64 / (n1 * n2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::WeightScheme;
    use crate::sent_utility::SentenceUtility;

    fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn perfect_and_inverse_correlation() {
        let h = map(&[("a", 1.0), ("b", 3.0), ("c", 2.0)]);
        assert!((pearson(&h, &h).unwrap() - 1.0).abs() < 1e-15);
        let neg = map(&[("a", -1.0), ("b", -3.0), ("c", -2.0)]);
        assert!((pearson(&neg, &h).unwrap() + 1.0).abs() < 1e-15);
        assert!((kendall_tau(&h, &h).unwrap() - 1.0).abs() < 1e-15);
        assert!((kendall_tau(&neg, &h).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        let h = map(&[("a", 1.0), ("b", 3.0)]);
        let flat = map(&[("a", 0.5), ("b", 0.5)]);
        assert!(matches!(pearson(&flat, &h), Err(Error::DegenerateVariance(_))));
        let one = map(&[("a", 0.5)]);
        assert!(pearson(&one, &h).is_err());
    }

    #[test]
    fn only_common_systems_count() {
        let m = map(&[("a", 0.1), ("b", 0.2), ("c", 0.3), ("extra", 9.0)]);
        let h = map(&[("a", 1.0), ("b", 2.0), ("c", 3.0), ("human-only", -5.0)]);
        assert!((pearson(&m, &h).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_system_scores_one() {
        let items = vec![
            ("d1", "A cat. A dog.", "A cat. A dog."),
            ("d2", "Hello there.", "Hello there."),
        ];
        let (sys, skipped) = SystemOutputs::from_texts("sys", items, Language::En).unwrap();
        assert_eq!(skipped, 0);
        let cfg = DocUtilityConfig::wd(SentenceUtility::token_f1(Language::En), WeightScheme::Uniform);
        assert_eq!(system_score(&sys, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn empty_instances_are_skipped() {
        let items = vec![("d1", "A cat.", "A cat."), ("d2", "   ", "Something.")];
        let (sys, skipped) = SystemOutputs::from_texts("sys", items, Language::En).unwrap();
        assert_eq!(skipped, 1);
        assert_eq!(sys.documents.len(), 1);
    }

    #[test]
    fn duplicate_instances_rejected() {
        let items = vec![("d1", "A.", "A."), ("d1", "B.", "B.")];
        assert!(SystemOutputs::from_texts("sys", items, Language::En).is_err());
    }
}
