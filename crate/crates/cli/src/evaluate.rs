//! `eval-metric`: system-level scores of the document metric and their
//! correlation with human judgments.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use mbr_ot::eval::{kendall_tau, pearson, system_score, SystemOutputs};
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, ResultExt};
use crate::format::{g17, F17};
use crate::settings::Engine;

#[derive(Debug, Deserialize)]
struct HypothesisLine {
    system: String,
    id: String,
    text: String,
}

#[derive(Debug, Deserialize)]
struct ReferenceLine {
    id: String,
    text: String,
}

#[derive(Debug, Deserialize)]
struct HumanRow {
    system: String,
    score: f64,
}

fn jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead, origin: &str) -> Result<Vec<T>, Failure> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.or_data(format!("reading {origin}"))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).or_data(format!("{origin}:{}", n + 1))?);
    }
    Ok(out)
}

pub fn read_human_scores(reader: impl Read, origin: &str) -> Result<BTreeMap<String, f64>, Failure> {
    let mut human = BTreeMap::new();
    for row in csv::Reader::from_reader(reader).deserialize::<HumanRow>() {
        let row = row.or_data(format!("reading {origin}"))?;
        if human.insert(row.system.clone(), row.score).is_some() {
            return Err(Failure::data(format!("{origin}: system {:?} listed twice", row.system)));
        }
    }
    Ok(human)
}

/// Hypotheses grouped per system (sorted by system id) and paired with
/// their references.
pub fn read_systems(
    hypotheses: impl BufRead,
    references: impl BufRead,
    engine: &Engine,
) -> Result<(Vec<SystemOutputs>, BTreeMap<String, usize>), Failure> {
    let refs: Vec<ReferenceLine> = jsonl(references, "references")?;
    let mut ref_map = BTreeMap::new();
    for r in refs {
        if ref_map.insert(r.id.clone(), r.text).is_some() {
            return Err(Failure::data(format!("references: duplicate id {:?}", r.id)));
        }
    }
    let mut grouped: BTreeMap<String, Vec<(String, String, String)>> = BTreeMap::new();
    for h in jsonl::<HypothesisLine>(hypotheses, "hypotheses")? {
        let reference = ref_map
            .get(&h.id)
            .ok_or_else(|| Failure::data(format!("hypotheses: no reference for id {:?}", h.id)))?;
        grouped
            .entry(h.system)
            .or_default()
            .push((h.id, h.text, reference.clone()));
    }
    let mut systems = Vec::new();
    let mut skipped = BTreeMap::new();
    for (system, items) in grouped {
        let (outputs, dropped) = SystemOutputs::from_texts(system.clone(), items, engine.settings.language)?;
        if dropped > 0 {
            log::warn!("system {system}: skipped {dropped} instance(s) that failed segmentation");
        }
        skipped.insert(system, dropped);
        systems.push(outputs);
    }
    Ok((systems, skipped))
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    statistic: &'static str,
    pearson: F17,
    kendall_tau_b: Option<F17>,
    systems_scored: usize,
    systems_correlated: usize,
    skipped_instances: &'a BTreeMap<String, usize>,
    skipped_total: usize,
    algorithm: &'a str,
    config_fingerprint: &'a str,
    note: &'static str,
}

pub struct Evaluation {
    pub scores: BTreeMap<String, f64>,
    pub pearson: f64,
    pub kendall: Option<f64>,
    pub correlated: usize,
}

pub fn evaluate(
    systems: &[SystemOutputs],
    human: &BTreeMap<String, f64>,
    engine: &Engine,
) -> Result<Evaluation, Failure> {
    let mut scores = BTreeMap::new();
    for sys in systems {
        let score = system_score(sys, &engine.config).map_err(|e| e.in_instance(&sys.system_id))?;
        scores.insert(sys.system_id.clone(), score);
    }
    let correlated = scores.keys().filter(|s| human.contains_key(*s)).count();
    let pearson = pearson(&scores, human)?;
    let kendall = kendall_tau(&scores, human).ok();
    Ok(Evaluation {
        scores,
        pearson,
        kendall,
        correlated,
    })
}

pub fn write_scores_csv(out: impl Write, scores: &BTreeMap<String, f64>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["system", "metric_score"]).or_config("writing scores")?;
    for (system, score) in scores {
        w.write_record([system.as_str(), &g17(*score)]).or_config("writing scores")?;
    }
    w.flush().or_config("writing scores")
}

pub fn summary_json(eval: &Evaluation, skipped: &BTreeMap<String, usize>, engine: &Engine) -> String {
    let summary = Summary {
        statistic: "pearson",
        pearson: F17(eval.pearson),
        kendall_tau_b: eval.kendall.map(F17),
        systems_scored: eval.scores.len(),
        systems_correlated: eval.correlated,
        skipped_instances: skipped,
        skipped_total: skipped.values().sum(),
        algorithm: &engine.settings.algorithm,
        config_fingerprint: &engine.fingerprint,
        note: "sample Pearson correlation between per-system mean document utility and human scores, \
               over systems present in both; Kendall tau-b is informational",
    };
    serde_json::to_string_pretty(&summary).expect("summary serializes")
}
