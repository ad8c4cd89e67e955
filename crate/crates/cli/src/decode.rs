//! `decode`: MBR selection for every instance of a JSONL candidate file.

use std::io::BufRead;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use mbr_ot::{select, select_with_baseline_doc_utility, CandidateSet, Document, Formulation, SelectionResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::failure::{Failure, ResultExt};
use crate::format::{f17_rows, f17s, F17};
use crate::settings::{Engine, Settings};

/// One input line: raw candidate texts (segmented here) or pre-split
/// segments. `source` is carried for reference only.
#[derive(Debug, Clone, Deserialize)]
pub struct InputInstance {
    pub id: String,
    #[serde(default)]
    pub source: Option<String>,
    #[serde(default)]
    pub candidates: Option<Vec<String>>,
    #[serde(default)]
    pub candidates_segmented: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Serialize)]
struct SelectionRecord<'a> {
    id: &'a str,
    selected_index: usize,
    selected_text: &'a str,
    expected_utilities: Vec<F17>,
    config_fingerprint: &'a str,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceStats {
    pub id: String,
    pub candidates: usize,
    /// Whether only the upper triangle was evaluated and mirrored.
    pub symmetric: bool,
    pub pair_evaluations: usize,
    pub solver_calls: usize,
    pub unconverged_pairs: Vec<[usize; 2]>,
}

/// Result of decoding one instance, ready to be written.
#[derive(Debug)]
pub struct Decoded {
    pub id: String,
    pub line: String,
    pub matrix: Vec<Vec<f64>>,
    pub stats: InstanceStats,
}

#[derive(Serialize)]
struct MatrixDump<'a> {
    config_fingerprint: &'a str,
    algorithm: &'a str,
    instances: Vec<MatrixEntry<'a>>,
}

#[derive(Serialize)]
struct MatrixEntry<'a> {
    id: &'a str,
    matrix: Vec<Vec<F17>>,
}

#[derive(Serialize)]
struct Totals {
    instances: usize,
    candidates: usize,
    pair_evaluations: usize,
    solver_calls: usize,
    unconverged_pairs: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_fingerprint: &'a str,
    settings: &'a Settings,
    parallelism: usize,
    input: String,
    started_unix_ms: u128,
    elapsed_ms: F17,
    totals: Totals,
    instances: Vec<&'a InstanceStats>,
    notes: Vec<&'static str>,
}

pub fn read_instances(reader: impl BufRead, origin: &str) -> Result<Vec<InputInstance>, Failure> {
    let mut out = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.or_data(format!("reading {origin}"))?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: InputInstance =
            serde_json::from_str(&line).or_data(format!("{origin}:{}: malformed instance", n + 1))?;
        out.push(inst);
    }
    let mut ids: Vec<&str> = out.iter().map(|i| i.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Failure::data(format!("{origin}: duplicate instance id {:?}", w[0])));
    }
    Ok(out)
}

fn candidate_set(inst: &InputInstance, engine: &Engine) -> Result<CandidateSet, Failure> {
    let language = engine.settings.language;
    let docs = match (&inst.candidates, &inst.candidates_segmented) {
        (Some(texts), None) => texts
            .iter()
            .enumerate()
            .map(|(k, t)| Document::from_text(format!("{}#{k}", inst.id), t, language))
            .collect::<mbr_ot::Result<Vec<_>>>(),
        (None, Some(segmented)) => segmented
            .iter()
            .enumerate()
            .map(|(k, s)| Document::from_segments(format!("{}#{k}", inst.id), s))
            .collect(),
        _ => {
            return Err(Failure::data(format!(
                "instance {:?}: exactly one of \"candidates\" or \"candidates_segmented\" is required",
                inst.id
            )))
        }
    };
    let docs = docs.map_err(|e| Failure::from(e.in_instance(&inst.id)))?;
    Ok(CandidateSet::new(&inst.id, docs).map_err(|e| e.in_instance(&inst.id))?)
}

fn decode_one(inst: &InputInstance, engine: &Engine) -> Result<Decoded, Failure> {
    let cands = candidate_set(inst, engine)?;
    let result: SelectionResult = if engine.settings.baseline {
        select_with_baseline_doc_utility(&cands, &engine.config.sent_utility)?
    } else {
        select(&cands, &engine.config)?
    };
    let n = cands.len();
    let symmetric = if engine.settings.baseline {
        engine.config.sent_utility.is_symmetric()
    } else {
        engine.config.is_symmetric()
    };
    let selected_text = cands.candidates()[result.selected_index].text();
    let line = serde_json::to_string(&SelectionRecord {
        id: &inst.id,
        selected_index: result.selected_index,
        selected_text,
        expected_utilities: f17s(&result.expected_utilities),
        config_fingerprint: &engine.fingerprint,
    })
    .expect("record serializes");
    Ok(Decoded {
        id: inst.id.clone(),
        line,
        stats: InstanceStats {
            id: inst.id.clone(),
            candidates: n,
            symmetric,
            pair_evaluations: result.pair_evaluations,
            solver_calls: result.solver_calls,
            unconverged_pairs: result.diagnostics.iter().map(|d| [d.row, d.col]).collect(),
        },
        matrix: result.matrix.0,
    })
}

/// Decodes all instances on the current rayon pool. Output order follows
/// input order; the first failing instance (in input order) aborts the run.
pub fn decode_all(instances: &[InputInstance], engine: &Engine) -> Result<Vec<Decoded>, Failure> {
    let results: Vec<Result<Decoded, Failure>> = instances.par_iter().map(|i| decode_one(i, engine)).collect();
    results.into_iter().collect()
}

pub fn matrix_json(decoded: &[Decoded], engine: &Engine) -> String {
    let dump = MatrixDump {
        config_fingerprint: &engine.fingerprint,
        algorithm: &engine.settings.algorithm,
        instances: decoded
            .iter()
            .map(|d| MatrixEntry {
                id: &d.id,
                matrix: f17_rows(&d.matrix),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dump).expect("matrix serializes")
}

pub struct RunClock {
    started: SystemTime,
    timer: Instant,
}

impl RunClock {
    pub fn start() -> RunClock {
        RunClock {
            started: SystemTime::now(),
            timer: Instant::now(),
        }
    }
}

pub fn manifest_json(decoded: &[Decoded], engine: &Engine, threads: usize, input: &str, clock: &RunClock) -> String {
    let stats: Vec<&InstanceStats> = decoded.iter().map(|d| &d.stats).collect();
    let totals = Totals {
        instances: stats.len(),
        candidates: stats.iter().map(|s| s.candidates).sum(),
        pair_evaluations: stats.iter().map(|s| s.pair_evaluations).sum(),
        solver_calls: stats.iter().map(|s| s.solver_calls).sum(),
        unconverged_pairs: stats.iter().map(|s| s.unconverged_pairs.len()).sum(),
    };
    let mut notes = vec![
        "expected_utilities average over all candidates including the candidate itself (self-utility 1)",
        "ties in expected utility go to the lowest candidate index",
        "seed is recorded but unused: decoding is deterministic",
    ];
    if engine.settings.formulation == Formulation::Ewd && !engine.settings.baseline {
        notes.push("ewd utilities are 1 - (transport cost + epsilon * KL) unless KL is excluded; values below 0 are kept");
        notes.push("pairs where Sinkhorn hit its iteration cap are used and listed in unconverged_pairs");
    }
    let manifest = Manifest {
        tool: "mbr-ot",
        version: env!("CARGO_PKG_VERSION"),
        config_fingerprint: &engine.fingerprint,
        settings: &engine.settings,
        parallelism: threads,
        input: input.to_owned(),
        started_unix_ms: clock
            .started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        elapsed_ms: F17(clock.timer.elapsed().as_secs_f64() * 1e3),
        totals,
        instances: stats,
        notes,
    };
    serde_json::to_string_pretty(&manifest).expect("manifest serializes")
}
