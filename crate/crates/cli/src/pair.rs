//! `score-pair` and `dump-plan`: one hypothesis document against one
//! reference document.

use mbr_ot::doc_utility::{evaluate_pair, transport_plan};
use mbr_ot::{Document, PlanKind};
use serde::Serialize;

use crate::failure::Failure;
use crate::format::{f17_rows, f17s, F17};
use crate::settings::Engine;

pub fn documents(hyp: &str, reference: &str, engine: &Engine) -> Result<(Document, Document), Failure> {
    let lang = engine.settings.language;
    let h = Document::from_text("hyp", hyp, lang).map_err(|e| e.in_instance("hyp"))?;
    let r = Document::from_text("ref", reference, lang).map_err(|e| e.in_instance("ref"))?;
    Ok((h, r))
}

#[derive(Serialize)]
struct PairScore<'a> {
    utility: F17,
    algorithm: &'a str,
    hyp_segments: usize,
    ref_segments: usize,
    solved: bool,
    converged: bool,
    config_fingerprint: &'a str,
}

pub fn score_pair_json(h: &Document, r: &Document, engine: &Engine) -> Result<String, Failure> {
    let (utility, solved, converged) = if engine.settings.baseline {
        let u = if h.same_content(r) {
            1.0
        } else {
            engine.config.sent_utility.score_text(h.text(), r.text())?
        };
        (u, false, true)
    } else {
        let e = evaluate_pair(h, r, &engine.config, None)?;
        (e.utility, e.solved, e.converged)
    };
    Ok(serde_json::to_string(&PairScore {
        utility: F17(utility),
        algorithm: &engine.settings.algorithm,
        hyp_segments: h.len(),
        ref_segments: r.len(),
        solved,
        converged,
        config_fingerprint: &engine.fingerprint,
    })
    .expect("score serializes"))
}

#[derive(Serialize)]
struct Duals {
    hyp: Vec<F17>,
    #[serde(rename = "ref")]
    reference: Vec<F17>,
}

#[derive(Serialize)]
struct PlanDump<'a> {
    algorithm: &'a str,
    kind: &'static str,
    hyp_segments: Vec<&'a str>,
    ref_segments: Vec<&'a str>,
    hyp_weights: Vec<F17>,
    ref_weights: Vec<F17>,
    cost: Vec<Vec<F17>>,
    coupling: Vec<Vec<F17>>,
    objective: F17,
    #[serde(skip_serializing_if = "Option::is_none")]
    kl: Option<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<F17>,
    regularized_objective: F17,
    utility: F17,
    #[serde(skip_serializing_if = "Option::is_none")]
    assignment: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duals: Option<Duals>,
    iterations: usize,
    converged: bool,
    config_fingerprint: &'a str,
}

/// Full transport plan for one pair. The solver runs even for identical
/// documents so the plan is always available for inspection.
pub fn dump_plan_json(h: &Document, r: &Document, engine: &Engine) -> Result<String, Failure> {
    if engine.settings.baseline {
        return Err(Failure::config("dump-plan needs a transport formulation; baseline scoring has no plan"));
    }
    let cfg = &engine.config;
    let (cost, plan) = transport_plan(h, r, cfg, None)?;
    let distance = if cfg.include_kl_in_utility {
        plan.regularized_objective()
    } else {
        plan.objective
    };
    let utility = if h.same_content(r) { 1.0 } else { 1.0 - distance };
    let dump = PlanDump {
        algorithm: &engine.settings.algorithm,
        kind: match plan.kind {
            PlanKind::Assignment => "assignment",
            PlanKind::Exact => "exact",
            PlanKind::Entropic => "entropic",
        },
        hyp_segments: h.segments().iter().map(|s| s.text()).collect(),
        ref_segments: r.segments().iter().map(|s| s.text()).collect(),
        hyp_weights: f17s(&h.weights(cfg.weight_scheme)),
        ref_weights: f17s(&r.weights(cfg.weight_scheme)),
        cost: f17_rows(&cost.to_rows()),
        coupling: f17_rows(&plan.coupling),
        objective: F17(plan.objective),
        kl: plan.kl.map(F17),
        epsilon: plan.epsilon.map(F17),
        regularized_objective: F17(plan.regularized_objective()),
        utility: F17(utility),
        assignment: plan.assignment.clone(),
        duals: plan.duals.as_ref().map(|(f, g)| Duals {
            hyp: f17s(f),
            reference: f17s(g),
        }),
        iterations: plan.iterations,
        converged: plan.converged,
        config_fingerprint: &engine.fingerprint,
    };
    Ok(serde_json::to_string_pretty(&dump).expect("plan serializes"))
}
