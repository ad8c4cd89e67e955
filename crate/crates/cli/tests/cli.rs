//! End-to-end runs of the `mbr-ot` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mbr-ot"));
    cmd.env_remove(mbr_ot_cli::settings::ADAPTER_URL_ENV);
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json_lines(bytes: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const FIG1: &str = r#"{"id": "fig1", "candidates": ["I love cats. I love dogs.", "I love dogs. I love cats."]}"#;

#[test]
fn reordered_documents_have_unit_utility() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.jsonl", FIG1);
    let matrix = dir.path().join("matrix.json");
    let manifest = dir.path().join("manifest.json");
    let out = run(bin()
        .args(["decode", "--formulation", "wd", "--weights", "uniform", "--utility", "exact-match"])
        .arg("--input")
        .arg(&input)
        .arg("--dump-matrix")
        .arg(&matrix)
        .arg("--manifest")
        .arg(&manifest));
    let m = read_json(&matrix);
    assert_eq!(m["algorithm"], "MBR-WD");
    assert_eq!(m["instances"][0]["matrix"], serde_json::json!([[1, 1], [1, 1]]));
    // the off-diagonal pair went through the solver, not the identity shortcut
    let man = read_json(&manifest);
    assert_eq!(man["instances"][0]["solver_calls"], 1);
    let sel = &json_lines(&out.stdout)[0];
    assert_eq!(sel["selected_index"], 0);
    assert_eq!(sel["expected_utilities"], serde_json::json!([1, 1]));
}

#[test]
fn single_candidate_selects_index_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.jsonl", r#"{"id": "x", "source": "src", "candidates": ["Only one. Really."]}"#);
    let out = run(bin().arg("decode").arg("--input").arg(&input));
    let sel = &json_lines(&out.stdout)[0];
    assert_eq!(sel["id"], "x");
    assert_eq!(sel["selected_index"], 0);
    assert_eq!(sel["selected_text"], "Only one. Really.");
    assert_eq!(sel["expected_utilities"], serde_json::json!([1]));
    assert_eq!(sel["config_fingerprint"].as_str().unwrap().len(), 64);
}

fn corpus() -> String {
    let sentences = [
        "The cat sat on the mat.",
        "A dog barked loudly.",
        "The weather was cold.",
        "We went home early.",
        "The dog sat on the mat.",
        "It was very cold outside.",
        "Everyone went home.",
    ];
    let mut lines = Vec::new();
    for inst in 0..12 {
        let n = 1 + inst % 8;
        let cands: Vec<String> = (0..n)
            .map(|k| {
                (0..1 + (inst + k) % 3)
                    .map(|s| sentences[(inst * 3 + k * 2 + s) % sentences.len()])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        lines.push(serde_json::json!({"id": format!("doc{inst}"), "candidates": cands}).to_string());
    }
    lines.join("\n")
}

#[test]
fn parallelism_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.jsonl", &corpus());
    for formulation in ["la", "wd", "ewd"] {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let sel = dir.path().join(format!("sel-{formulation}-{threads}.jsonl"));
            let mat = dir.path().join(format!("mat-{formulation}-{threads}.json"));
            run(bin()
                .args(["decode", "--formulation", formulation, "--parallelism", threads])
                .arg("--input")
                .arg(&input)
                .arg("--output")
                .arg(&sel)
                .arg("--dump-matrix")
                .arg(&mat));
            outputs.push((std::fs::read(&sel).unwrap(), std::fs::read(&mat).unwrap()));
        }
        assert_eq!(outputs[0], outputs[1], "{formulation}");
    }
}

#[test]
fn manifest_counts_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.jsonl", &corpus());
    for (formulation, symmetric) in [("wd", true), ("ewd", true), ("la", false)] {
        let manifest = dir.path().join(format!("{formulation}.json"));
        run(bin()
            .args(["decode", "--formulation", formulation])
            .arg("--input")
            .arg(&input)
            .arg("--output")
            .arg(dir.path().join("sel.jsonl"))
            .arg("--manifest")
            .arg(&manifest));
        let man = read_json(&manifest);
        for inst in man["instances"].as_array().unwrap() {
            let n = inst["candidates"].as_u64().unwrap();
            let expected = if symmetric { n * (n - 1) / 2 } else { n * (n - 1) };
            assert_eq!(inst["pair_evaluations"].as_u64().unwrap(), expected);
            assert_eq!(inst["symmetric"], symmetric);
        }
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.jsonl", FIG1);
    let config = write(dir.path(), "run.toml", "formulation = \"la\"\nweights = \"length\"\nutility = \"chrf\"\n");
    let manifest = dir.path().join("m.json");
    run(bin()
        .arg("decode")
        .arg("--config")
        .arg(&config)
        .args(["--formulation", "ewd", "--epsilon", "0.25"])
        .arg("--input")
        .arg(&input)
        .arg("--output")
        .arg(dir.path().join("o.jsonl"))
        .arg("--manifest")
        .arg(&manifest));
    let s = &read_json(&manifest)["settings"];
    assert_eq!(s["algorithm"], "MBR-WD^eps_L");
    assert_eq!(s["utility"], "chrf");
    assert_eq!(s["sinkhorn"]["epsilon"], 0.25);
}

#[test]
fn segmented_input_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "in.jsonl",
        r#"{"id": "s", "candidates_segmented": [["I like cats.", "I like dogs."], ["I like dogs.", "I like cats."], ["Birds sing."]]}"#,
    );
    let out = run(bin().arg("decode").arg("--input").arg(&input));
    assert_eq!(json_lines(&out.stdout)[0]["selected_index"], 0);
    let out = run(bin().args(["decode", "--baseline"]).arg("--input").arg(&input));
    let sel = &json_lines(&out.stdout)[0];
    // whole-text token F1 treats the reordered pair as identical bags
    assert_eq!(sel["expected_utilities"][0], sel["expected_utilities"][1]);
}

#[test]
fn score_pair_and_dump_plan() {
    let out = run(bin().args(["score-pair", "--hyp", "I like cats and dogs.", "--ref", "I like cats. I like dogs."]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["utility"], 0.625);
    assert_eq!(v["algorithm"], "MBR-WD");
    let out = run(bin().args([
        "dump-plan", "--formulation", "la", "--hyp", "I like cats and dogs.", "--ref", "I like cats. I like dogs.",
    ]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "assignment");
    assert_eq!(v["assignment"], serde_json::json!([1]));
    assert!((v["utility"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    let out = run(bin().args(["dump-plan", "--formulation", "ewd", "--hyp", "A b. C d.", "--ref", "A b. E f."]));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["kind"], "entropic");
    assert_eq!(v["epsilon"], 0.1);
    assert!(v["kl"].as_f64().unwrap() >= 0.0);
}

#[test]
fn eval_metric_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("scores.csv");
    let summary = dir.path().join("summary.json");
    let eval = fixture("eval");
    run(bin()
        .arg("eval-metric")
        .arg("--hypotheses")
        .arg(eval.join("hypotheses.jsonl"))
        .arg("--references")
        .arg(eval.join("references.jsonl"))
        .arg("--human")
        .arg(eval.join("human.csv"))
        .arg("--output")
        .arg(&csv_path)
        .arg("--summary")
        .arg(&summary));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "system,metric_score");
    assert_eq!(lines[1], "sysA,1");
    let s = read_json(&summary);
    assert!((s["pearson"].as_f64().unwrap() - 0.9609104642027224).abs() < 1e-9);
    assert_eq!(s["statistic"], "pearson");
    assert_eq!(s["skipped_total"], 0);
}

fn exit_code(cmd: &mut Command) -> (i32, Value) {
    let out = cmd.output().unwrap();
    let code = out.status.code().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr);
    let report = stderr
        .lines()
        .rev()
        .find_map(|l| serde_json::from_str::<Value>(l).ok())
        .unwrap_or(Value::Null);
    (code, report)
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.jsonl", FIG1);

    let (code, report) = exit_code(bin().args(["decode", "--input"]).arg(dir.path().join("missing.jsonl")));
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "config");

    let (code, _) = exit_code(bin().args(["decode", "--formulation", "ewd", "--epsilon", "0"]).arg("--input").arg(&good));
    assert_eq!(code, 2);

    let (code, _) = exit_code(bin().args(["decode", "--formulation", "sinkhorn"]).arg("--input").arg(&good));
    assert_eq!(code, 2);

    let bad_toml = write(dir.path(), "bad.toml", "formulaton = \"wd\"\n");
    let (code, _) = exit_code(bin().arg("decode").arg("--config").arg(&bad_toml).arg("--input").arg(&good));
    assert_eq!(code, 2);

    let malformed = write(dir.path(), "bad.jsonl", "{\"id\": \"a\", \"candidates\": [\n");
    let (code, report) = exit_code(bin().arg("decode").arg("--input").arg(&malformed));
    assert_eq!(code, 3);
    assert_eq!(report["error"]["kind"], "data");

    let empty = write(dir.path(), "empty.jsonl", r#"{"id": "e", "candidates": ["fine.", "   "]}"#);
    let (code, report) = exit_code(bin().arg("decode").arg("--input").arg(&empty));
    assert_eq!(code, 3);
    assert!(report["error"]["message"].as_str().unwrap().contains("instance e"));

    let none = write(dir.path(), "none.jsonl", r#"{"id": "n", "candidates": []}"#);
    assert_eq!(exit_code(bin().arg("decode").arg("--input").arg(&none)).0, 3);

    // endpoint from the environment, pointing at a closed port
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let (code, report) = exit_code(
        bin()
            .env(mbr_ot_cli::settings::ADAPTER_URL_ENV, format!("http://127.0.0.1:{port}"))
            .args(["decode", "--utility", "adapter", "--adapter-retries", "0"])
            .arg("--input")
            .arg(&good),
    );
    assert_eq!(code, 4);
    assert_eq!(report["error"]["kind"], "adapter");
}

#[test]
fn embedding_utility_from_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = write(
        dir.path(),
        "emb.jsonl",
        "{\"text\": \"I like cats.\", \"vector\": [1, 0]}\n{\"text\": \"I adore cats.\", \"vector\": [3, 4]}\n",
    );
    let out = run(bin()
        .args(["score-pair", "--utility", "embedding", "--hyp", "I like cats.", "--ref", "I adore cats."])
        .arg("--embeddings")
        .arg(&table));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["utility"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    // a segment missing from the table is a data error
    let (code, _) = exit_code(
        bin()
            .args(["score-pair", "--utility", "embedding", "--hyp", "Unknown.", "--ref", "I adore cats."])
            .arg("--embeddings")
            .arg(&table),
    );
    assert_eq!(code, 3);
}
