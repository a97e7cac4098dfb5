use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_citeharness"));
    cmd.env("CITEHARNESS_THREADS", "2");
    cmd
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const CONTEXTS: &str = r#"{"context_id":"a","left_text":"we use the statistical alignment model of","right_text":"for phrase extraction","target_citation":"Och and Ney, 2003","citing_paper_id":"P1"}
{"context_id":"b","left_text":"hierarchical phrase based translation as in","right_text":"with synchronous grammars","target_citation":"Chiang, 2005","citing_paper_id":"P1"}
{"context_id":"c","left_text":"randomized language models with perfect hashing","right_text":"scale to large corpora OTHERCIT .","target_citation":"Talbot and Brants, 2008","citing_paper_id":"P2"}
{"context_id":"d","left_text":"the open source toolkit","right_text":"is widely used for translation","target_citation":"Koehn et al., 2007","citing_paper_id":"P2"}
{"context_id":"e","left_text":"","right_text":"nothing","target_citation":"","citing_paper_id":"P2"}
"#;

const PAPERS: &str = r#"{"paper_id":"P1","title":"Citing paper one","abstract":"machine translation study","authors":["Smith"],"year":2010}
{"paper_id":"P2","title":"Citing paper two","abstract":"language modelling study","authors":["Jones","Lee"],"year":2011}
{"paper_id":"C1","title":"A Systematic Comparison of Various Statistical Alignment Models","abstract":"alignment models for statistical translation","authors":["Och","Ney"],"year":2003}
{"paper_id":"C2","title":"A Hierarchical Phrase-Based Model","abstract":"hierarchical phrase synchronous grammar translation","authors":["Chiang"],"year":2005}
{"paper_id":"C3","title":"Randomized Language Models via Perfect Hash Functions","abstract":"randomized language models perfect hashing","authors":["Talbot","Brants"],"year":2008}
{"paper_id":"C4","title":"Moses: Open Source Toolkit","abstract":"open source toolkit for translation","authors":["Koehn","Hoang","Birch"],"year":2007}
"#;

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("raw_contexts.jsonl"), CONTEXTS).unwrap();
    fs::write(dir.path().join("raw_papers.jsonl"), PAPERS).unwrap();
    ok(
        dir.path(),
        &["preprocess", "--contexts", "raw_contexts.jsonl", "--papers", "raw_papers.jsonl", "--dataset", "acl200", "--out", "data"],
    );
    dir
}

#[test]
fn full_pipeline_is_reproducible() {
    let dir = setup();
    let d = dir.path();
    let rejects = fs::read_to_string(d.join("data/rejects.jsonl")).unwrap();
    assert_eq!(rejects.lines().count(), 1);
    assert!(rejects.contains("EMPTY_AUTHOR"));
    let stats = json(d.join("data/contexts.jsonl.manifest.json"));
    assert_eq!(stats["stats"]["kept_contexts"], 4);
    assert!(!fs::read_to_string(d.join("data/contexts.jsonl")).unwrap().contains("OTHERCIT"));

    ok(d, &["split", "--data", "data", "--ratio", "0.5", "--out", "split.json"]);
    ok(d, &["build-masks", "--data", "data", "--scheme", "global", "--out", "masked.jsonl"]);
    let masked = fs::read_to_string(d.join("masked.jsonl")).unwrap();
    assert_eq!(masked.lines().count(), 4);
    assert!(masked.lines().all(|l| l.matches("</s>").count() == 2));

    ok(d, &["retrieve", "--data", "data", "--masked", "masked.jsonl", "--topk", "4", "--out", "bm25.jsonl"]);
    let preds = fs::read_to_string(d.join("bm25.jsonl")).unwrap();
    assert_eq!(preds.lines().count(), 4);

    ok(d, &["evaluate", "--preds", "bm25.jsonl", "--dataset", "data", "--k", "4", "--system", "BM25", "--out", "eval.json"]);
    let eval = json(d.join("eval.json"));
    assert_eq!(eval["n"], 4);
    assert_eq!(eval["recall_at_k"], 1.0);
    assert_eq!(eval["system"], "BM25");

    ok(d, &["hallucinate", "--preds", "bm25.jsonl", "--dataset", "data", "--k", "4", "--system", "BM25", "--out", "halo.json"]);
    let halo = json(d.join("halo.json"));
    assert_eq!(halo["mahr"], 0.0);
    assert_eq!(halo["identities"]["decomposition"], true);

    let text = ok(d, &["report", "--eval", "eval.json", "--halluc", "halo.json", "--out", "report.json"]);
    assert!(text.contains("BM25"));

    let snapshot = |names: &[&str]| -> Vec<Vec<u8>> { names.iter().map(|n| fs::read(d.join(n)).unwrap()).collect() };
    let names = [
        "split.json",
        "split.json.manifest.json",
        "masked.jsonl",
        "masked.jsonl.manifest.json",
        "bm25.jsonl",
        "bm25.jsonl.manifest.json",
        "eval.json",
        "halo.json",
        "report.json",
        "report.json.manifest.json",
    ];
    let before = snapshot(&names);
    ok(d, &["split", "--data", "data", "--ratio", "0.5", "--out", "split.json"]);
    ok(d, &["build-masks", "--data", "data", "--scheme", "global", "--out", "masked.jsonl"]);
    ok(d, &["retrieve", "--data", "data", "--masked", "masked.jsonl", "--topk", "4", "--out", "bm25.jsonl"]);
    ok(d, &["evaluate", "--preds", "bm25.jsonl", "--dataset", "data", "--k", "4", "--system", "BM25", "--out", "eval.json"]);
    ok(d, &["hallucinate", "--preds", "bm25.jsonl", "--dataset", "data", "--k", "4", "--system", "BM25", "--out", "halo.json"]);
    ok(d, &["report", "--eval", "eval.json", "--halluc", "halo.json", "--out", "report.json"]);
    assert_eq!(before, snapshot(&names));

    let manifest = json(d.join("bm25.jsonl.manifest.json"));
    assert_eq!(manifest["tool"], "citeharness");
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 3);
    assert_eq!(manifest["config"]["params"]["k1"], 1.2);
}

#[test]
fn retrieve_builds_queries_from_split() {
    let dir = setup();
    let d = dir.path();
    ok(d, &["split", "--data", "data", "--ratio", "0.5", "--out", "split.json"]);
    ok(d, &["retrieve", "--data", "data", "--split", "split.json", "--scheme", "base", "--topk", "2", "--out", "p.jsonl"]);
    assert_eq!(fs::read_to_string(d.join("p.jsonl")).unwrap().lines().count(), 2);
    ok(
        d,
        &["retrieve", "--data", "data", "--split", "split.json", "--unit", "citing-contexts", "--topk", "2", "--out", "q.jsonl"],
    );
}

fn four_context_fixture(d: &Path) {
    fs::create_dir_all(d.join("gt")).unwrap();
    let ctx = |id: &str, gt: &str| {
        format!(r#"{{"context_id":"{id}","dataset":"Custom","left_text":"left","right_text":"right","target_citation":"{gt}"}}"#)
    };
    let contexts = [
        ctx("a", "Och, 2003"),
        ctx("b", "Talbot and Brants, 2008"),
        ctx("c", "Koehn et al., 2007"),
        ctx("d", "Chiang, 2005"),
    ]
    .join("\n");
    fs::write(d.join("gt/contexts.jsonl"), contexts + "\n").unwrap();
    let fill = |first: &[&str]| {
        let mut v: Vec<String> = first.iter().map(|s| s.to_string()).collect();
        while v.len() < 10 {
            v.push(format!("Filler, {}", 1980 + v.len()));
        }
        v
    };
    let rec = |id: &str, p: Vec<String>| serde_json::json!({ "context_id": id, "predictions": p }).to_string();
    let preds = [
        rec("a", fill(&["Och, 2003"])),
        rec("b", fill(&["Chiang, 2005", "Talbot and Brants, 2008"])),
        rec("c", fill(&[])),
        rec("d", fill(&["(Chiang 2005)"])),
    ]
    .join("\n");
    fs::write(d.join("preds.jsonl"), preds + "\n").unwrap();
}

#[test]
fn evaluate_four_context_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    four_context_fixture(d);
    let stdout = ok(d, &["evaluate", "--preds", "preds.jsonl", "--dataset", "gt", "--k", "10", "--out", "r.json"]);
    assert!(stdout.contains("MRR=0.3750"));
    let r = json(d.join("r.json"));
    assert_eq!(r["mrr"], 0.375);
    assert_eq!(r["mrr_exact"], "3/8");
    assert_eq!(r["recall_at_k"], 0.5);
    assert_eq!(r["exact_match"], 0.25);

    ok(d, &["evaluate", "--preds", "preds.jsonl", "--dataset", "gt", "--k", "1", "--k", "10", "--bootstrap", "200", "--out", "many.json"]);
    let many = json(d.join("many.json"));
    assert_eq!(many.as_array().unwrap().len(), 2);
    assert!(many[1]["bootstrap"]["mrr"]["lower"].as_f64().unwrap() <= 0.375);
}

#[test]
fn config_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    four_context_fixture(d);
    fs::write(d.join("cfg.json"), r#"{"k_values":[5,10],"system":"Gen"}"#).unwrap();
    ok(d, &["--config", "cfg.json", "hallucinate", "--preds", "preds.jsonl", "--dataset", "gt", "--out", "h.json"]);
    let h = json(d.join("h.json"));
    assert_eq!(h[0]["k"], 5);
    assert_eq!(h[1]["system"], "Gen");
    assert_eq!(h[1]["counts"]["wrong_format"], 1);

    fs::write(d.join("bad.json"), r#"{"k_values":[0]}"#).unwrap();
    let out = run(d, &["--config", "bad.json", "evaluate", "--preds", "preds.jsonl", "--dataset", "gt", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn ingest_predictions_normalizes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    four_context_fixture(d);
    ok(d, &["ingest-predictions", "--input", "preds.jsonl", "--k", "3", "--dataset", "gt", "--out", "canon.jsonl"]);
    let lines: Vec<Value> = fs::read_to_string(d.join("canon.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines.iter().all(|v| v["predictions"].as_array().unwrap().len() == 3));
    let out = run(d, &["ingest-predictions", "--input", "preds.jsonl", "--k", "11", "--out", "x.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(d, &["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(run(d, &["--help"]).status.code(), Some(0));
    assert_eq!(run(d, &["--version"]).status.code(), Some(0));

    let out = run(d, &["evaluate", "--preds", "missing.jsonl", "--dataset", "gt", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));

    four_context_fixture(d);
    let out = run(d, &["evaluate", "--preds", "preds.jsonl", "--dataset", "gt", "--k", "20", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(d, &["evaluate", "--preds", "preds.jsonl", "--dataset", "gt", "--k", "0", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(3));

    let out = bin()
        .current_dir(d)
        .env("CITEHARNESS_THREADS", "zero")
        .args(["report", "--eval", "r.json", "--out", "x.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_matches_golden() {
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(
        d,
        &[
            "report",
            "--eval",
            golden_dir.join("eval_zeta.json").to_str().unwrap(),
            golden_dir.join("eval_bm25.json").to_str().unwrap(),
            "--halluc",
            golden_dir.join("halo_gen.json").to_str().unwrap(),
            "--out",
            "report.json",
            "--text",
            "report.txt",
        ],
    );
    let expected = fs::read_to_string(golden_dir.join("report.txt")).unwrap();
    assert_eq!(text, expected);
    assert_eq!(fs::read_to_string(d.join("report.txt")).unwrap(), expected);
}
