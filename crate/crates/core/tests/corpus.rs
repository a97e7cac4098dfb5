mod common;

use std::collections::BTreeMap;

use citeharness_core::corpus::{ingest, save_dataset, Dataset, Ingested, OTHER_CITATION_MARKER};

fn ingest_with_threads(lines: &[citeharness_core::jsonl::RawLine], threads: usize) -> Ingested {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| ingest(lines, &[], Dataset::Acl200))
}

#[test]
fn planted_corpus_accounting() {
    let planted = common::planted_corpus(5, 2000);
    let out = ingest_with_threads(&planted.lines, 2);
    assert_eq!(out.ingested_contexts, planted.lines.len());
    assert_eq!(out.contexts.len() + out.rejects.len(), out.ingested_contexts);
    assert_eq!(out.contexts.len(), planted.expected_kept);

    let mut got: Vec<&str> = out.rejects.iter().map(|r| r.reason.code()).collect();
    let mut want: Vec<&str> = planted.expected_rejects.iter().map(|r| r.code()).collect();
    got.sort_unstable();
    want.sort_unstable();
    assert_eq!(got, want);

    let repairs: BTreeMap<_, _> = out
        .repairs
        .iter()
        .map(|(id, kinds)| {
            let mut kinds = kinds.clone();
            kinds.sort();
            (id.clone(), kinds)
        })
        .collect();
    assert_eq!(repairs, planted.expected_repairs);

    for ctx in &out.contexts {
        assert!(!ctx.left_text.contains(OTHER_CITATION_MARKER) && !ctx.right_text.contains(OTHER_CITATION_MARKER));
    }
}

#[test]
fn saved_dataset_is_independent_of_thread_count() {
    let planted = common::planted_corpus(6, 1500);
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, threads) in dirs.iter().zip([1, 4]) {
        save_dataset(dir.path(), &ingest_with_threads(&planted.lines, threads)).unwrap();
    }
    for file in ["contexts.jsonl", "papers.jsonl", "rejects.jsonl"] {
        let a = std::fs::read(dirs[0].path().join(file)).unwrap();
        let b = std::fs::read(dirs[1].path().join(file)).unwrap();
        assert!(a == b, "{file} differs");
    }
}
