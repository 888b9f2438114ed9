//! Helpers shared by the CLI behavior and acceptance suites: generation
//! record builders sized to reproduce the published evaluation tables, and
//! process-level helpers for driving the compiled binary.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eval_metrics::GenerationRecord;
use leansearch::TheoremDoc;

pub fn rec(
    problem: &str,
    sample_index: u32,
    compiled: bool,
    tool: bool,
    used: &[&str],
    retrieved: &[&str],
) -> GenerationRecord {
    GenerationRecord {
        problem_id: problem.into(),
        sample_index,
        compiled,
        tool_call_executed: tool,
        used_identifiers: used.iter().map(|s| s.to_string()).collect(),
        retrieved_identifiers: retrieved.iter().map(|s| s.to_string()).collect(),
        proof_source: String::new(),
    }
}

/// `problems` problems with `samples` samples each; the first `solved`
/// problems get exactly one compiled sample.
pub fn benchmark_records(problems: usize, samples: u32, solved: usize) -> Vec<GenerationRecord> {
    let mut records = Vec::new();
    for p in 0..problems {
        for s in 0..samples {
            let compiled = p < solved && s == samples - 1;
            records.push(rec(&format!("prob_{p:04}"), s, compiled, true, &[], &[]));
        }
    }
    records
}

/// One selected proof per solved problem with exact occurrence totals: the
/// first `with_out` problems share `out_pairs` out-of-model names, all
/// problems share `in_pairs` in-model names. Support = the in-model names.
pub fn classification_fixture(
    solved: usize,
    with_out: usize,
    out_pairs: usize,
    out_names: usize,
    in_pairs: usize,
    in_names: usize,
) -> (Vec<GenerationRecord>, BTreeSet<String>) {
    let out_pool: Vec<String> = (0..out_names).map(|i| format!("out_thm_{i:03}")).collect();
    let in_pool: Vec<String> = (0..in_names).map(|i| format!("in_thm_{i:03}")).collect();

    let spread = |total: usize, buckets: usize| -> Vec<usize> {
        let base = total / buckets;
        let extra = total % buckets;
        (0..buckets).map(|i| base + usize::from(i < extra)).collect()
    };
    let out_per_problem = spread(out_pairs, with_out);
    let in_per_problem = spread(in_pairs, solved);

    let mut out_cursor = 0usize;
    let mut in_cursor = 0usize;
    let mut records = Vec::new();
    for p in 0..solved {
        let mut names: Vec<&str> = Vec::new();
        if p < with_out {
            for _ in 0..out_per_problem[p] {
                names.push(&out_pool[out_cursor % out_names]);
                out_cursor += 1;
            }
        }
        for _ in 0..in_per_problem[p] {
            names.push(&in_pool[in_cursor % in_names]);
            in_cursor += 1;
        }
        records.push(rec(&format!("problem_{p:03}"), 0, true, true, &names, &names));
    }
    let support: BTreeSet<String> = in_pool.into_iter().collect();
    (records, support)
}

/// Full benchmark-scale evaluation inputs reproducing the headline table
/// row: 186 problems at 32 samples, 48 solved with the published retrieval
/// occurrence totals, one baseline whose proof mentions every in-model name.
pub fn table_scale_fixture() -> (Vec<GenerationRecord>, Vec<GenerationRecord>, Vec<TheoremDoc>) {
    let (mut solved, support_names) = classification_fixture(48, 36, 359, 63, 431, 86);
    let mut records = Vec::new();
    for r in solved.drain(..) {
        for s in 1..32 {
            let mut extra = r.clone();
            extra.sample_index = s;
            extra.compiled = false;
            records.push(extra);
        }
        records.push(r);
    }
    for p in 48..186 {
        for s in 0..32 {
            records.push(rec(&format!("unsolved_{p:03}"), s, false, p % 2 == 0, &[], &[]));
        }
    }

    let mut baseline = rec("p0", 0, true, false, &[], &[]);
    baseline.proof_source = support_names.iter().cloned().collect::<Vec<_>>().join(" ");

    let mut names: Vec<String> = support_names.into_iter().collect();
    names.extend((0..63).map(|i| format!("out_thm_{i:03}")));
    let docs = names
        .into_iter()
        .map(|name| TheoremDoc {
            formal_statement: format!("theorem {name} : True"),
            informal_description: format!("the statement named {name}"),
            name,
        })
        .collect();

    (records, vec![baseline], docs)
}

pub fn write_corpus_jsonl(path: &Path, docs: &[TheoremDoc]) {
    let mut out = String::new();
    for doc in docs {
        out.push_str(&serde_json::to_string(doc).unwrap());
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_trace-forge")
}

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Runs the binary with the given arguments and no config file.
pub fn forge(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary spawns")
}

pub fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

pub fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

pub fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        stdout_str(out),
        stderr_str(out),
    );
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

/// Asserts a directory holds no leftover `.tmp` files from atomic writes.
pub fn assert_no_tmp_files(dir: &Path) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        assert!(
            path.extension().map_or(true, |e| e != "tmp"),
            "stray temp file left behind: {}",
            path.display()
        );
    }
}
