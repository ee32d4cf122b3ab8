#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use noge_core::kg_data::{RawSplits, RawTriple};

pub fn triples_text(triples: &[RawTriple]) -> String {
    let mut s = String::new();
    for t in triples {
        writeln!(s, "{}\t{}\t{}", t.head, t.relation, t.tail).unwrap();
    }
    s
}

pub fn write_raw(dir: &Path, raw: &RawSplits) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("train.txt"), triples_text(&raw.train)).unwrap();
    std::fs::write(dir.join("valid.txt"), triples_text(&raw.valid)).unwrap();
    std::fs::write(dir.join("test.txt"), triples_text(&raw.test)).unwrap();
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn noge(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("noge").chain(args.iter().copied());
    let code = noge_cli::main_with_args(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// `--dataset-dir D --output-dir O` followed by `extra`.
pub fn dirs_args<'a>(data: &'a Path, out: &'a Path, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["--dataset-dir", data.to_str().unwrap(), "--output-dir", out.to_str().unwrap()];
    v.extend_from_slice(extra);
    v
}

pub struct Workspace {
    pub _tmp: tempfile::TempDir,
    pub data: PathBuf,
    pub out: PathBuf,
}

pub fn workspace(raw: &RawSplits) -> Workspace {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    write_raw(&data, raw);
    Workspace { _tmp: tmp, data, out }
}

pub fn json_lines(text: &str) -> Vec<serde_json::Value> {
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}
