//! Files written by `preprocess` and read back by the other commands.
//!
//! * `entities.dict`, `relations.dict`: `index<TAB>token` per line.
//! * `{train,valid,test}.bin`: `b"NOGETRPL"`, u32 version, u64 count, then
//!   `count` × (u32 h, u32 r, u32 t). Original triples only; inverses are
//!   re-derived on load.
//! * `adjacency.bin`: `b"NOGEADJC"`, u32 version, u32 kind (0 weighted,
//!   1 binary), u64 n, u64 nnz, u64 × (n+1) row pointers, u64 × nnz columns,
//!   f64 × nnz values. This is the co-occurrence matrix before self-loops and
//!   symmetric normalization.
//! * `manifest.json`: counts.
//!
//! All integers are little-endian.

use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use noge_core::cooc_graph::{Csr, WeightedAdjacency};
use noge_core::kg_data::{Dataset, Split, Triple, Vocabulary};
use noge_core::AdjacencyKind;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const TRIPLES_MAGIC: &[u8; 8] = b"NOGETRPL";
pub const ADJACENCY_MAGIC: &[u8; 8] = b"NOGEADJC";
pub const ARTIFACT_VERSION: u32 = 1;

pub const ENTITIES_FILE: &str = "entities.dict";
pub const RELATIONS_FILE: &str = "relations.dict";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ADJACENCY_FILE: &str = "adjacency.bin";
pub const ADJACENCY_TSV_FILE: &str = "adjacency.tsv";
pub const LOCK_FILE: &str = ".lock";

pub fn split_file(split: Split) -> String {
    format!("{}.bin", split.name())
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn dict_text(tokens: &[String]) -> String {
    tokens.iter().enumerate().map(|(i, t)| format!("{i}\t{t}\n")).collect()
}

pub fn parse_dict(text: &str, path: &Path) -> CliResult<Vec<String>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            let (idx, tok) = line
                .split_once('\t')
                .ok_or_else(|| CliError::format(path, format!("line {}: expected index<TAB>token", i + 1)))?;
            if idx.parse::<usize>().ok() != Some(i) {
                return Err(CliError::format(path, format!("line {}: index {idx:?} out of sequence", i + 1)));
            }
            Ok(tok.to_owned())
        })
        .collect()
}

pub fn triples_bytes(triples: &[Triple]) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 12 * triples.len());
    out.extend_from_slice(TRIPLES_MAGIC);
    out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
    out.extend_from_slice(&(triples.len() as u64).to_le_bytes());
    for t in triples {
        for v in [t.h, t.r, t.t] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], path: &'a Path, magic: &[u8; 8]) -> CliResult<Self> {
        if bytes.len() < 12 || &bytes[..8] != magic {
            return Err(CliError::format(path, "wrong file type"));
        }
        let mut r = Reader { bytes, pos: 8, path };
        let version = r.u32()?;
        if version != ARTIFACT_VERSION {
            return Err(CliError::format(path, format!("unsupported version {version}")));
        }
        Ok(r)
    }

    fn take<const N: usize>(&mut self) -> CliResult<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| CliError::format(self.path, "truncated file"))?;
        self.pos = end;
        Ok(chunk.try_into().unwrap())
    }

    fn u32(&mut self) -> CliResult<u32> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> CliResult<u64> {
        self.take().map(u64::from_le_bytes)
    }

    fn usize(&mut self) -> CliResult<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| CliError::format(self.path, "count overflow"))
    }

    fn f64(&mut self) -> CliResult<f64> {
        self.take().map(f64::from_le_bytes)
    }

    fn finish(self) -> CliResult<()> {
        if self.pos != self.bytes.len() {
            return Err(CliError::format(self.path, "trailing bytes"));
        }
        Ok(())
    }
}

pub fn parse_triples_bin(bytes: &[u8], path: &Path) -> CliResult<Vec<Triple>> {
    let mut r = Reader::new(bytes, path, TRIPLES_MAGIC)?;
    let n = r.usize()?;
    if n.checked_mul(12) != Some(bytes.len() - 20) {
        return Err(CliError::format(path, "length does not match triple count"));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (h, rel, t) = (r.u32()?, r.u32()?, r.u32()?);
        out.push(Triple::new(h as usize, rel as usize, t as usize));
    }
    r.finish()?;
    Ok(out)
}

pub fn adjacency_bytes(adj: &WeightedAdjacency<f64>) -> Vec<u8> {
    let m = &adj.matrix;
    let mut out = Vec::new();
    out.extend_from_slice(ADJACENCY_MAGIC);
    out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
    let kind: u32 = match adj.kind {
        AdjacencyKind::Weighted => 0,
        AdjacencyKind::Binary => 1,
    };
    out.extend_from_slice(&kind.to_le_bytes());
    out.extend_from_slice(&(m.dim() as u64).to_le_bytes());
    out.extend_from_slice(&(m.nnz() as u64).to_le_bytes());
    for &p in m.row_ptr() {
        out.extend_from_slice(&(p as u64).to_le_bytes());
    }
    for &c in m.cols() {
        out.extend_from_slice(&(c as u64).to_le_bytes());
    }
    for &v in m.vals() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn parse_adjacency_bin(bytes: &[u8], path: &Path) -> CliResult<WeightedAdjacency<f64>> {
    let mut r = Reader::new(bytes, path, ADJACENCY_MAGIC)?;
    let kind = match r.u32()? {
        0 => AdjacencyKind::Weighted,
        1 => AdjacencyKind::Binary,
        k => return Err(CliError::format(path, format!("unknown adjacency kind {k}"))),
    };
    let n = r.usize()?;
    let nnz = r.usize()?;
    let expect_len = n
        .checked_add(1)
        .and_then(|p| p.checked_add(nnz.checked_mul(2)?))
        .and_then(|w| w.checked_mul(8))
        .and_then(|b| b.checked_add(r.pos));
    if expect_len != Some(bytes.len()) {
        return Err(CliError::format(path, "length does not match header"));
    }
    let row_ptr = (0..=n).map(|_| r.usize()).collect::<CliResult<Vec<_>>>()?;
    let cols = (0..nnz).map(|_| r.usize()).collect::<CliResult<Vec<_>>>()?;
    let vals = (0..nnz).map(|_| r.f64()).collect::<CliResult<Vec<_>>>()?;
    r.finish()?;
    let matrix = Csr::from_raw(n, row_ptr, cols, vals).map_err(|e| CliError::format(path, e.to_string()))?;
    Ok(WeightedAdjacency { kind, matrix })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entities: usize,
    pub relations: usize,
    pub nodes: usize,
    pub inverse_relations: bool,
    /// Relations and nodes after inverse augmentation.
    pub working_relations: usize,
    pub working_nodes: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
    pub adjacency: AdjacencyKind,
    pub adjacency_nnz: usize,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Vocabulary and original split triples from a preprocessed directory.
pub fn load_dataset(dir: &Path, inverse_relations: bool) -> CliResult<Dataset> {
    let need = |name: &str| -> CliResult<PathBuf> {
        let p = dir.join(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::Usage(format!(
                "{} is missing; run `noge preprocess` for this output directory first",
                p.display()
            )))
        }
    };
    let read_dict = |name: &str| -> CliResult<Vec<String>> {
        let p = need(name)?;
        let text = fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        parse_dict(&text, &p)
    };
    let vocab = Vocabulary::from_tokens(read_dict(ENTITIES_FILE)?, read_dict(RELATIONS_FILE)?)?;
    let mut splits = Vec::with_capacity(3);
    for s in Split::ALL {
        let p = need(&split_file(s))?;
        splits.push(parse_triples_bin(&read_file(&p)?, &p)?);
    }
    let test = splits.pop().unwrap();
    let valid = splits.pop().unwrap();
    let train = splits.pop().unwrap();
    Ok(Dataset::from_encoded(train, valid, test, vocab, inverse_relations)?)
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        let mut f: File = OpenOptions::new().write(true).create_new(true).open(&path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::AlreadyExists {
                CliError::Usage(format!(
                    "{} is locked by another run (delete {} if no run is active)",
                    dir.display(),
                    path.display()
                ))
            } else {
                CliError::io(&path, e)
            }
        })?;
        writeln!(f, "{}", std::process::id()).map_err(|e| CliError::io(&path, e))?;
        Ok(DirLock { path })
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
