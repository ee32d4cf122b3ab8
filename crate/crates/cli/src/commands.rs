use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use noge_core::cooc_graph::KgGraph;
use noge_core::decoders::score_all_tails;
use noge_core::error::TokenKind;
use noge_core::eval::Metrics;
use noge_core::kg_data::{
    build_truth_index, build_vocabulary, encode_dataset, parse_triples, Dataset, RawSplits, Split, TruthIndex,
};
use noge_core::training::{BestTracker, Model, Trainer, TrainingContext};
use noge_core::Error;
use serde::Serialize;

use crate::artifacts::{
    adjacency_bytes, dict_text, load_dataset, split_file, triples_bytes, write_atomic, DirLock, Manifest,
    ADJACENCY_FILE, ADJACENCY_TSV_FILE, ENTITIES_FILE, MANIFEST_FILE, RELATIONS_FILE,
};
use crate::checkpoint::{Checkpoint, CheckpointMeta};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LAST_CHECKPOINT: &str = "last.ckpt";
pub const TRAIN_LOG: &str = "train.log";

pub fn report_file(split: Split) -> String {
    format!("eval_{}.json", split.name())
}

fn emit(out: &mut dyn Write, line: &str) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn read_split_text(dir: &Path, split: Split) -> CliResult<Vec<noge_core::kg_data::RawTriple>> {
    let path = dir.join(format!("{}.txt", split.name()));
    let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    parse_triples(&text).map_err(|e| CliError::format(&path, e.to_string()))
}

/// Parses the raw splits, writes vocabulary, encoded splits, adjacency and manifest.
pub fn cmd_preprocess(cfg: &RunConfig, dump_adjacency: bool, out: &mut dyn Write) -> CliResult<Manifest> {
    let raw = RawSplits {
        train: read_split_text(&cfg.dataset_dir, Split::Train)?,
        valid: read_split_text(&cfg.dataset_dir, Split::Valid)?,
        test: read_split_text(&cfg.dataset_dir, Split::Test)?,
    };
    let vocab = build_vocabulary(&raw.train)?;
    let dataset = encode_dataset(&raw, &vocab, cfg.inverse_relations)?;
    let adjacency = KgGraph::<f64>::raw_adjacency(&dataset, cfg.adjacency)?;

    let dir = &cfg.output_dir;
    let _lock = DirLock::acquire(dir)?;
    write_atomic(&dir.join(ENTITIES_FILE), dict_text(vocab.entities()).as_bytes())?;
    write_atomic(&dir.join(RELATIONS_FILE), dict_text(vocab.relations()).as_bytes())?;
    for s in Split::ALL {
        write_atomic(&dir.join(split_file(s)), &triples_bytes(dataset.originals(s)))?;
    }
    write_atomic(&dir.join(ADJACENCY_FILE), &adjacency_bytes(&adjacency))?;
    if dump_adjacency {
        write_atomic(&dir.join(ADJACENCY_TSV_FILE), adjacency.to_tsv().as_bytes())?;
    }
    let manifest = Manifest {
        entities: vocab.num_entities(),
        relations: vocab.num_relations(),
        nodes: vocab.node_count(),
        inverse_relations: cfg.inverse_relations,
        working_relations: dataset.num_relations(),
        working_nodes: dataset.node_count(),
        train: dataset.originals(Split::Train).len(),
        valid: dataset.originals(Split::Valid).len(),
        test: dataset.originals(Split::Test).len(),
        adjacency: cfg.adjacency,
        adjacency_nnz: adjacency.matrix.nnz(),
    };
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    emit(out, &serde_json::to_string(&manifest).expect("manifest serializes"))?;
    Ok(manifest)
}

fn load_graph(cfg: &RunConfig) -> CliResult<(Dataset, KgGraph<f64>)> {
    let dataset = load_dataset(&cfg.output_dir, cfg.inverse_relations)?;
    let graph = KgGraph::build(&dataset, cfg.adjacency, cfg.self_loop_mode)?;
    Ok((dataset, graph))
}

fn check_layout(ck: &Checkpoint, dataset: &Dataset, path: &Path) -> CliResult<()> {
    let h = &ck.header;
    if h.num_entities != dataset.num_entities() || h.num_relations != dataset.num_relations() {
        return Err(CliError::Usage(format!(
            "{}: checkpoint has {} entities / {} relations, preprocessed data has {} / {}",
            path.display(),
            h.num_entities,
            h.num_relations,
            dataset.num_entities(),
            dataset.num_relations()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub epochs_run: u64,
    pub final_epoch: u64,
    pub best_epoch: u64,
    pub best_valid_mrr: Option<f64>,
    pub last_loss: Option<f64>,
}

fn save_best(cfg: &RunConfig, trainer: &Trainer<f64>, path: &Path) -> CliResult<()> {
    let meta = CheckpointMeta {
        epoch: trainer.tracker.best_epoch,
        best_epoch: trainer.tracker.best_epoch,
        best_valid_mrr: trainer.tracker.best_mrr,
    };
    Checkpoint::new(cfg, &trainer.best, None, meta).save(path)
}

fn save_last(cfg: &RunConfig, trainer: &Trainer<f64>, path: &Path) -> CliResult<()> {
    let meta = CheckpointMeta {
        epoch: trainer.epoch,
        best_epoch: trainer.tracker.best_epoch,
        best_valid_mrr: trainer.tracker.best_mrr,
    };
    Checkpoint::new(cfg, &trainer.model, Some(&trainer.adam), meta).save(path)
}

/// Keeps the first `epochs` lines of the training log, so a resumed run
/// appends exactly where its checkpoint left off.
fn truncate_log(path: &Path, epochs: u64) -> CliResult<()> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
        Err(e) => return Err(CliError::io(path, e)),
    };
    let kept: String = text.lines().take(epochs as usize).map(|l| format!("{l}\n")).collect();
    write_atomic(path, kept.as_bytes())
}

/// Trains from scratch (or from `last.ckpt` with `resume`) up to `train.epochs`.
pub fn cmd_train(cfg: &RunConfig, resume: bool, out: &mut dyn Write) -> CliResult<TrainSummary> {
    let dir = &cfg.output_dir;
    let _lock = DirLock::acquire(dir)?;
    let (dataset, graph) = load_graph(cfg)?;
    if dataset.valid.is_empty() {
        return Err(Error::Config("validation split is empty".into()).into());
    }
    let best_path = dir.join(BEST_CHECKPOINT);
    let last_path = dir.join(LAST_CHECKPOINT);
    let log_path = dir.join(TRAIN_LOG);

    let mut trainer = if resume {
        let last = Checkpoint::load(&last_path)?;
        last.check_digest(cfg, &last_path)?;
        check_layout(&last, &dataset, &last_path)?;
        let adam = last
            .adam
            .clone()
            .ok_or_else(|| CliError::format(&last_path, "checkpoint has no optimizer state to resume from"))?;
        let best = Checkpoint::load(&best_path)?;
        best.check_digest(cfg, &best_path)?;
        let mut t = Trainer::new(last.model()?, cfg.train)?;
        t.adam = adam;
        t.epoch = last.header.epoch;
        t.best = best.model()?;
        t.tracker = BestTracker {
            best_mrr: last.header.best_valid_mrr,
            best_epoch: last.header.best_epoch,
        };
        truncate_log(&log_path, t.epoch)?;
        t
    } else {
        let model = Model::init(cfg.model(), dataset.num_entities(), dataset.num_relations(), cfg.train.seed)?;
        let t = Trainer::new(model, cfg.train)?;
        write_atomic(&log_path, b"")?;
        save_best(cfg, &t, &best_path)?;
        save_last(cfg, &t, &last_path)?;
        t
    };

    let ctx = TrainingContext::new(&dataset, &graph);
    let mut log = OpenOptions::new()
        .append(true)
        .create(true)
        .open(&log_path)
        .map_err(|e| CliError::io(&log_path, e))?;
    let start = trainer.epoch;
    let mut last_loss = None;
    while !trainer.is_done() {
        let outcome = trainer.run_epoch(&ctx)?;
        if outcome.improved {
            save_best(cfg, &trainer, &best_path)?;
        }
        save_last(cfg, &trainer, &last_path)?;
        let line = outcome.log.to_json_line();
        writeln!(log, "{line}").map_err(|e| CliError::io(&log_path, e))?;
        emit(out, &line)?;
        last_loss = Some(outcome.log.loss);
    }
    Ok(TrainSummary {
        epochs_run: trainer.epoch - start,
        final_epoch: trainer.epoch,
        best_epoch: trainer.tracker.best_epoch,
        best_valid_mrr: trainer.tracker.best_mrr,
        last_loss,
    })
}

fn checkpoint_path(cfg: &RunConfig, explicit: Option<&Path>) -> PathBuf {
    explicit.map_or_else(|| cfg.output_dir.join(BEST_CHECKPOINT), Path::to_path_buf)
}

fn load_model(cfg: &RunConfig, path: &Path, dataset: &Dataset) -> CliResult<Model<f64>> {
    let ck = Checkpoint::load(path)?;
    ck.check_digest(cfg, path)?;
    check_layout(&ck, dataset, path)?;
    ck.model()
}

/// Filtered metrics of a checkpoint on `split`; the report is printed and
/// written to `eval_<split>.json` in the output directory.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: Option<&Path>, split: Split, out: &mut dyn Write) -> CliResult<Metrics> {
    let (dataset, graph) = load_graph(cfg)?;
    let path = checkpoint_path(cfg, checkpoint);
    let model = load_model(cfg, &path, &dataset)?;
    let metrics = TrainingContext::new(&dataset, &graph).evaluate(&model, split)?;
    let line = metrics.to_json_line(split);
    {
        let _lock = DirLock::acquire(&cfg.output_dir)?;
        write_atomic(&cfg.output_dir.join(report_file(split)), format!("{line}\n").as_bytes())?;
    }
    emit(out, &line)?;
    Ok(metrics)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScoreQuery {
    Tails { head: String, relation: String },
    Heads { relation: String, tail: String },
    Triple { head: String, relation: String, tail: String },
}

impl std::str::FromStr for ScoreQuery {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let usage = || CliError::Usage(format!("query must look like \"h r ?\", \"? r t\" or \"h r t\", got {s:?}"));
        let [h, r, t] = toks[..] else {
            return Err(usage());
        };
        let own = |x: &str| x.to_owned();
        match (h, r, t) {
            (_, "?", _) | ("?", _, "?") => Err(usage()),
            ("?", r, t) => Ok(ScoreQuery::Heads { relation: own(r), tail: own(t) }),
            (h, r, "?") => Ok(ScoreQuery::Tails { head: own(h), relation: own(r) }),
            (h, r, t) => Ok(ScoreQuery::Triple { head: own(h), relation: own(r), tail: own(t) }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntity {
    pub rank: usize,
    pub entity: String,
    pub score: f64,
    pub probability: f64,
    /// Present in train, valid or test for this query.
    pub known: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleScore {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub score: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScoreOutput {
    Ranked(Vec<RankedEntity>),
    Triple(TripleScore),
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn resolve_tokens(dataset: &Dataset, entities: &[&str], relation: &str) -> CliResult<(Vec<usize>, usize)> {
    let vocab = &dataset.vocabulary;
    let mut missing = Vec::new();
    let ids: Vec<usize> = entities
        .iter()
        .filter_map(|e| {
            let id = vocab.entity_id(e);
            if id.is_none() {
                missing.push((TokenKind::Entity, (*e).to_owned()));
            }
            id
        })
        .collect();
    let r = vocab.relation_id(relation);
    if r.is_none() {
        missing.push((TokenKind::Relation, relation.to_owned()));
    }
    if !missing.is_empty() {
        return Err(Error::UnknownTokens(missing).into());
    }
    Ok((ids, r.unwrap()))
}

fn rank_entities(dataset: &Dataset, scores: &[f64], known: &std::collections::BTreeSet<usize>, top_k: usize) -> Vec<RankedEntity> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(top_k)
        .enumerate()
        .map(|(i, e)| RankedEntity {
            rank: i + 1,
            entity: dataset.vocabulary.entity(e).unwrap_or_default().to_owned(),
            score: scores[e],
            probability: sigmoid(scores[e]),
            known: known.contains(&e),
        })
        .collect()
}

/// Scores one triple, or ranks every entity for a wildcard slot.
///
/// A head query `? r t` is answered with the inverse relation, `(t, r⁻¹, ?)`,
/// when the run uses inverse relations, matching evaluation.
pub fn cmd_score(
    cfg: &RunConfig,
    checkpoint: Option<&Path>,
    query: &ScoreQuery,
    top_k: usize,
    out: &mut dyn Write,
) -> CliResult<ScoreOutput> {
    let (dataset, graph) = load_graph(cfg)?;
    let path = checkpoint_path(cfg, checkpoint);
    let model = load_model(cfg, &path, &dataset)?;
    let input = model.forward(&graph)?.input;
    let ne = model.num_entities;
    let truth: TruthIndex = build_truth_index(&dataset, &Split::ALL);

    let output = match query {
        ScoreQuery::Tails { head, relation } => {
            let (ids, r) = resolve_tokens(&dataset, &[head], relation)?;
            let scores = score_all_tails(&input, ids[0], model.relation_node(r), ne)?;
            ScoreOutput::Ranked(rank_entities(&dataset, &scores, truth.tails(ids[0], r), top_k))
        }
        ScoreQuery::Heads { relation, tail } => {
            let (ids, r) = resolve_tokens(&dataset, &[tail], relation)?;
            let t = ids[0];
            let scores = match dataset.inverse_relation(r) {
                Some(inv) => score_all_tails(&input, t, model.relation_node(inv), ne)?,
                None => noge_core::decoders::score_all_heads(&input, model.relation_node(r), t, ne)?,
            };
            ScoreOutput::Ranked(rank_entities(&dataset, &scores, truth.heads(t, r), top_k))
        }
        ScoreQuery::Triple { head, relation, tail } => {
            let (ids, r) = resolve_tokens(&dataset, &[head, tail], relation)?;
            let score = score_all_tails(&input, ids[0], model.relation_node(r), ne)?[ids[1]];
            ScoreOutput::Triple(TripleScore {
                head: head.clone(),
                relation: relation.clone(),
                tail: tail.clone(),
                score,
                probability: sigmoid(score),
            })
        }
    };
    match &output {
        ScoreOutput::Ranked(rows) => {
            for r in rows {
                emit(out, &serde_json::to_string(r).expect("row serializes"))?;
            }
        }
        ScoreOutput::Triple(t) => emit(out, &serde_json::to_string(t).expect("row serializes"))?,
    }
    Ok(output)
}
