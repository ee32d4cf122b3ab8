//! Filtered link-prediction ranking.
//!
//! Every test triple `(h, r, t)` yields a tail query `(h, r, ?)` and a head
//! query `(?, r, t)`. Other known-true answers (train ∪ valid ∪ test) are
//! removed from the candidate list, and ties count against the model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cooc_graph::KgGraph;
use crate::decoders::{score_all_heads, score_queries, NodeQuery};
use crate::error::{Error, Result};
use crate::kg_data::{Dataset, Split, Triple, TruthIndex};
use crate::scalar::Scalar;
use crate::training::Model;

/// Queries scored per decoder call during evaluation.
const EVAL_CHUNK: usize = 256;

/// `1 + #{e ∉ filter, e ≠ target : score[e] ≥ score[target]}`.
pub fn filtered_rank<T: Scalar>(scores: &[T], target: usize, filter: &BTreeSet<usize>) -> usize {
    let s = scores[target];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(e, &v)| e != target && v >= s && !filter.contains(&e))
        .count()
}

/// Unfiltered variant, for comparison with published raw numbers.
pub fn raw_rank<T: Scalar>(scores: &[T], target: usize) -> usize {
    filtered_rank(scores, target, &BTreeSet::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub mrr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
    pub query_count: usize,
}

impl Metrics {
    pub fn from_ranks(ranks: &[usize]) -> Self {
        if ranks.is_empty() {
            return Metrics::default();
        }
        let n = ranks.len() as f64;
        let hits = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
        Metrics {
            mrr: ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n,
            hits1: hits(1),
            hits3: hits(3),
            hits10: hits(10),
            query_count: ranks.len(),
        }
    }

    /// One-line JSON report for `split`.
    pub fn to_json_line(&self, split: Split) -> String {
        format!(
            "{{\"split\": \"{}\", \"mrr\": {}, \"hits1\": {}, \"hits3\": {}, \"hits10\": {}, \"queries\": {}}}",
            split.name(),
            self.mrr,
            self.hits1,
            self.hits3,
            self.hits10,
            self.query_count
        )
    }
}

/// One ranking query in the working relation space: score every entity in the
/// open slot and rank `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingQuery {
    /// `(head, r, ?)`
    Tail { head: usize, relation: usize, target: usize },
    /// `(?, r, tail)` with no inverse relation to rewrite it.
    Head { tail: usize, relation: usize, target: usize },
}

/// Tail and head queries for each triple, in triple order (tail query first).
/// With inverse augmentation the head query becomes a tail query on `r⁻¹`.
pub fn ranking_queries(dataset: &Dataset, triples: &[Triple]) -> Vec<RankingQuery> {
    let mut out = Vec::with_capacity(2 * triples.len());
    for t in triples {
        out.push(RankingQuery::Tail { head: t.h, relation: t.r, target: t.t });
        out.push(match dataset.inverse_relation(t.r) {
            Some(inv) => RankingQuery::Tail { head: t.t, relation: inv, target: t.h },
            None => RankingQuery::Head { tail: t.t, relation: t.r, target: t.h },
        });
    }
    out
}

/// Filtered ranks for `queries`, in order.
pub fn rank_queries<T: Scalar>(
    model: &Model<T>,
    graph: &KgGraph<T>,
    queries: &[RankingQuery],
    truth: &TruthIndex,
) -> Result<Vec<usize>> {
    let fwd = model.forward(graph)?;
    let ne = model.num_entities;
    let mut ranks = vec![0usize; queries.len()];

    let tails: Vec<(usize, usize, usize, usize)> = queries
        .iter()
        .enumerate()
        .filter_map(|(i, q)| match *q {
            RankingQuery::Tail { head, relation, target } => Some((i, head, relation, target)),
            RankingQuery::Head { .. } => None,
        })
        .collect();
    for chunk in tails.chunks(EVAL_CHUNK) {
        let nq: Vec<NodeQuery> = chunk.iter().map(|&(_, h, r, _)| (h, model.relation_node(r))).collect();
        let (scores, _) = score_queries(&fwd.input, &nq, ne)?;
        for (row, &(i, h, r, target)) in chunk.iter().enumerate() {
            let s = scores.row(row);
            ranks[i] = filtered_rank(s.as_slice().unwrap(), target, truth.tails(h, r));
        }
    }

    for (i, q) in queries.iter().enumerate() {
        if let RankingQuery::Head { tail, relation, target } = *q {
            let s = score_all_heads(&fwd.input, model.relation_node(relation), tail, ne)?;
            ranks[i] = filtered_rank(&s, target, truth.heads(tail, relation));
        }
    }
    Ok(ranks)
}

/// Filtered metrics over both directions of every triple in `triples`
/// (which must be un-augmented originals).
pub fn evaluate_split<T: Scalar>(
    model: &Model<T>,
    graph: &KgGraph<T>,
    dataset: &Dataset,
    triples: &[Triple],
    truth: &TruthIndex,
) -> Result<Metrics> {
    if model.num_entities != dataset.num_entities() || model.num_relations != dataset.num_relations() {
        return Err(Error::shape(
            "model/dataset layout",
            format!("{} entities, {} relations", dataset.num_entities(), dataset.num_relations()),
            format!("{} entities, {} relations", model.num_entities, model.num_relations),
        ));
    }
    let queries = ranking_queries(dataset, triples);
    Ok(Metrics::from_ranks(&rank_queries(model, graph, &queries, truth)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        let scores = [0.5f64, 0.9, 0.5, 0.1];
        // tie at 0.5 counts against the target, 0.9 beats it
        assert_eq!(raw_rank(&scores, 0), 3);
        assert_eq!(raw_rank(&scores, 1), 1);
        let filter: BTreeSet<usize> = [1].into();
        assert_eq!(filtered_rank(&scores, 0, &filter), 2);
        // the target itself is never filtered out of its own rank
        let filter: BTreeSet<usize> = [0, 1, 2].into();
        assert_eq!(filtered_rank(&scores, 0, &filter), 1);
        assert_eq!(raw_rank(&[1.0f64; 5], 2), 5);
    }

    #[test]
    fn metrics_from_ranks() {
        let m = Metrics::from_ranks(&[1, 2, 4]);
        assert!((m.mrr - 7.0 / 12.0).abs() < 1e-15);
        assert!((m.hits1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.hits3 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.hits10, 1.0);
        assert_eq!(m.query_count, 3);
        assert_eq!(Metrics::from_ranks(&[]), Metrics::default());
    }

    #[test]
    fn report_line() {
        let m = Metrics::from_ranks(&[1, 2]);
        assert_eq!(
            m.to_json_line(Split::Test),
            r#"{"split": "test", "mrr": 0.75, "hits1": 0.5, "hits3": 1, "hits10": 1, "queries": 2}"#
        );
    }
}
