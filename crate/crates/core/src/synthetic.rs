//! Small knowledge graphs with a planted relational pattern.
//!
//! Entities sit in clusters; position 0 of each cluster is its hub. Relations
//! link entities by cluster membership and to hubs at cluster offsets that
//! compose (`skip` is `next` applied twice), so held-out facts are implied by
//! training facts about the rest of the cluster.

use crate::kg_data::{RawSplits, RawTriple};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlantedSpec {
    pub clusters: usize,
    pub cluster_size: usize,
    pub valid: usize,
    pub test: usize,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            clusters: 8,
            cluster_size: 5,
            valid: 40,
            test: 40,
        }
    }
}

/// Stream id reserved for dataset generation, apart from the training streams.
const GENERATOR_STREAM: u64 = u64::MAX;

fn entity(cluster: usize, position: usize) -> String {
    format!("c{cluster}_p{position}")
}

/// Every fact of the planted graph, in a fixed order.
pub fn planted_facts(spec: &PlantedSpec) -> Vec<RawTriple> {
    let (nc, ns) = (spec.clusters, spec.cluster_size);
    let mut out = Vec::new();
    for c in 0..nc {
        for p in 0..ns {
            let x = entity(c, p);
            for q in (0..ns).filter(|&q| q != p) {
                out.push(RawTriple::new(&x, "same_cluster", entity(c, q)));
            }
            out.push(RawTriple::new(&x, "next", entity((c + 1) % nc, 0)));
            out.push(RawTriple::new(&x, "skip", entity((c + 2) % nc, 0)));
            for q in 0..ns.min(3) {
                out.push(RawTriple::new(&x, "opposite", entity((c + nc / 2) % nc, q)));
            }
        }
    }
    out
}

/// Shuffles the planted facts with `seed` and holds out `valid` and `test`
/// triples, re-drawing until every entity and relation still occurs in train.
pub fn planted_kg(spec: &PlantedSpec, seed: u64) -> RawSplits {
    let facts = planted_facts(spec);
    assert!(spec.valid + spec.test < facts.len(), "held-out size exceeds the graph");
    let mut r = rng::stream(seed, GENERATOR_STREAM);
    loop {
        let mut order = facts.clone();
        rng::shuffle(&mut r, &mut order);
        let test = order.split_off(order.len() - spec.test);
        let valid = order.split_off(order.len() - spec.valid);
        let covered = |tok: &str, rel: bool| {
            order
                .iter()
                .any(|t| if rel { t.relation == tok } else { t.head == tok || t.tail == tok })
        };
        let ok = facts.iter().all(|f| covered(&f.head, false) && covered(&f.tail, false) && covered(&f.relation, true));
        if ok {
            return RawSplits { train: order, valid, test };
        }
    }
}
