//! Levi graph over entity and relation nodes with co-occurrence edge weights.
//!
//! Every training triple `(h, r, t)` links its three nodes pairwise. With
//! `#C` the number of triples, `#C(v)` the number of triples containing `v`
//! and `#C(v, u)` the number of triples containing both:
//!
//! * entity-entity: `w[v,u] = #C(v,u) / #C(v)` (conditional probability),
//! * any pair touching a relation node: `w[v,u] = #C(v,u) / #C` (joint),
//! * diagonal `1`, every other entry `0`.
//!
//! The message-passing matrix is `D^-1/2 (W + I) D^-1/2` with `D` the row sums
//! of `W + I`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_data::{Dataset, Triple};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyKind {
    #[default]
    Weighted,
    Binary,
}

impl AdjacencyKind {
    pub fn name(self) -> &'static str {
        match self {
            AdjacencyKind::Weighted => "weighted",
            AdjacencyKind::Binary => "binary",
        }
    }
}

/// Whether re-normalisation adds the identity to an adjacency that already has a unit diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelfLoopMode {
    /// `Ã = W + I`, so the diagonal becomes 2.
    #[default]
    PaperLiteral,
    /// `Ã = W`, diagonal stays 1.
    Single,
}

impl SelfLoopMode {
    pub fn name(self) -> &'static str {
        match self {
            SelfLoopMode::PaperLiteral => "paper_literal",
            SelfLoopMode::Single => "single",
        }
    }
}

/// Compressed sparse rows with ascending column order inside each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> Csr<T> {
    /// Builds from `(row, col) -> value`; the map order is already row-major sorted.
    pub fn from_map(n: usize, entries: &BTreeMap<(usize, usize), T>) -> Result<Self> {
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for (&(r, c), &v) in entries {
            if r >= n || c >= n {
                return Err(Error::shape("Csr::from_map", n, format!("({r}, {c})")));
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Csr { n, row_ptr, cols, vals })
    }

    pub fn from_raw(n: usize, row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<T>) -> Result<Self> {
        let ok = row_ptr.len() == n + 1
            && row_ptr.first() == Some(&0)
            && row_ptr.windows(2).all(|w| w[0] <= w[1])
            && row_ptr[n] == cols.len()
            && cols.len() == vals.len()
            && cols.iter().all(|&c| c < n)
            && (0..n).all(|r| cols[row_ptr[r]..row_ptr[r + 1]].windows(2).all(|w| w[0] < w[1]));
        if !ok {
            return Err(Error::Inconsistent("malformed CSR arrays".into()));
        }
        Ok(Csr { n, row_ptr, cols, vals })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn vals(&self) -> &[T] {
        &self.vals
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        let map: BTreeMap<(usize, usize), T> = self.entries().map(|(r, c, v)| ((c, r), v)).collect();
        Csr::from_map(self.n, &map).expect("transpose keeps bounds")
    }

    pub fn to_dense(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.n, self.n));
        for (r, c, v) in self.entries() {
            out[[r, c]] = v;
        }
        out
    }

    /// `self · x` for a dense `n × k` matrix. Rows are independent, so the
    /// parallel split leaves results bit-identical.
    pub fn matmul(&self, x: &Array2<T>) -> Result<Array2<T>> {
        if x.nrows() != self.n {
            return Err(Error::shape("Csr::matmul", self.n, x.nrows()));
        }
        let k = x.ncols();
        let mut out = Array2::<T>::zeros((self.n, k));
        out.axis_iter_mut(ndarray::Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(r, mut dst)| {
                let dst = dst.as_slice_mut().expect("standard layout");
                for (c, w) in self.row(r) {
                    let src = x.row(c);
                    for (d, s) in dst.iter_mut().zip(src.iter()) {
                        *d += w * *s;
                    }
                }
            });
        Ok(out)
    }
}

/// Co-occurrence statistics of a triple set. Pair counts are keyed by `(min, max)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoocCounts {
    pub pair_count: BTreeMap<(usize, usize), u64>,
    pub node_count: Vec<u64>,
    pub total: u64,
    pub num_entities: usize,
}

impl CoocCounts {
    pub fn pair(&self, u: usize, v: usize) -> u64 {
        self.pair_count.get(&(u.min(v), u.max(v))).copied().unwrap_or(0)
    }

    pub fn node(&self, v: usize) -> u64 {
        self.node_count[v]
    }

    pub fn node_total(&self) -> usize {
        self.node_count.len()
    }

    pub fn is_entity(&self, v: usize) -> bool {
        v < self.num_entities
    }
}

/// Counts co-occurrences over `triples`, with relations placed after the
/// `num_entities` entity nodes.
///
/// Each triple contributes once to every distinct node it contains and once
/// to every distinct unordered node pair among `{h, r, t}`.
pub fn count_cooccurrence(triples: &[Triple], num_entities: usize, num_relations: usize) -> CoocCounts {
    let mut counts = CoocCounts {
        node_count: vec![0; num_entities + num_relations],
        total: triples.len() as u64,
        num_entities,
        ..Default::default()
    };
    for t in triples {
        let (h, r, tl) = (t.h, num_entities + t.r, t.t);
        let mut nodes = [h, r, tl];
        nodes.sort_unstable();
        let mut distinct = nodes.to_vec();
        distinct.dedup();
        for &v in &distinct {
            counts.node_count[v] += 1;
        }
        let mut pairs = [(h.min(tl), h.max(tl)), (h.min(r), h.max(r)), (r.min(tl), r.max(tl))].to_vec();
        pairs.sort_unstable();
        pairs.dedup();
        for p in pairs {
            *counts.pair_count.entry(p).or_insert(0) += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency<T> {
    pub kind: AdjacencyKind,
    pub matrix: Csr<T>,
}

impl<T: Scalar> WeightedAdjacency<T> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn get(&self, v: usize, u: usize) -> T {
        self.matrix.get(v, u)
    }

    /// `row<TAB>col<TAB>weight` lines, rows ascending, shortest round-trip decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (r, c, v) in self.matrix.entries() {
            let _ = writeln!(out, "{r}\t{c}\t{v}");
        }
        out
    }
}

pub fn build_weighted_adjacency<T: Scalar>(counts: &CoocCounts) -> Result<WeightedAdjacency<T>> {
    let n = counts.node_total();
    if counts.total == 0 && !counts.pair_count.is_empty() {
        return Err(Error::Inconsistent("pair counts without triples".into()));
    }
    let total = T::lit(counts.total as f64);
    let mut map = BTreeMap::new();
    for v in 0..n {
        map.insert((v, v), T::one());
    }
    for (&(u, v), &c) in &counts.pair_count {
        if u == v || c == 0 {
            continue;
        }
        for (row, col) in [(u, v), (v, u)] {
            let w = if counts.is_entity(row) && counts.is_entity(col) {
                let nr = counts.node(row);
                if nr < c {
                    return Err(Error::Inconsistent(format!(
                        "#C({row},{col}) = {c} exceeds #C({row}) = {nr}"
                    )));
                }
                T::lit(c as f64) / T::lit(nr as f64)
            } else {
                T::lit(c as f64) / total
            };
            map.insert((row, col), w);
        }
    }
    Ok(WeightedAdjacency {
        kind: AdjacencyKind::Weighted,
        matrix: Csr::from_map(n, &map)?,
    })
}

/// Same support as [`build_weighted_adjacency`], every stored entry `1`.
pub fn build_binary_adjacency<T: Scalar>(counts: &CoocCounts) -> Result<WeightedAdjacency<T>> {
    let n = counts.node_total();
    let mut map = BTreeMap::new();
    for v in 0..n {
        map.insert((v, v), T::one());
    }
    for (&(u, v), &c) in &counts.pair_count {
        if c > 0 {
            map.insert((u, v), T::one());
            map.insert((v, u), T::one());
        }
    }
    Ok(WeightedAdjacency {
        kind: AdjacencyKind::Binary,
        matrix: Csr::from_map(n, &map)?,
    })
}

pub fn build_adjacency<T: Scalar>(counts: &CoocCounts, kind: AdjacencyKind) -> Result<WeightedAdjacency<T>> {
    match kind {
        AdjacencyKind::Weighted => build_weighted_adjacency(counts),
        AdjacencyKind::Binary => build_binary_adjacency(counts),
    }
}

/// Coefficients `a[v,u]` used by the encoder, plus their transpose for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency<T> {
    pub matrix: Csr<T>,
    pub transpose: Csr<T>,
}

impl<T: Scalar> NormalizedAdjacency<T> {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn get(&self, v: usize, u: usize) -> T {
        self.matrix.get(v, u)
    }

    pub fn from_matrix(matrix: Csr<T>) -> Result<Self> {
        for r in 0..matrix.dim() {
            if matrix.row(r).next().is_none() {
                return Err(Error::Inconsistent(format!("row {r} of normalized adjacency is empty")));
            }
        }
        if matrix.vals().iter().any(|v| !v.is_finite()) {
            return Err(Error::Inconsistent("non-finite normalized coefficient".into()));
        }
        let transpose = matrix.transpose();
        Ok(NormalizedAdjacency { matrix, transpose })
    }
}

pub fn renormalize<T: Scalar>(adj: &WeightedAdjacency<T>, mode: SelfLoopMode) -> Result<NormalizedAdjacency<T>> {
    let n = adj.dim();
    if n == 0 {
        return Err(Error::Degenerate("empty adjacency".into()));
    }
    let mut tilde: BTreeMap<(usize, usize), T> = adj.matrix.entries().map(|(r, c, v)| ((r, c), v)).collect();
    if mode == SelfLoopMode::PaperLiteral {
        for v in 0..n {
            *tilde.entry((v, v)).or_insert(T::zero()) += T::one();
        }
    }
    let mut degree = vec![T::zero(); n];
    for (&(r, _), &v) in &tilde {
        degree[r] += v;
    }
    if let Some(v) = degree.iter().position(|d| *d <= T::zero() || !d.is_finite()) {
        return Err(Error::Inconsistent(format!("node {v} has degree {}", degree[v])));
    }
    let inv_sqrt: Vec<T> = degree.iter().map(|d| T::one() / d.sqrt()).collect();
    for (&(r, c), v) in tilde.iter_mut() {
        *v = *v * inv_sqrt[r] * inv_sqrt[c];
    }
    NormalizedAdjacency::from_matrix(Csr::from_map(n, &tilde)?)
}

/// Everything the encoder needs about the graph: node layout and coefficients.
#[derive(Debug, Clone)]
pub struct KgGraph<T> {
    pub num_entities: usize,
    pub num_relations: usize,
    pub adjacency: NormalizedAdjacency<T>,
}

impl<T: Scalar> KgGraph<T> {
    /// Counts co-occurrence on the working training split only.
    pub fn build(dataset: &Dataset, kind: AdjacencyKind, mode: SelfLoopMode) -> Result<Self> {
        let weighted = Self::raw_adjacency(dataset, kind)?;
        Ok(KgGraph {
            num_entities: dataset.num_entities(),
            num_relations: dataset.num_relations(),
            adjacency: renormalize(&weighted, mode)?,
        })
    }

    pub fn raw_adjacency(dataset: &Dataset, kind: AdjacencyKind) -> Result<WeightedAdjacency<T>> {
        let counts = count_cooccurrence(&dataset.train, dataset.num_entities(), dataset.num_relations());
        build_adjacency(&counts, kind)
    }

    pub fn node_count(&self) -> usize {
        self.num_entities + self.num_relations
    }

    pub fn relation_node(&self, r: usize) -> usize {
        self.num_entities + r
    }
}
