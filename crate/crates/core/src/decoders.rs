//! Triple scoring heads.
//!
//! QuatE: `f(h, r, t) = (v_h ⊗ v_r◁) • v_t`, where `◁` normalizes every
//! quaternion coordinate of the relation. DistMult: `Σ_i h_i r_i t_i`.
//!
//! Batched scoring works on a table of node representations (rows are Levi
//! graph nodes) and a list of `(head node, relation node)` queries, and scores
//! each query against entity rows `0..num_entities`.

use ndarray::{s, Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::{EncoderKind, NodeReps};
use crate::error::{Error, Result};
use crate::hypercomplex::{
    concat_dual_to_quat, hamilton, inner_slices, row_slices, split_quat_to_dual, view_parts, QuatBatch,
    QuatVector, Quaternion,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    #[default]
    Quate,
    Distmult,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Quate => "quate",
            DecoderKind::Distmult => "distmult",
        }
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quate" => Ok(DecoderKind::Quate),
            "distmult" => Ok(DecoderKind::Distmult),
            other => Err(Error::Config(format!("unknown decoder {other:?}"))),
        }
    }
}

/// Checks that the decoder can consume the encoder's output algebra.
pub fn check_compatible(encoder: EncoderKind, decoder: DecoderKind) -> Result<()> {
    if encoder == EncoderKind::Gcn && decoder == DecoderKind::Quate {
        return Err(Error::Config("the quate decoder needs a quaternion-valued encoder (dualqgnn or qgnn)".into()));
    }
    Ok(())
}

/// Node table in the form a decoder reads it.
#[derive(Debug, Clone, PartialEq)]
pub enum DecoderInput<T> {
    Quat(QuatBatch<T>),
    Real(Array2<T>),
}

impl<T: Scalar> DecoderInput<T> {
    pub fn rows(&self) -> usize {
        match self {
            DecoderInput::Quat(q) => q.rows(),
            DecoderInput::Real(m) => m.nrows(),
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            DecoderInput::Quat(q) => DecoderInput::Quat(QuatBatch::zeros(q.rows(), q.coords())),
            DecoderInput::Real(m) => DecoderInput::Real(Array2::zeros(m.raw_dim())),
        }
    }
}

/// Final encoder output to decoder input. Dual reps are concatenated into
/// `2·dim` quaternion coordinates; DistMult flattens every component.
pub fn decoder_input<T: Scalar>(reps: &NodeReps<T>, kind: DecoderKind) -> Result<DecoderInput<T>> {
    check_compatible(reps.kind(), kind)?;
    Ok(match (kind, reps) {
        (DecoderKind::Quate, NodeReps::Dual(d)) => DecoderInput::Quat(concat_dual_to_quat(d)),
        (DecoderKind::Quate, NodeReps::Quat(q)) => DecoderInput::Quat(q.clone()),
        (DecoderKind::Quate, NodeReps::Real(_)) => unreachable!("rejected by check_compatible"),
        (DecoderKind::Distmult, NodeReps::Real(m)) => DecoderInput::Real(m.clone()),
        (DecoderKind::Distmult, r) => {
            let views: Vec<_> = r.parts().into_iter().map(|m| m.view()).collect();
            DecoderInput::Real(ndarray::concatenate(Axis(1), &views).expect("equal rows").as_standard_layout().into_owned())
        }
    })
}

/// Reverse of [`decoder_input`].
pub fn decoder_input_backward<T: Scalar>(grad: DecoderInput<T>, like: &NodeReps<T>) -> Result<NodeReps<T>> {
    Ok(match (grad, like) {
        (DecoderInput::Quat(g), NodeReps::Dual(_)) => NodeReps::Dual(split_quat_to_dual(&g)),
        (DecoderInput::Quat(g), NodeReps::Quat(_)) => NodeReps::Quat(g),
        (DecoderInput::Real(g), NodeReps::Real(_)) => NodeReps::Real(g),
        (DecoderInput::Real(g), r) => {
            let n = r.coords();
            let mut k = 0;
            r.map_parts(|_| {
                let part = g.slice(s![.., k * n..(k + 1) * n]).to_owned();
                k += 1;
                part
            })
        }
        (DecoderInput::Quat(_), NodeReps::Real(_)) => {
            return Err(Error::shape("decoder_input_backward", "quaternion reps", "real reps"))
        }
    })
}

struct QuatQuery<T> {
    u: QuatVector<T>,
    r_hat: QuatVector<T>,
    r_norm: Vec<T>,
}

/// `u = h ⊗ r◁` coordinate-wise.
fn quate_query<T: Scalar>(h: [&[T]; 4], r: [&[T]; 4]) -> Result<QuatQuery<T>> {
    let n = h[0].len();
    let mut u = QuatVector::zeros(n);
    let mut r_hat = QuatVector::zeros(n);
    let mut r_norm = Vec::with_capacity(n);
    for j in 0..n {
        let rq = Quaternion::new(r[0][j], r[1][j], r[2][j], r[3][j]);
        let norm = rq.norm();
        if norm == T::zero() || !norm.is_finite() {
            return Err(Error::Degenerate(format!("relation coordinate {j} has norm {norm}")));
        }
        let rh = rq.scale(T::one() / norm);
        let hq = Quaternion::new(h[0][j], h[1][j], h[2][j], h[3][j]);
        u.set(j, hamilton(hq, rh));
        r_hat.set(j, rh);
        r_norm.push(norm);
    }
    Ok(QuatQuery { u, r_hat, r_norm })
}

fn quat_slices<T>(v: &QuatVector<T>) -> [&[T]; 4] {
    [&v.a, &v.b, &v.c, &v.d]
}

pub fn quate_score<T: Scalar>(v_h: &QuatVector<T>, v_r: &QuatVector<T>, v_t: &QuatVector<T>) -> Result<T> {
    if v_h.len() != v_r.len() || v_h.len() != v_t.len() {
        return Err(Error::shape("quate_score", v_h.len(), format!("{}/{}", v_r.len(), v_t.len())));
    }
    let q = quate_query(quat_slices(v_h), quat_slices(v_r))?;
    Ok(inner_slices(quat_slices(&q.u), quat_slices(v_t)))
}

#[inline]
fn distmult_slices<T: Scalar>(hr: &[T], t: &[T]) -> T {
    let mut acc = T::zero();
    for (a, b) in hr.iter().zip(t) {
        acc += *a * *b;
    }
    acc
}

fn hadamard<T: Scalar>(x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(a, b)| *a * *b).collect()
}

pub fn distmult_score<T: Scalar>(v_h: &[T], v_r: &[T], v_t: &[T]) -> Result<T> {
    if v_h.len() != v_r.len() || v_h.len() != v_t.len() {
        return Err(Error::shape("distmult_score", v_h.len(), format!("{}/{}", v_r.len(), v_t.len())));
    }
    Ok(distmult_slices(&hadamard(v_h, v_r), v_t))
}

/// A `(head node, relation node)` query; scored against every entity as tail.
pub type NodeQuery = (usize, usize);

/// Per-query intermediates needed by [`score_queries_backward`].
#[derive(Debug, Clone)]
pub enum ScoreCache<T> {
    Quate {
        u: QuatBatch<T>,
        r_hat: QuatBatch<T>,
        r_norm: Array2<T>,
    },
    Distmult {
        hr: Array2<T>,
    },
}

fn check_queries(rows: usize, queries: &[NodeQuery], num_entities: usize) -> Result<()> {
    if num_entities > rows {
        return Err(Error::shape("score_queries entities", rows, num_entities));
    }
    if let Some(q) = queries.iter().find(|(h, r)| *h >= rows || *r >= rows) {
        return Err(Error::shape("score_queries node", rows, format!("{q:?}")));
    }
    Ok(())
}

/// Scores each query against entity rows `0..num_entities`. Row `i` of the
/// result is bit-identical to per-triple [`quate_score`] / [`distmult_score`].
pub fn score_queries<T: Scalar>(
    input: &DecoderInput<T>,
    queries: &[NodeQuery],
    num_entities: usize,
) -> Result<(Array2<T>, ScoreCache<T>)> {
    check_queries(input.rows(), queries, num_entities)?;
    let b = queries.len();
    let mut scores = Array2::<T>::zeros((b, num_entities));
    match input {
        DecoderInput::Quat(x) => {
            let parts = x.parts();
            let per_query: Vec<QuatQuery<T>> = queries
                .par_iter()
                .map(|&(h, r)| quate_query(row_slices(parts, h), row_slices(parts, r)))
                .collect::<Result<_>>()?;
            scores
                .axis_iter_mut(Axis(0))
                .into_par_iter()
                .zip(per_query.par_iter())
                .for_each(|(mut row, q)| {
                    let u = quat_slices(&q.u);
                    for (e, s) in row.iter_mut().enumerate() {
                        *s = inner_slices(u, row_slices(parts, e));
                    }
                });
            let n = x.coords();
            let mut u = QuatBatch::zeros(b, n);
            let mut r_hat = QuatBatch::zeros(b, n);
            let mut r_norm = Array2::zeros((b, n));
            for (i, q) in per_query.iter().enumerate() {
                u.set_row(i, &q.u);
                r_hat.set_row(i, &q.r_hat);
                r_norm.row_mut(i).iter_mut().zip(&q.r_norm).for_each(|(d, s)| *d = *s);
            }
            Ok((scores, ScoreCache::Quate { u, r_hat, r_norm }))
        }
        DecoderInput::Real(x) => {
            let w = x.ncols();
            let mut hr = Array2::<T>::zeros((b, w));
            for (i, &(h, r)) in queries.iter().enumerate() {
                let v = hadamard(x.row(h).as_slice().unwrap(), x.row(r).as_slice().unwrap());
                hr.row_mut(i).iter_mut().zip(v).for_each(|(d, s)| *d = s);
            }
            scores
                .axis_iter_mut(Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(i, mut row)| {
                    let q = hr.row(i);
                    let q = q.as_slice().unwrap();
                    for (e, s) in row.iter_mut().enumerate() {
                        *s = distmult_slices(q, x.row(e).as_slice().unwrap());
                    }
                });
            Ok((scores, ScoreCache::Distmult { hr }))
        }
    }
}

/// Gradient of `Σ dscores ⊙ scores` with respect to the whole node table.
pub fn score_queries_backward<T: Scalar>(
    input: &DecoderInput<T>,
    queries: &[NodeQuery],
    num_entities: usize,
    cache: &ScoreCache<T>,
    dscores: &Array2<T>,
) -> Result<DecoderInput<T>> {
    if dscores.dim() != (queries.len(), num_entities) {
        return Err(Error::shape("score_queries_backward", format!("({}, {num_entities})", queries.len()), format!("{:?}", dscores.dim())));
    }
    let mut grad = input.zeros_like();
    match (input, cache, &mut grad) {
        (DecoderInput::Quat(x), ScoreCache::Quate { u, r_hat, r_norm }, DecoderInput::Quat(g)) => {
            let ents = view_parts(x).map(|m| m.slice_move(s![..num_entities, ..]));
            // scores = Σ_c U_c E_cᵀ
            let du: [Array2<T>; 4] = [0, 1, 2, 3].map(|c| dscores.dot(&ents[c]));
            for (c, gpart) in g.parts_mut().into_iter().enumerate() {
                let de = dscores.t().dot(&u.parts()[c].view());
                gpart.slice_mut(s![..num_entities, ..]).zip_mut_with(&de, |a, b| *a += *b);
            }
            let n = x.coords();
            for (i, &(h, r)) in queries.iter().enumerate() {
                for j in 0..n {
                    let duq = Quaternion::new(du[0][[i, j]], du[1][[i, j]], du[2][[i, j]], du[3][[i, j]]);
                    let rh = Quaternion::new(r_hat.a[[i, j]], r_hat.b[[i, j]], r_hat.c[[i, j]], r_hat.d[[i, j]]);
                    let hq = Quaternion::new(x.a[[h, j]], x.b[[h, j]], x.c[[h, j]], x.d[[h, j]]);
                    // u = h ⊗ r̂  ⇒  dh = du ⊗ r̂*, dr̂ = h* ⊗ du
                    let dh = hamilton(duq, rh.conj());
                    let drh = hamilton(hq.conj(), duq);
                    // r̂ = r/‖r‖  ⇒  dr = (dr̂ − r̂ (r̂·dr̂)) / ‖r‖
                    let dr = (drh - rh.scale(rh.dot(drh))).scale(T::one() / r_norm[[i, j]]);
                    for (part, (vh, vr)) in g.parts_mut().into_iter().zip([(dh.a, dr.a), (dh.b, dr.b), (dh.c, dr.c), (dh.d, dr.d)]) {
                        part[[h, j]] += vh;
                        part[[r, j]] += vr;
                    }
                }
            }
        }
        (DecoderInput::Real(x), ScoreCache::Distmult { hr }, DecoderInput::Real(g)) => {
            let ents = x.slice(s![..num_entities, ..]);
            let dhr = dscores.dot(&ents);
            let de = dscores.t().dot(hr);
            g.slice_mut(s![..num_entities, ..]).zip_mut_with(&de, |a, b| *a += *b);
            for (i, &(h, r)) in queries.iter().enumerate() {
                for k in 0..x.ncols() {
                    let d = dhr[[i, k]];
                    let (xh, xr) = (x[[h, k]], x[[r, k]]);
                    g[[h, k]] += d * xr;
                    g[[r, k]] += d * xh;
                }
            }
        }
        _ => return Err(Error::shape("score_queries_backward", "matching cache", "mismatched cache")),
    }
    Ok(grad)
}

/// Scores `(head, relation, t)` for every entity `t`.
pub fn score_all_tails<T: Scalar>(
    input: &DecoderInput<T>,
    head_node: usize,
    relation_node: usize,
    num_entities: usize,
) -> Result<Vec<T>> {
    let (scores, _) = score_queries(input, &[(head_node, relation_node)], num_entities)?;
    Ok(scores.row(0).to_vec())
}

/// Scores `(h, relation, tail)` for every entity `h`, one triple at a time.
/// Used for head prediction when inverse relations are not available.
pub fn score_all_heads<T: Scalar>(
    input: &DecoderInput<T>,
    relation_node: usize,
    tail_node: usize,
    num_entities: usize,
) -> Result<Vec<T>> {
    check_queries(input.rows(), &[(tail_node, relation_node)], num_entities)?;
    match input {
        DecoderInput::Quat(x) => {
            let parts = x.parts();
            let r = row_slices(parts, relation_node);
            let t = row_slices(parts, tail_node);
            (0..num_entities)
                .into_par_iter()
                .map(|e| quate_query(row_slices(parts, e), r).map(|q| inner_slices(quat_slices(&q.u), t)))
                .collect()
        }
        DecoderInput::Real(x) => {
            let r = x.row(relation_node);
            let t = x.row(tail_node);
            Ok((0..num_entities)
                .map(|e| distmult_slices(&hadamard(x.row(e).as_slice().unwrap(), r.as_slice().unwrap()), t.as_slice().unwrap()))
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    type Q = Quaternion<f64>;

    fn qv(qs: &[Q]) -> QuatVector<f64> {
        QuatVector::from_quats(qs)
    }

    fn random_batch(rows: usize, n: usize, seed: u64) -> QuatBatch<f64> {
        let mut r = rng::stream(seed, 99);
        let mut b = QuatBatch::zeros(rows, n);
        for p in b.parts_mut() {
            p.iter_mut().for_each(|v| *v = rng::symmetric_f64(&mut r, 1.0));
        }
        b
    }

    #[test]
    fn quate_examples() {
        let one = qv(&[Q::one()]);
        assert_eq!(quate_score(&one, &qv(&[Q::new(2.0, 0.0, 0.0, 0.0)]), &one).unwrap(), 1.0);
        assert_eq!(quate_score(&qv(&[Q::i()]), &qv(&[Q::j()]), &qv(&[Q::k()])).unwrap(), 1.0);
        assert!(matches!(quate_score(&one, &qv(&[Q::zero()]), &one), Err(Error::Degenerate(_))));
    }

    #[test]
    fn quate_matches_scalar_kernel_oracle() {
        let b = random_batch(3, 5, 1);
        let (h, r, t) = (b.row(0), b.row(1), b.row(2));
        let mut expect = 0.0;
        for j in 0..5 {
            let rn = r.get(j).normalize().unwrap();
            expect += hamilton(h.get(j), rn).dot(t.get(j));
        }
        assert!((quate_score(&h, &r, &t).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn relation_scale_invariance() {
        let b = random_batch(3, 4, 2);
        let (h, r, t) = (b.row(0), b.row(1), b.row(2));
        let base = quate_score(&h, &r, &t).unwrap();
        let mut scaled = r.clone();
        for j in 0..4 {
            scaled.set(j, r.get(j).scale(0.1 + j as f64 * 3.7));
        }
        let s = quate_score(&h, &scaled, &t).unwrap();
        assert!((s - base).abs() <= 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn quate_is_linear_in_head_and_tail() {
        let b = random_batch(5, 3, 3);
        let (h1, h2, r, t1, t2) = (b.row(0), b.row(1), b.row(2), b.row(3), b.row(4));
        let add = |x: &QuatVector<f64>, y: &QuatVector<f64>, s: f64| {
            let mut o = x.clone();
            for j in 0..x.len() {
                o.set(j, x.get(j) + y.get(j).scale(s));
            }
            o
        };
        let f = |h: &QuatVector<f64>, t: &QuatVector<f64>| quate_score(h, &r, t).unwrap();
        let lhs = f(&add(&h1, &h2, 2.5), &t1);
        let rhs = f(&h1, &t1) + 2.5 * f(&h2, &t1);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
        let lhs = f(&h1, &add(&t1, &t2, -1.5));
        let rhs = f(&h1, &t1) - 1.5 * f(&h1, &t2);
        assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn distmult_examples() {
        assert_eq!(distmult_score(&[1.0; 6], &[1.0; 6], &[1.0; 6]).unwrap(), 6.0);
        assert_eq!(distmult_score(&[0.0; 3], &[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap(), 0.0);
        let (h, r, t) = ([0.5, -1.0, 2.0], [1.5, 0.25, -3.0], [2.0, 4.0, 0.5]);
        let expect: f64 = (0..3).map(|i| h[i] * r[i] * t[i]).sum();
        assert!((distmult_score(&h, &r, &t).unwrap() - expect).abs() < 1e-15);
        assert!(distmult_score(&[1.0], &[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn all_tails_equal_per_triple_bitwise() {
        let b = random_batch(14, 3, 4);
        let input = DecoderInput::Quat(b.clone());
        let row = score_all_tails(&input, 2, 12, 10).unwrap();
        for t in 0..10 {
            assert_eq!(row[t], quate_score(&b.row(2), &b.row(12), &b.row(t)).unwrap());
        }
        let single = score_all_tails(&input, 0, 12, 1).unwrap();
        assert_eq!(single, vec![quate_score(&b.row(0), &b.row(12), &b.row(0)).unwrap()]);

        let flat = decoder_input(&NodeReps::Quat(b.clone()), DecoderKind::Distmult).unwrap();
        let DecoderInput::Real(m) = &flat else { panic!() };
        let row = score_all_tails(&flat, 2, 12, 10).unwrap();
        for t in 0..10 {
            let s = distmult_score(m.row(2).as_slice().unwrap(), m.row(12).as_slice().unwrap(), m.row(t).as_slice().unwrap()).unwrap();
            assert_eq!(row[t], s);
        }
    }

    #[test]
    fn all_heads_equal_per_triple() {
        let b = random_batch(8, 2, 5);
        let input = DecoderInput::Quat(b.clone());
        let row = score_all_heads(&input, 6, 3, 6).unwrap();
        for h in 0..6 {
            assert_eq!(row[h], quate_score(&b.row(h), &b.row(6), &b.row(3)).unwrap());
        }
    }

    #[test]
    fn entity_permutation_permutes_row() {
        let b = random_batch(7, 2, 6);
        let perm = [4usize, 2, 0, 1, 3, 5, 6];
        let pb = QuatBatch::from_rows(&perm.iter().map(|&i| b.row(i)).collect::<Vec<_>>());
        // query rows 5, 6 are fixed points of perm
        let row = score_all_tails(&DecoderInput::Quat(b), 5, 6, 5).unwrap();
        let prow = score_all_tails(&DecoderInput::Quat(pb), 5, 6, 5).unwrap();
        for i in 0..5 {
            assert_eq!(prow[i], row[perm[i]]);
        }
    }

    #[test]
    fn gcn_with_quate_is_config_error() {
        let reps = NodeReps::Real(Array2::<f64>::zeros((3, 2)));
        assert!(matches!(decoder_input(&reps, DecoderKind::Quate), Err(Error::Config(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let b = random_batch(6, 2, 7);
        let input = DecoderInput::Quat(b);
        let q = [(0, 4), (2, 5)];
        let (s, cache) = score_queries(&input, &q, 4).unwrap();
        let g = score_queries_backward(&input, &q, 4, &cache, &Array2::zeros(s.raw_dim())).unwrap();
        let DecoderInput::Quat(g) = g else { panic!() };
        assert!(g.parts().iter().all(|m| m.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn distmult_head_gradient_closed_form() {
        let x = Array2::from_shape_fn((4, 3), |(i, j)| (i as f64 + 1.0) * 0.5 - j as f64 * 0.3);
        let input = DecoderInput::Real(x.clone());
        let q = [(1usize, 3usize)];
        let (s, cache) = score_queries(&input, &q, 1).unwrap();
        let mut d = Array2::zeros(s.raw_dim());
        d[[0, 0]] = 1.0;
        // ∂f(1, 3, 0)/∂h_i = r_i t_i ; entity 1 is only the head here
        let DecoderInput::Real(g) = score_queries_backward(&input, &q, 1, &cache, &d).unwrap() else { panic!() };
        for i in 0..3 {
            assert_eq!(g[[1, i]], x[[3, i]] * x[[0, i]]);
        }
    }

    fn weighted_sum(input: &DecoderInput<f64>, q: &[NodeQuery], ne: usize, w: &Array2<f64>) -> f64 {
        (score_queries(input, q, ne).unwrap().0 * w).sum()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let b = random_batch(7, 3, 8);
        let q = [(0usize, 5usize), (3, 6), (0, 6), (4, 5)];
        let ne = 5;
        let w = Array2::from_shape_fn((4, ne), |(i, j)| ((i * 5 + j * 3) % 7) as f64 * 0.2 - 0.6);
        for input in [DecoderInput::Quat(b.clone()), decoder_input(&NodeReps::Quat(b.clone()), DecoderKind::Distmult).unwrap()] {
            let (_, cache) = score_queries(&input, &q, ne).unwrap();
            let grad = score_queries_backward(&input, &q, ne, &cache, &w).unwrap();
            let parts_of = |d: &DecoderInput<f64>| -> Vec<Array2<f64>> {
                match d {
                    DecoderInput::Quat(x) => x.parts().iter().map(|m| (*m).clone()).collect(),
                    DecoderInput::Real(m) => vec![m.clone()],
                }
            };
            let rebuild = |parts: Vec<Array2<f64>>| -> DecoderInput<f64> {
                if parts.len() == 4 {
                    let [a, b, c, d]: [Array2<f64>; 4] = parts.try_into().unwrap();
                    DecoderInput::Quat(QuatBatch::from_parts([a, b, c, d]))
                } else {
                    DecoderInput::Real(parts.into_iter().next().unwrap())
                }
            };
            let base = parts_of(&input);
            let g = parts_of(&grad);
            let step = 1e-5;
            for p in 0..base.len() {
                for k in 0..base[p].len() {
                    let mut plus = base.clone();
                    plus[p].as_slice_mut().unwrap()[k] += step;
                    let mut minus = base.clone();
                    minus[p].as_slice_mut().unwrap()[k] -= step;
                    let numeric = (weighted_sum(&rebuild(plus), &q, ne, &w) - weighted_sum(&rebuild(minus), &q, ne, &w)) / (2.0 * step);
                    let analytic = g[p].as_slice().unwrap()[k];
                    let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6);
                    assert!(rel < 1e-4, "part {p} idx {k}: {numeric} vs {analytic}");
                }
            }
        }
    }

    #[test]
    fn dual_input_concat_and_back() {
        let reps = NodeReps::Dual(crate::hypercomplex::DualQuatBatch {
            q: random_batch(3, 2, 10),
            p: random_batch(3, 2, 11),
        });
        let inp = decoder_input(&reps, DecoderKind::Quate).unwrap();
        let DecoderInput::Quat(ref qb) = inp else { panic!() };
        assert_eq!(qb.coords(), 4);
        assert_eq!(decoder_input_backward(inp, &reps).unwrap(), reps);
        let flat = decoder_input(&reps, DecoderKind::Distmult).unwrap();
        assert_eq!(decoder_input_backward(flat, &reps).unwrap(), reps);
    }
}
