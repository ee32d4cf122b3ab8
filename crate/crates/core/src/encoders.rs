//! Graph encoders: DualQGNN, and the QGNN and GCN ablations.
//!
//! Every layer computes `H' = tanh(Â · T_W(H))` where `T_W` transforms each
//! node vector with the layer weight (dual-quaternion, quaternion or real
//! matrix-vector product), `Â` is the normalized adjacency, and `tanh` acts
//! on every real component.

use ndarray::{s, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::cooc_graph::{Csr, NormalizedAdjacency};
use crate::error::{Error, Result};
use crate::hypercomplex::{
    dq_matmul_rows, dq_matmul_rows_backward, quat_matmul_rows, quat_matmul_rows_backward, DualQuatBatch,
    DualQuatMatrix, QuatBatch, QuatMatrix,
};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    #[default]
    DualQgnn,
    Qgnn,
    Gcn,
}

impl EncoderKind {
    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::DualQgnn => "dualqgnn",
            EncoderKind::Qgnn => "qgnn",
            EncoderKind::Gcn => "gcn",
        }
    }

    /// Real component arrays per native coordinate.
    pub fn components(self) -> usize {
        match self {
            EncoderKind::DualQgnn => 8,
            EncoderKind::Qgnn => 4,
            EncoderKind::Gcn => 1,
        }
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dualqgnn" => Ok(EncoderKind::DualQgnn),
            "qgnn" => Ok(EncoderKind::Qgnn),
            "gcn" => Ok(EncoderKind::Gcn),
            other => Err(Error::Config(format!("unknown encoder {other:?}"))),
        }
    }
}

/// `dim` counts native coordinates: dual quaternions, quaternions or reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub num_layers: usize,
    pub dim: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kind: EncoderKind::DualQgnn,
            num_layers: 1,
            dim: 32,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("encoder dim must be at least 1".into()));
        }
        if self.num_layers == 0 {
            return Err(Error::Config("encoder needs at least one layer".into()));
        }
        Ok(())
    }

    /// Reals per node.
    pub fn width(&self) -> usize {
        self.dim * self.kind.components()
    }
}

/// Representations of every node, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeReps<T> {
    Real(Array2<T>),
    Quat(QuatBatch<T>),
    Dual(DualQuatBatch<T>),
}

impl<T: Scalar> NodeReps<T> {
    pub fn zeros(kind: EncoderKind, rows: usize, dim: usize) -> Self {
        match kind {
            EncoderKind::Gcn => NodeReps::Real(Array2::zeros((rows, dim))),
            EncoderKind::Qgnn => NodeReps::Quat(QuatBatch::zeros(rows, dim)),
            EncoderKind::DualQgnn => NodeReps::Dual(DualQuatBatch::zeros(rows, dim)),
        }
    }

    pub fn kind(&self) -> EncoderKind {
        match self {
            NodeReps::Real(_) => EncoderKind::Gcn,
            NodeReps::Quat(_) => EncoderKind::Qgnn,
            NodeReps::Dual(_) => EncoderKind::DualQgnn,
        }
    }

    pub fn rows(&self) -> usize {
        self.parts()[0].nrows()
    }

    /// Native coordinates per node.
    pub fn coords(&self) -> usize {
        self.parts()[0].ncols()
    }

    /// Component arrays; for dual reps the order is `q.a, q.b, q.c, q.d, p.a, p.b, p.c, p.d`.
    pub fn parts(&self) -> Vec<&Array2<T>> {
        match self {
            NodeReps::Real(m) => vec![m],
            NodeReps::Quat(q) => q.parts().to_vec(),
            NodeReps::Dual(d) => d.q.parts().into_iter().chain(d.p.parts()).collect(),
        }
    }

    pub fn parts_mut(&mut self) -> Vec<&mut Array2<T>> {
        match self {
            NodeReps::Real(m) => vec![m],
            NodeReps::Quat(q) => q.parts_mut().into_iter().collect(),
            NodeReps::Dual(d) => d.q.parts_mut().into_iter().chain(d.p.parts_mut()).collect(),
        }
    }

    fn from_parts(kind: EncoderKind, parts: Vec<Array2<T>>) -> Self {
        let mut it = parts.into_iter();
        let quat = |it: &mut std::vec::IntoIter<Array2<T>>| {
            QuatBatch::from_parts([it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
        };
        match kind {
            EncoderKind::Gcn => NodeReps::Real(it.next().unwrap()),
            EncoderKind::Qgnn => NodeReps::Quat(quat(&mut it)),
            EncoderKind::DualQgnn => {
                let q = quat(&mut it);
                let p = quat(&mut it);
                NodeReps::Dual(DualQuatBatch { q, p })
            }
        }
    }

    pub fn map_parts(&self, f: impl FnMut(&Array2<T>) -> Array2<T>) -> Self {
        Self::from_parts(self.kind(), self.parts().into_iter().map(f).collect())
    }

    pub fn zeros_like(&self) -> Self {
        self.map_parts(|m| Array2::zeros(m.raw_dim()))
    }

    pub fn is_finite(&self) -> bool {
        self.parts().iter().all(|m| m.iter().all(|v| v.is_finite()))
    }

    /// Keeps rows `perm[0], perm[1], ..` in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        self.map_parts(|m| m.select(Axis(0), rows))
    }

    /// Every component row of node `i` concatenated in `parts()` order.
    pub fn node_flat(&self, i: usize) -> Vec<T> {
        self.parts().iter().flat_map(|m| m.row(i).to_vec()).collect()
    }

    /// Columns `[start, end)` of every part.
    pub fn slice_coords(&self, start: usize, end: usize) -> Self {
        self.map_parts(|m| m.slice(s![.., start..end]).to_owned())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeight<T> {
    Real(Array2<T>),
    Quat(QuatMatrix<T>),
    Dual(DualQuatMatrix<T>),
}

impl<T: Scalar> LayerWeight<T> {
    pub fn zeros(kind: EncoderKind, dim: usize) -> Self {
        match kind {
            EncoderKind::Gcn => LayerWeight::Real(Array2::zeros((dim, dim))),
            EncoderKind::Qgnn => LayerWeight::Quat(QuatMatrix::zeros(dim, dim)),
            EncoderKind::DualQgnn => LayerWeight::Dual(DualQuatMatrix::zeros(dim, dim)),
        }
    }

    /// Identity map in the native algebra (real part identity, everything else zero).
    pub fn identity(kind: EncoderKind, dim: usize) -> Self {
        let mut w = Self::zeros(kind, dim);
        *w.parts_mut()[0] = Array2::eye(dim);
        w
    }

    pub fn parts(&self) -> Vec<&Array2<T>> {
        match self {
            LayerWeight::Real(m) => vec![m],
            LayerWeight::Quat(q) => q.parts().to_vec(),
            LayerWeight::Dual(d) => d.q.parts().into_iter().chain(d.p.parts()).collect(),
        }
    }

    pub fn parts_mut(&mut self) -> Vec<&mut Array2<T>> {
        match self {
            LayerWeight::Real(m) => vec![m],
            LayerWeight::Quat(q) => q.parts_mut().into_iter().collect(),
            LayerWeight::Dual(d) => d.q.parts_mut().into_iter().chain(d.p.parts_mut()).collect(),
        }
    }
}

/// Node input table and per-layer weights. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams<T> {
    pub embeddings: NodeReps<T>,
    pub layers: Vec<LayerWeight<T>>,
}

impl<T: Scalar> EncoderParams<T> {
    pub fn zeros(config: &EncoderConfig, node_count: usize) -> Self {
        EncoderParams {
            embeddings: NodeReps::zeros(config.kind, node_count, config.dim),
            layers: (0..config.num_layers).map(|_| LayerWeight::zeros(config.kind, config.dim)).collect(),
        }
    }

    /// Every tensor in declaration order: embedding components, then each layer's components.
    pub fn tensors(&self) -> Vec<&Array2<T>> {
        let mut out = self.embeddings.parts();
        for l in &self.layers {
            out.extend(l.parts());
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Array2<T>> {
        let mut out = self.embeddings.parts_mut();
        for l in &mut self.layers {
            out.extend(l.parts_mut());
        }
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(T::zero());
        }
        z
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.iter().all(|v| v.is_finite()))
    }

    pub fn check_shapes(&self, config: &EncoderConfig, node_count: usize) -> Result<()> {
        let expect = Self::zeros(config, node_count);
        let want: Vec<_> = expect.tensors().iter().map(|t| t.dim()).collect();
        let have: Vec<_> = self.tensors().iter().map(|t| t.dim()).collect();
        if want != have {
            return Err(Error::shape("EncoderParams", format!("{want:?}"), format!("{have:?}")));
        }
        Ok(())
    }
}

/// Glorot-uniform bound on native coordinate counts.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Draws every component i.i.d. uniform on `[-s, s)`, tensors in declaration
/// order, row-major inside each tensor. Embeddings use
/// `s = sqrt(6 / (node_count + dim))`, layer weights `s = sqrt(6 / (2 dim))`.
pub fn init_params<T: Scalar>(config: &EncoderConfig, node_count: usize, seed: u64) -> Result<EncoderParams<T>> {
    config.validate()?;
    let mut params = EncoderParams::zeros(config, node_count);
    let mut rng = rng::stream(seed, rng::INIT_STREAM);
    let emb_bound = glorot_bound(node_count, config.dim);
    let w_bound = glorot_bound(config.dim, config.dim);
    for part in params.embeddings.parts_mut() {
        part.iter_mut().for_each(|v| *v = T::lit(rng::symmetric_f64(&mut rng, emb_bound)));
    }
    for layer in &mut params.layers {
        for part in layer.parts_mut() {
            part.iter_mut().for_each(|v| *v = T::lit(rng::symmetric_f64(&mut rng, w_bound)));
        }
    }
    Ok(params)
}

/// Post-activation output of every layer; `outputs.len() == num_layers`.
/// Pre-activations are not kept: `tanh' = 1 - y²` only needs the output.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    pub outputs: Vec<NodeReps<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self) -> &NodeReps<T> {
        self.outputs.last().expect("at least one layer")
    }

    pub fn into_output(mut self) -> NodeReps<T> {
        self.outputs.pop().expect("at least one layer")
    }
}

/// Applies the layer weight to every node vector.
pub fn transform<T: Scalar>(w: &LayerWeight<T>, x: &NodeReps<T>) -> Result<NodeReps<T>> {
    match (w, x) {
        (LayerWeight::Real(w), NodeReps::Real(x)) => {
            if w.ncols() != x.ncols() {
                return Err(Error::shape("transform", w.ncols(), x.ncols()));
            }
            Ok(NodeReps::Real(x.dot(&w.t())))
        }
        (LayerWeight::Quat(w), NodeReps::Quat(x)) => Ok(NodeReps::Quat(quat_matmul_rows(w, x)?)),
        (LayerWeight::Dual(w), NodeReps::Dual(x)) => Ok(NodeReps::Dual(dq_matmul_rows(w, x)?)),
        _ => Err(Error::shape("transform", "matching weight/rep algebra", "mixed")),
    }
}

pub fn transform_backward<T: Scalar>(
    w: &LayerWeight<T>,
    x: &NodeReps<T>,
    dy: &NodeReps<T>,
) -> Result<(LayerWeight<T>, NodeReps<T>)> {
    match (w, x, dy) {
        (LayerWeight::Real(w), NodeReps::Real(x), NodeReps::Real(dy)) => {
            Ok((LayerWeight::Real(dy.t().dot(x)), NodeReps::Real(dy.dot(w))))
        }
        (LayerWeight::Quat(w), NodeReps::Quat(x), NodeReps::Quat(dy)) => {
            let (dw, dx) = quat_matmul_rows_backward(w, x, dy)?;
            Ok((LayerWeight::Quat(dw), NodeReps::Quat(dx)))
        }
        (LayerWeight::Dual(w), NodeReps::Dual(x), NodeReps::Dual(dy)) => {
            let (dw, dx) = dq_matmul_rows_backward(w, x, dy)?;
            Ok((LayerWeight::Dual(dw), NodeReps::Dual(dx)))
        }
        _ => Err(Error::shape("transform_backward", "matching algebra", "mixed")),
    }
}

fn aggregate<T: Scalar>(coeffs: &Csr<T>, x: &NodeReps<T>) -> Result<NodeReps<T>> {
    let parts = x.parts().into_iter().map(|m| coeffs.matmul(m)).collect::<Result<Vec<_>>>()?;
    Ok(NodeReps::from_parts(x.kind(), parts))
}

pub fn encoder_forward<T: Scalar>(
    params: &EncoderParams<T>,
    adj: &NormalizedAdjacency<T>,
    config: &EncoderConfig,
) -> Result<ForwardCache<T>> {
    config.validate()?;
    let nodes = params.embeddings.rows();
    if adj.dim() != nodes {
        return Err(Error::shape("encoder_forward adjacency", nodes, adj.dim()));
    }
    if params.layers.len() != config.num_layers || params.embeddings.kind() != config.kind {
        return Err(Error::shape(
            "encoder_forward params",
            format!("{} {} layers", config.kind.name(), config.num_layers),
            format!("{} {} layers", params.embeddings.kind().name(), params.layers.len()),
        ));
    }
    let mut outputs: Vec<NodeReps<T>> = Vec::with_capacity(config.num_layers);
    for (k, w) in params.layers.iter().enumerate() {
        let input = outputs.last().unwrap_or(&params.embeddings);
        let mixed = aggregate(&adj.matrix, &transform(w, input)?)?;
        let out = mixed.map_parts(|m| m.mapv(T::tanh));
        if !out.is_finite() {
            return Err(Error::NumericDivergence(format!("non-finite activation in encoder layer {k}")));
        }
        outputs.push(out);
    }
    Ok(ForwardCache { outputs })
}

pub fn encoder_backward<T: Scalar>(
    grad_out: &NodeReps<T>,
    cache: &ForwardCache<T>,
    params: &EncoderParams<T>,
    adj: &NormalizedAdjacency<T>,
) -> Result<EncoderParams<T>> {
    if cache.outputs.len() != params.layers.len() {
        return Err(Error::shape("encoder_backward cache", params.layers.len(), cache.outputs.len()));
    }
    if grad_out.kind() != params.embeddings.kind() || grad_out.rows() != params.embeddings.rows() {
        return Err(Error::shape(
            "encoder_backward grad",
            format!("{:?}", params.embeddings.parts()[0].dim()),
            format!("{:?}", grad_out.parts()[0].dim()),
        ));
    }
    let mut grads = params.zeros_like();
    let mut upstream = grad_out.clone();
    for k in (0..params.layers.len()).rev() {
        let y = &cache.outputs[k];
        let dz_parts: Vec<Array2<T>> = upstream
            .parts()
            .into_iter()
            .zip(y.parts())
            .map(|(g, y)| {
                let mut dz = g.clone();
                dz.zip_mut_with(y, |d, &yv| *d = *d * (T::one() - yv * yv));
                dz
            })
            .collect();
        let dz = NodeReps::from_parts(y.kind(), dz_parts);
        let dt = aggregate(&adj.transpose, &dz)?;
        let input = if k == 0 { &params.embeddings } else { &cache.outputs[k - 1] };
        let (dw, dx) = transform_backward(&params.layers[k], input, &dt)?;
        grads.layers[k] = dw;
        upstream = dx;
    }
    grads.embeddings = upstream;
    Ok(grads)
}
