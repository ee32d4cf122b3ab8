//! Knowledge-graph link prediction over a co-occurrence weighted Levi graph.
//!
//! Entities and relations share one node space. A stack of hypercomplex
//! graph layers (dual-quaternion, quaternion, or plain real) encodes every
//! node, and a QuatE or DistMult head scores `(h, r, t)` triples. Training is
//! KvsAll binary cross-entropy with hand-written reverse-mode gradients and
//! Adam; evaluation is filtered MRR / Hits@k.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`). The training
//! pipeline and on-disk formats use `f64`; the aliases at the bottom of this
//! file name the concrete instantiations.

pub mod cooc_graph;
pub mod decoders;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod hypercomplex;
pub mod kg_data;
pub mod rng;
pub mod scalar;
pub mod synthetic;
pub mod training;

pub use cooc_graph::{AdjacencyKind, SelfLoopMode};
pub use decoders::DecoderKind;
pub use encoders::{EncoderConfig, EncoderKind};
pub use error::{Error, Result};
pub use eval::Metrics;
pub use kg_data::{Dataset, Split, Triple, TruthIndex, Vocabulary};
pub use scalar::Scalar;
pub use training::{ModelConfig, TrainConfig};

pub type Quaternion64 = hypercomplex::Quaternion<f64>;
pub type Quaternion32 = hypercomplex::Quaternion<f32>;
pub type DualQuaternion64 = hypercomplex::DualQuaternion<f64>;
pub type DualQuaternion32 = hypercomplex::DualQuaternion<f32>;
pub type DualNumber64 = hypercomplex::DualNumber<f64>;
pub type QuatVector64 = hypercomplex::QuatVector<f64>;
pub type DualQuatVector64 = hypercomplex::DualQuatVector<f64>;
pub type QuatMatrix64 = hypercomplex::QuatMatrix<f64>;
pub type DualQuatMatrix64 = hypercomplex::DualQuatMatrix<f64>;

pub type WeightedAdjacency64 = cooc_graph::WeightedAdjacency<f64>;
pub type NormalizedAdjacency64 = cooc_graph::NormalizedAdjacency<f64>;
pub type KgGraph64 = cooc_graph::KgGraph<f64>;

pub type EncoderParams64 = encoders::EncoderParams<f64>;
pub type Model64 = training::Model<f64>;
pub type Model32 = training::Model<f32>;
pub type AdamState64 = training::AdamState<f64>;
pub type Trainer64 = training::Trainer<f64>;
