//! KvsAll binary cross-entropy training.
//!
//! Each training query is a distinct `(h, r)` pair from the (inverse-augmented)
//! training split, scored against every entity. The label row is 1 exactly at
//! the known training tails; everything else is an invalid triple.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::cooc_graph::KgGraph;
use crate::decoders::{
    check_compatible, decoder_input, decoder_input_backward, score_queries, score_queries_backward, DecoderInput,
    DecoderKind, NodeQuery,
};
use crate::encoders::{encoder_backward, encoder_forward, init_params, EncoderConfig, EncoderParams, ForwardCache};
use crate::error::{Error, Result};
use crate::eval::{evaluate_split, Metrics};
use crate::kg_data::{build_truth_index, Dataset, Split, TruthIndex};
use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Learning rates searched over in the reference protocol.
pub const LEARNING_RATE_GRID: [f64; 4] = [1e-4, 5e-4, 1e-3, 5e-3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Counted in `(h, r)` query pairs.
    pub batch_size: usize,
    pub epochs: usize,
    pub eval_every: usize,
    pub label_smoothing: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 1024,
            epochs: 3000,
            eval_every: 1,
            label_smoothing: 0.0,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} is not a finite non-negative number", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(Error::Config(format!("label_smoothing {} outside [0, 1)", self.label_smoothing)));
        }
        let a = &self.adam;
        if !(0.0..1.0).contains(&a.beta1) || !(0.0..1.0).contains(&a.beta2) || a.epsilon <= 0.0 {
            return Err(Error::Config("adam betas must lie in [0, 1) and epsilon be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub decoder: DecoderKind,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        check_compatible(self.encoder.kind, self.decoder)
    }
}

/// Encoder parameters plus the node layout they were built for. The decoder has no parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub num_entities: usize,
    pub num_relations: usize,
    pub params: EncoderParams<T>,
}

pub struct ForwardPass<T> {
    pub cache: ForwardCache<T>,
    pub input: DecoderInput<T>,
}

impl<T: Scalar> Model<T> {
    pub fn init(config: ModelConfig, num_entities: usize, num_relations: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = init_params(&config.encoder, num_entities + num_relations, seed)?;
        Ok(Model {
            config,
            num_entities,
            num_relations,
            params,
        })
    }

    pub fn from_params(config: ModelConfig, num_entities: usize, num_relations: usize, params: EncoderParams<T>) -> Result<Self> {
        config.validate()?;
        params.check_shapes(&config.encoder, num_entities + num_relations)?;
        Ok(Model {
            config,
            num_entities,
            num_relations,
            params,
        })
    }

    pub fn node_count(&self) -> usize {
        self.num_entities + self.num_relations
    }

    pub fn relation_node(&self, r: usize) -> usize {
        self.num_entities + r
    }

    fn check_graph(&self, graph: &KgGraph<T>) -> Result<()> {
        if graph.num_entities != self.num_entities || graph.num_relations != self.num_relations {
            return Err(Error::shape(
                "model/graph layout",
                format!("{} entities, {} relations", self.num_entities, self.num_relations),
                format!("{} entities, {} relations", graph.num_entities, graph.num_relations),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, graph: &KgGraph<T>) -> Result<ForwardPass<T>> {
        self.check_graph(graph)?;
        let cache = encoder_forward(&self.params, &graph.adjacency, &self.config.encoder)?;
        let input = decoder_input(cache.output(), self.config.decoder)?;
        Ok(ForwardPass { cache, input })
    }

    /// `(h, r)` pairs to `(head node, relation node)` decoder queries.
    pub fn node_queries(&self, pairs: &[(usize, usize)]) -> Vec<NodeQuery> {
        pairs.iter().map(|&(h, r)| (h, self.relation_node(r))).collect()
    }

    /// Mean-over-rows BCE loss of `pairs` against `labels`, and its gradient.
    pub fn loss_and_grad(
        &self,
        graph: &KgGraph<T>,
        pairs: &[(usize, usize)],
        labels: &Array2<T>,
        smoothing: f64,
    ) -> Result<(T, EncoderParams<T>)> {
        let fwd = self.forward(graph)?;
        let queries = self.node_queries(pairs);
        let (scores, score_cache) = score_queries(&fwd.input, &queries, self.num_entities)?;
        let (loss, dscores) = bce_batch(&scores, labels, smoothing)?;
        let dinput = score_queries_backward(&fwd.input, &queries, self.num_entities, &score_cache, &dscores)?;
        let dreps = decoder_input_backward(dinput, fwd.cache.output())?;
        let grads = encoder_backward(&dreps, &fwd.cache, &self.params, &graph.adjacency)?;
        Ok((loss, grads))
    }

    pub fn loss(&self, graph: &KgGraph<T>, pairs: &[(usize, usize)], labels: &Array2<T>, smoothing: f64) -> Result<T> {
        let fwd = self.forward(graph)?;
        let (scores, _) = score_queries(&fwd.input, &self.node_queries(pairs), self.num_entities)?;
        Ok(bce_batch(&scores, labels, smoothing)?.0)
    }
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus<T: Scalar>(x: T) -> T {
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

/// Binary cross-entropy of one score row, summed over entries.
///
/// With `l' = l (1 - smoothing) + smoothing / n`, the per-entry loss
/// `-[l' ln σ(f) + (1 - l') ln(1 - σ(f))]` is evaluated as
/// `l' softplus(-f) + (1 - l') softplus(f)`, and the gradient is `σ(f) - l'`.
pub fn bce_loss<T: Scalar>(scores: &[T], labels: &[T], smoothing: f64) -> Result<(T, Vec<T>)> {
    if scores.len() != labels.len() {
        return Err(Error::shape("bce_loss", scores.len(), labels.len()));
    }
    let n = scores.len();
    let keep = T::lit(1.0 - smoothing);
    let spread = if n > 0 { T::lit(smoothing / n as f64) } else { T::zero() };
    let mut loss = T::zero();
    let mut grad = Vec::with_capacity(n);
    for (&f, &l) in scores.iter().zip(labels) {
        let target = l * keep + spread;
        if target != T::zero() {
            loss += target * softplus(-f);
        }
        if target != T::one() {
            loss += (T::one() - target) * softplus(f);
        }
        grad.push(sigmoid(f) - target);
    }
    Ok((loss, grad))
}

/// Mean of per-row [`bce_loss`] over the batch; the gradient includes the `1/rows` factor.
pub fn bce_batch<T: Scalar>(scores: &Array2<T>, labels: &Array2<T>, smoothing: f64) -> Result<(T, Array2<T>)> {
    if scores.dim() != labels.dim() {
        return Err(Error::shape("bce_batch", format!("{:?}", scores.dim()), format!("{:?}", labels.dim())));
    }
    let rows = scores.nrows().max(1);
    let inv_rows = T::one() / T::lit(rows as f64);
    let mut grad = Array2::zeros(scores.raw_dim());
    let mut total = T::zero();
    for ((s, l), mut g) in scores.rows().into_iter().zip(labels.rows()).zip(grad.rows_mut()) {
        let (loss, d) = bce_loss(s.as_slice().unwrap(), l.as_slice().unwrap(), smoothing)?;
        total += loss;
        g.iter_mut().zip(d).for_each(|(dst, v)| *dst = v * inv_rows);
    }
    Ok((total * inv_rows, grad))
}

/// First and second moment per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Array2<T>>,
    pub v: Vec<Array2<T>>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &EncoderParams<T>) -> Self {
        let zeros: Vec<Array2<T>> = params.tensors().iter().map(|t| Array2::zeros(t.raw_dim())).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn matches(&self, params: &EncoderParams<T>) -> bool {
        let shapes: Vec<_> = params.tensors().iter().map(|t| t.dim()).collect();
        self.m.iter().map(|t| t.dim()).eq(shapes.iter().copied()) && self.v.iter().map(|t| t.dim()).eq(shapes.iter().copied())
    }
}

/// Bias-corrected Adam over parallel tensor lists.
pub fn adam_update<T: Scalar>(
    params: Vec<&mut Array2<T>>,
    grads: Vec<&Array2<T>>,
    state: &mut AdamState<T>,
    learning_rate: f64,
    adam: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape("adam_update", params.len(), format!("{} grads / {} moments", grads.len(), state.m.len())));
    }
    for (i, g) in grads.iter().enumerate() {
        if g.dim() != params[i].dim() {
            return Err(Error::shape("adam_update tensor", format!("{:?}", params[i].dim()), format!("{:?}", g.dim())));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericDivergence(format!("non-finite gradient in parameter tensor {i}")));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::lit(adam.beta1), T::lit(adam.beta2));
    let one = T::one();
    let bias1 = one - b1.powi(t);
    let bias2 = one - b2.powi(t);
    let lr = T::lit(learning_rate);
    let eps = T::lit(adam.epsilon);
    for (((p, g), m), v) in params.into_iter().zip(grads).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        });
    }
    Ok(())
}

pub fn adam_step<T: Scalar>(
    params: &mut EncoderParams<T>,
    grads: &EncoderParams<T>,
    state: &mut AdamState<T>,
    config: &TrainConfig,
) -> Result<()> {
    adam_update(params.tensors_mut(), grads.tensors(), state, config.learning_rate, &config.adam)
}

/// A chunk of training queries. Labels are materialized on demand from the
/// training truth index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryBatch {
    pub pairs: Vec<(usize, usize)>,
}

impl QueryBatch {
    /// `|batch| × num_entities` matrix with 1 at every known training tail.
    pub fn labels<T: Scalar>(&self, truth: &TruthIndex, num_entities: usize) -> Array2<T> {
        label_matrix(&self.pairs, truth, num_entities)
    }
}

pub fn label_matrix<T: Scalar>(pairs: &[(usize, usize)], truth: &TruthIndex, num_entities: usize) -> Array2<T> {
    let mut labels = Array2::zeros((pairs.len(), num_entities));
    for (i, &(h, r)) in pairs.iter().enumerate() {
        for &t in truth.tails(h, r) {
            labels[[i, t]] = T::one();
        }
    }
    labels
}

/// Shuffles `pairs` with the epoch's stream and cuts it into `batch_size` chunks.
pub fn make_batches(pairs: &[(usize, usize)], batch_size: usize, seed: u64, epoch: u64) -> Vec<QueryBatch> {
    let mut order = pairs.to_vec();
    let mut r = rng::epoch_stream(seed, epoch);
    rng::shuffle(&mut r, &mut order);
    order
        .chunks(batch_size.max(1))
        .map(|c| QueryBatch { pairs: c.to_vec() })
        .collect()
}

/// Data a training run reads every epoch.
pub struct TrainingContext<'a, T> {
    pub dataset: &'a Dataset,
    pub graph: &'a KgGraph<T>,
    pub train_truth: TruthIndex,
    pub all_truth: TruthIndex,
    pub train_pairs: Vec<(usize, usize)>,
}

impl<'a, T: Scalar> TrainingContext<'a, T> {
    pub fn new(dataset: &'a Dataset, graph: &'a KgGraph<T>) -> Self {
        let train_truth = build_truth_index(dataset, &[Split::Train]);
        let all_truth = build_truth_index(dataset, &Split::ALL);
        let train_pairs = train_truth.query_pairs();
        TrainingContext {
            dataset,
            graph,
            train_truth,
            all_truth,
            train_pairs,
        }
    }

    pub fn evaluate(&self, model: &Model<T>, split: Split) -> Result<Metrics> {
        evaluate_split(model, self.graph, self.dataset, self.dataset.originals(split), &self.all_truth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: u64,
    pub mean_loss: f64,
}

/// One pass over all training queries; one Adam step per batch.
pub fn train_epoch<T: Scalar>(
    model: &mut Model<T>,
    adam: &mut AdamState<T>,
    ctx: &TrainingContext<'_, T>,
    config: &TrainConfig,
    epoch: u64,
) -> Result<EpochStats> {
    let batches = make_batches(&ctx.train_pairs, config.batch_size, config.seed, epoch);
    let mut total = 0.0;
    for batch in &batches {
        let labels = batch.labels::<T>(&ctx.train_truth, model.num_entities);
        let (loss, grads) = model
            .loss_and_grad(ctx.graph, &batch.pairs, &labels, config.label_smoothing)
            .map_err(|e| match e {
                Error::NumericDivergence(m) => Error::NumericDivergence(format!("epoch {epoch}: {m}")),
                other => other,
            })?;
        let loss = loss.to_f64_lossy();
        if !loss.is_finite() {
            return Err(Error::NumericDivergence(format!("epoch {epoch}: loss is {loss}")));
        }
        total += loss;
        adam_step(&mut model.params, &grads, adam, config)
            .map_err(|e| match e {
                Error::NumericDivergence(m) => Error::NumericDivergence(format!("epoch {epoch}: {m}")),
                other => other,
            })?;
    }
    Ok(EpochStats {
        epoch,
        mean_loss: if batches.is_empty() { 0.0 } else { total / batches.len() as f64 },
    })
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: u64,
    pub loss: f64,
    pub valid_mrr: Option<f64>,
    pub valid_hits10: Option<f64>,
}

impl EpochLog {
    pub fn to_json_line(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "null".to_owned(), |x| format!("{x}"));
        format!(
            "{{\"epoch\": {}, \"loss\": {}, \"valid_mrr\": {}, \"valid_hits10\": {}}}",
            self.epoch,
            self.loss,
            opt(self.valid_mrr),
            opt(self.valid_hits10)
        )
    }
}

/// Best validation MRR seen so far; ties keep the earlier epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BestTracker {
    pub best_mrr: Option<f64>,
    pub best_epoch: u64,
}

impl BestTracker {
    /// Returns true when `mrr` is a new strict maximum.
    pub fn observe(&mut self, epoch: u64, mrr: f64) -> bool {
        match self.best_mrr {
            Some(best) if mrr <= best => false,
            _ => {
                self.best_mrr = Some(mrr);
                self.best_epoch = epoch;
                true
            }
        }
    }
}

/// Resumable training state. `epoch` counts completed epochs.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    pub config: TrainConfig,
    pub model: Model<T>,
    pub adam: AdamState<T>,
    pub epoch: u64,
    pub best: Model<T>,
    pub tracker: BestTracker,
}

/// What happened in one [`Trainer::run_epoch`] call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochOutcome {
    pub log: EpochLog,
    pub improved: bool,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(model: Model<T>, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let adam = AdamState::new(&model.params);
        Ok(Trainer {
            config,
            best: model.clone(),
            model,
            adam,
            epoch: 0,
            tracker: BestTracker::default(),
        })
    }

    pub fn is_done(&self) -> bool {
        self.epoch >= self.config.epochs as u64
    }

    pub fn run_epoch(&mut self, ctx: &TrainingContext<'_, T>) -> Result<EpochOutcome> {
        let epoch = self.epoch + 1;
        let stats = train_epoch(&mut self.model, &mut self.adam, ctx, &self.config, epoch)?;
        self.epoch = epoch;
        let mut log = EpochLog {
            epoch,
            loss: stats.mean_loss,
            valid_mrr: None,
            valid_hits10: None,
        };
        let mut improved = false;
        if epoch.is_multiple_of(self.config.eval_every as u64) {
            let m = ctx.evaluate(&self.model, Split::Valid)?;
            log.valid_mrr = Some(m.mrr);
            log.valid_hits10 = Some(m.hits10);
            if self.tracker.observe(epoch, m.mrr) {
                self.best = self.model.clone();
                improved = true;
            }
        }
        Ok(EpochOutcome { log, improved })
    }
}

#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub best: Model<T>,
    pub last: Model<T>,
    pub best_epoch: u64,
    pub best_valid_mrr: Option<f64>,
    pub log: Vec<EpochLog>,
}

/// Trains for `config.epochs` and keeps the parameters with the highest validation MRR.
pub fn fit<T: Scalar>(
    dataset: &Dataset,
    graph: &KgGraph<T>,
    model_config: ModelConfig,
    config: &TrainConfig,
) -> Result<FitResult<T>> {
    if dataset.valid.is_empty() {
        return Err(Error::Config("validation split is empty".into()));
    }
    let model = Model::init(model_config, dataset.num_entities(), dataset.num_relations(), config.seed)?;
    let ctx = TrainingContext::new(dataset, graph);
    let mut trainer = Trainer::new(model, *config)?;
    let mut log = Vec::with_capacity(config.epochs);
    while !trainer.is_done() {
        log.push(trainer.run_epoch(&ctx)?.log);
    }
    Ok(FitResult {
        best: trainer.best,
        last: trainer.model,
        best_epoch: trainer.tracker.best_epoch,
        best_valid_mrr: trainer.tracker.best_mrr,
        log,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// `(tensor index, flat index)` of the worst entry.
    pub worst: (usize, usize),
}

/// Denominator floor for relative errors, so entries whose true gradient is
/// ~0 are judged on absolute error.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Central-difference check of the end-to-end loss gradient for every parameter.
pub fn gradient_check(
    model: &Model<f64>,
    graph: &KgGraph<f64>,
    pairs: &[(usize, usize)],
    labels: &Array2<f64>,
    smoothing: f64,
    step: f64,
) -> Result<GradCheckReport> {
    let (_, grads) = model.loss_and_grad(graph, pairs, labels, smoothing)?;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.iter().copied().collect()).collect();
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        worst: (0, 0),
    };
    for (ti, ga) in analytic.iter().enumerate() {
        for (k, &a) in ga.iter().enumerate() {
            let orig = probe.params.tensors()[ti].as_slice().unwrap()[k];
            probe.params.tensors_mut()[ti].as_slice_mut().unwrap()[k] = orig + step;
            let up = probe.loss(graph, pairs, labels, smoothing)?;
            probe.params.tensors_mut()[ti].as_slice_mut().unwrap()[k] = orig - step;
            let down = probe.loss(graph, pairs, labels, smoothing)?;
            probe.params.tensors_mut()[ti].as_slice_mut().unwrap()[k] = orig;
            let numeric = (up - down) / (2.0 * step);
            let rel = (numeric - a).abs() / numeric.abs().max(a.abs()).max(GRAD_CHECK_FLOOR);
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = (ti, k);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
