//! Pairwise ranking training for [`USchemaModel`].

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::fact::{Fact, FactStore};
use super::model::{bpr_loss, sigmoid, USchemaModel};
use crate::embedding::EmbeddingProvider;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_epsilon: f64,
    pub weight_decay: f64,
    pub max_grad_norm: f64,
    pub max_epochs: usize,
    pub early_stopping: bool,
    /// Positives are shuffled and processed in shards of this many samples.
    pub shard_size: usize,
    /// Fraction of positives held out for early stopping when no dev set is given.
    pub dev_fraction: f64,
    /// Standard deviation of the Gaussian noise added to the identity initialization.
    pub init_noise: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 2e-5,
            adam_epsilon: 1e-8,
            weight_decay: 0.01,
            max_grad_norm: 1.0,
            max_epochs: 3,
            early_stopping: true,
            shard_size: 10_000_000,
            dev_fraction: 0.05,
            init_noise: 0.01,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("{what} must be positive")));
        if self.batch_size == 0 {
            return bad("batch size");
        }
        if self.shard_size == 0 {
            return bad("shard size");
        }
        if self.max_epochs == 0 {
            return bad("max epochs");
        }
        // written so that NaN fails every check
        let positive = |x: f64| x > 0.0;
        if !(0.0..).contains(&self.learning_rate) || !positive(self.adam_epsilon) || !positive(self.max_grad_norm) {
            return Err(Error::Config("learning rate, epsilon and gradient norm must be positive".into()));
        }
        if !(0.0..).contains(&self.weight_decay)
            || !(0.0..1.0).contains(&self.dev_fraction)
            || !(0.0..).contains(&self.init_noise)
        {
            return Err(Error::Config("weight decay, dev fraction or init noise out of range".into()));
        }
        Ok(())
    }
}

/// A positive and a sampled negative sharing one relation, by embedding index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankingPair {
    pub relation: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Embedding tables for relations and tuples, rows indexed like a [`FactStore`].
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub relations: Array2<f64>,
    pub tuples: Array2<f64>,
}

impl EmbeddingTable {
    pub fn build(model: &USchemaModel, store: &FactStore) -> Result<Self> {
        let rel_texts: Vec<&str> = store.relations().iter().map(String::as_str).collect();
        let tuple_texts: Vec<String> = store.tuples().iter().map(|t| t.text()).collect();
        let tuple_refs: Vec<&str> = tuple_texts.iter().map(String::as_str).collect();
        Ok(Self { relations: stack(model, &rel_texts)?, tuples: stack(model, &tuple_refs)? })
    }
}

fn stack(model: &USchemaModel, texts: &[&str]) -> Result<Array2<f64>> {
    let d = model.dim();
    let mut out = Array2::zeros((texts.len(), d));
    for (i, v) in model.embed(texts)?.into_iter().enumerate() {
        out.row_mut(i).assign(&v);
    }
    Ok(out)
}

/// Gradient of the mean ranking loss with respect to both maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w_rel: Array2<f64>,
    pub w_tup: Array2<f64>,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        self.w_rel.iter().chain(self.w_tup.iter()).map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Mean of `-ln σ(θ+ − θ−)` over `pairs` together with its analytic gradient.
///
/// With `u = W_r a`, `δ = b+ − b−` and `Δ = u · W_t δ`, the per-pair derivative is
/// `-σ(−Δ)`, giving `∂/∂W_r = g (W_t δ) aᵀ` and `∂/∂W_t = g u δᵀ`.
pub fn objective_and_gradient(model: &USchemaModel, table: &EmbeddingTable, pairs: &[RankingPair]) -> (f64, Gradient) {
    let d = model.dim();
    let mut g_rel = Array2::zeros((d, d));
    let mut g_tup = Array2::zeros((d, d));
    if pairs.is_empty() {
        return (0.0, Gradient { w_rel: g_rel, w_tup: g_tup });
    }
    let n = pairs.len() as f64;
    let mut loss = 0.0;
    for p in pairs {
        let a = table.relations.row(p.relation);
        let delta: Array1<f64> = &table.tuples.row(p.positive) - &table.tuples.row(p.negative);
        let u = model.w_rel.dot(&a);
        let wt_delta = model.w_tup.dot(&delta);
        let margin = u.dot(&wt_delta);
        loss += bpr_loss(margin, 0.0);
        let g = -sigmoid(-margin) / n;
        outer_add(&mut g_rel, g, &wt_delta, &a.to_owned());
        outer_add(&mut g_tup, g, &u, &delta);
    }
    (loss / n, Gradient { w_rel: g_rel, w_tup: g_tup })
}

/// Mean ranking loss without the gradient.
pub fn objective(model: &USchemaModel, table: &EmbeddingTable, pairs: &[RankingPair]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|p| {
            let a = table.relations.row(p.relation);
            let pos = model.theta(a, table.tuples.row(p.positive));
            let neg = model.theta(a, table.tuples.row(p.negative));
            bpr_loss(pos, neg)
        })
        .sum();
    total / pairs.len() as f64
}

fn outer_add(m: &mut Array2<f64>, scale: f64, left: &Array1<f64>, right: &Array1<f64>) {
    for (i, mut row) in m.axis_iter_mut(Axis(0)).enumerate() {
        let li = scale * left[i];
        if li != 0.0 {
            row.scaled_add(li, right);
        }
    }
}

/// Decoupled-weight-decay Adam state for both maps.
#[derive(Debug, Clone)]
struct AdamW {
    m_rel: Array2<f64>,
    v_rel: Array2<f64>,
    m_tup: Array2<f64>,
    v_tup: Array2<f64>,
    step: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;

impl AdamW {
    fn new(d: usize) -> Self {
        Self {
            m_rel: Array2::zeros((d, d)),
            v_rel: Array2::zeros((d, d)),
            m_tup: Array2::zeros((d, d)),
            v_tup: Array2::zeros((d, d)),
            step: 0,
        }
    }

    fn apply(&mut self, model: &mut USchemaModel, mut grad: Gradient, cfg: &TrainConfig) {
        let norm = grad.norm();
        if norm > cfg.max_grad_norm {
            let scale = cfg.max_grad_norm / (norm + 1e-6);
            grad.w_rel *= scale;
            grad.w_tup *= scale;
        }
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step);
        let bc2 = 1.0 - BETA2.powi(self.step);
        let lr = cfg.learning_rate;
        let decay = 1.0 - lr * cfg.weight_decay;
        for (w, g, m, v) in [
            (&mut model.w_rel, &grad.w_rel, &mut self.m_rel, &mut self.v_rel),
            (&mut model.w_tup, &grad.w_tup, &mut self.m_tup, &mut self.v_tup),
        ] {
            ndarray::Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *w = *w * decay - lr * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
            });
        }
    }
}

/// Initial model: identity maps plus seeded Gaussian noise.
pub fn init_model(provider: Arc<dyn EmbeddingProvider>, cfg: &TrainConfig) -> USchemaModel {
    let mut model = USchemaModel::identity(provider);
    if cfg.init_noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_1417);
        for w in [&mut model.w_rel, &mut model.w_tup] {
            for x in w.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *x += cfg.init_noise * z;
            }
        }
    }
    model
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: USchemaModel,
    pub report: TrainReport,
}

fn pairs_for<R: Rng>(store: &FactStore, positives: &[(usize, usize)], rng: &mut R) -> Result<Vec<RankingPair>> {
    positives
        .iter()
        .map(|&(r, t)| {
            let negative = store.sample_negative_tuple(Some(r), rng)?;
            Ok(RankingPair { relation: r, positive: t, negative })
        })
        .collect()
}

/// Runs one optimizer step per minibatch of `positives`.
fn run_epoch<R: Rng>(
    model: &mut USchemaModel,
    opt: &mut AdamW,
    table: &EmbeddingTable,
    store: &FactStore,
    positives: &mut [(usize, usize)],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<f64> {
    positives.shuffle(rng);
    let (mut total, mut count) = (0.0, 0usize);
    for shard in positives.chunks(cfg.shard_size) {
        for batch in shard.chunks(cfg.batch_size) {
            let pairs = pairs_for(store, batch, rng)?;
            let (loss, grad) = objective_and_gradient(model, table, &pairs);
            total += loss * pairs.len() as f64;
            count += pairs.len();
            opt.apply(model, grad, cfg);
        }
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Trains a model on `positives`, early-stopping on `dev` (or a held-out slice of
/// the positives when `dev` is empty). Returns the model with the best dev loss.
pub fn train(
    positives: &[Fact],
    dev: &[Fact],
    provider: Arc<dyn EmbeddingProvider>,
    cfg: &TrainConfig,
) -> Result<Trained> {
    cfg.validate()?;
    if positives.is_empty() {
        return Err(Error::NoTrainingFacts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut train_facts: Vec<Fact> = positives.to_vec();
    let mut dev_facts: Vec<Fact> = dev.to_vec();
    if dev_facts.is_empty() && cfg.early_stopping && train_facts.len() >= 2 {
        train_facts.shuffle(&mut rng);
        let held = ((train_facts.len() as f64 * cfg.dev_fraction).ceil() as usize).clamp(1, train_facts.len() - 1);
        dev_facts = train_facts.split_off(train_facts.len() - held);
    }

    let store = FactStore::from_facts(train_facts.iter().chain(dev_facts.iter()));
    let index = |f: &Fact| {
        (store.relation_id(&f.relation).unwrap(), store.tuple_id(&f.tuple).unwrap())
    };
    let mut train_ids: Vec<(usize, usize)> = train_facts.iter().map(index).collect();
    let dev_ids: Vec<(usize, usize)> = dev_facts.iter().map(index).collect();

    let mut model = init_model(provider, cfg);
    let table = EmbeddingTable::build(&model, &store)?;

    // dev negatives are drawn once so losses are comparable across epochs
    let mut dev_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let dev_pairs = pairs_for(&store, &dev_ids, &mut dev_rng)?;

    let mut opt = AdamW::new(model.dim());
    let mut report = TrainReport::default();
    let mut best: Option<(f64, USchemaModel)> = None;
    for epoch in 0..cfg.max_epochs {
        let train_loss = run_epoch(&mut model, &mut opt, &table, &store, &mut train_ids, cfg, &mut rng)?;
        let dev_loss = (!dev_pairs.is_empty()).then(|| objective(&model, &table, &dev_pairs));
        report.epochs.push(EpochStats { epoch, train_loss, dev_loss });
        let Some(dev_loss) = dev_loss else { continue };
        match &best {
            Some((best_loss, _)) if dev_loss >= *best_loss => {
                if cfg.early_stopping {
                    report.stopped_early = true;
                    break;
                }
            }
            _ => {
                best = Some((dev_loss, model.clone()));
                report.best_epoch = Some(epoch);
            }
        }
    }
    let model = match best {
        Some((_, m)) if cfg.early_stopping => m,
        _ => model,
    };
    Ok(Trained { model, report })
}

/// Returns a copy of `model` advanced by `steps` ranking updates that treat `observed`
/// as positives, with negatives drawn from `pool` plus the observed tuples.
///
/// The base model is never modified. On [`Error::NoNegativeAvailable`] or
/// [`Error::TooFewTuples`] callers should fall back to an unmodified copy.
pub fn session_update(
    model: &USchemaModel,
    pool: &FactStore,
    observed: &[Fact],
    steps: usize,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<USchemaModel> {
    let mut copy = model.clone();
    if steps == 0 || observed.is_empty() {
        return Ok(copy);
    }
    let mut store = pool.clone();
    let ids: Vec<(usize, usize)> = observed.iter().map(|f| store.insert(f)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut cache: HashMap<usize, usize> = HashMap::new();
    let mut plan: Vec<Vec<(usize, usize, usize)>> = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut step = Vec::with_capacity(ids.len());
        for &(r, t) in &ids {
            let neg = store.sample_negative_tuple(Some(r), &mut rng)?;
            step.push((r, t, neg));
        }
        plan.push(step);
    }

    // embed only the relations and tuples this session touches
    let mut rel_rows: HashMap<usize, usize> = HashMap::new();
    let mut rel_texts: Vec<&str> = Vec::new();
    let mut tuple_texts: Vec<String> = Vec::new();
    for step in &plan {
        for &(r, t, neg) in step {
            rel_rows.entry(r).or_insert_with(|| {
                rel_texts.push(&store.relations()[r]);
                rel_texts.len() - 1
            });
            for tuple in [t, neg] {
                cache.entry(tuple).or_insert_with(|| {
                    tuple_texts.push(store.tuples()[tuple].text());
                    tuple_texts.len() - 1
                });
            }
        }
    }
    let tuple_refs: Vec<&str> = tuple_texts.iter().map(String::as_str).collect();
    let table = EmbeddingTable { relations: stack(&copy, &rel_texts)?, tuples: stack(&copy, &tuple_refs)? };

    let mut opt = AdamW::new(copy.dim());
    for step in plan {
        let pairs: Vec<RankingPair> = step
            .into_iter()
            .map(|(r, t, neg)| RankingPair { relation: rel_rows[&r], positive: cache[&t], negative: cache[&neg] })
            .collect();
        let (_, grad) = objective_and_gradient(&copy, &table, &pairs);
        opt.apply(&mut copy, grad, cfg);
    }
    Ok(copy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashedEmbedder;
    use crate::uschema::model::score_fact;

    fn provider(d: usize) -> Arc<dyn EmbeddingProvider> {
        Arc::new(HashedEmbedder::new(d))
    }

    fn fact(s: &str, r: &str, o: &str) -> Fact {
        Fact::new(s, r, o).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_model_unchanged() {
        let facts = vec![fact("A", "r", "a")];
        let dev = vec![fact("B", "q", "b")];
        let cfg = TrainConfig { learning_rate: 0.0, max_epochs: 1, ..TrainConfig::default() };
        let trained = train(&facts, &dev, provider(8), &cfg).unwrap();
        let init = init_model(provider(8), &cfg);
        assert_eq!(trained.model.relation_map(), init.relation_map());
        assert_eq!(trained.model.tuple_map(), init.tuple_map());
    }

    #[test]
    fn empty_positives_rejected() {
        assert!(matches!(train(&[], &[], provider(4), &TrainConfig::default()), Err(Error::NoTrainingFacts)));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = TrainConfig { dev_fraction: 1.5, ..TrainConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn session_with_zero_steps_is_identity() {
        let base = init_model(provider(8), &TrainConfig::default());
        let pool = FactStore::from_facts(&[fact("A", "r", "a"), fact("B", "r", "b")]);
        let copy = session_update(&base, &pool, &[fact("C", "r", "c")], 0, &TrainConfig::default(), 1).unwrap();
        let f = fact("C", "r", "c");
        assert_eq!(score_fact(&copy, &f).unwrap(), score_fact(&base, &f).unwrap());
    }

    #[test]
    fn saturated_session_reports_no_negative() {
        let base = init_model(provider(8), &TrainConfig::default());
        let pool = FactStore::from_facts(&[fact("A", "r", "a")]);
        let err = session_update(&base, &pool, &[fact("B", "r", "b")], 1, &TrainConfig::default(), 1).unwrap_err();
        assert!(matches!(err, Error::NoNegativeAvailable(_)));
    }
}
