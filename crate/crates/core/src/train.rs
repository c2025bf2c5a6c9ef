//! Embedding training: full-graph diffusion once per step, multi-negative
//! ranking loss on the batch, gradients pulled back through the encoder and
//! applied with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::InteractionDataset;
use crate::dense::DenseMatrix;
use crate::encoder::GraphEncoder;
use crate::error::{Error, Result};
use crate::eval::{evaluate, RankingReport};
use crate::losses::{loss_and_grad_z, LossConfig, TrainingBatch};

pub const DEFAULT_DIM: usize = 64;
pub const INIT_STD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hetero,
    Homo,
    #[serde(alias = "none")]
    Mf,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Hetero => "hetero",
            Mode::Homo => "homo",
            Mode::Mf => "mf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub seed: u64,
    pub mode: Mode,
    pub embedding_dim: usize,
    /// Epochs between evaluations.
    pub eval_interval: usize,
    /// Evaluations without NDCG improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 8192,
            lr: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            seed: 42,
            mode: Mode::Hetero,
            embedding_dim: DEFAULT_DIM,
            eval_interval: 1,
            early_stop_patience: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("train.batch_size", self.batch_size),
            ("train.embedding_dim", self.embedding_dim),
            ("train.eval_interval", self.eval_interval),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{key} must be positive")));
            }
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("train.lr must be >= 0, got {}", self.lr)));
        }
        for (key, v) in [("train.adam_beta1", self.adam_beta1), ("train.adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Config(format!("{key} must lie in [0, 1), got {v}")));
            }
        }
        if !(self.adam_epsilon > 0.0) {
            return Err(Error::Config("train.adam_epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Trainable input embeddings, users first then items.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub x: DenseMatrix,
}

impl EmbeddingTable {
    /// i.i.d. `N(0, 0.01²)` entries from a generator seeded with `seed`.
    pub fn init(num_rows: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
        let data = (0..num_rows * dim).map(|_| normal.sample(&mut rng)).collect();
        Self {
            x: DenseMatrix::from_vec(num_rows, dim, data).expect("sized buffer"),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn num_rows(&self) -> usize {
        self.x.rows()
    }
}

/// Dense Adam state over the whole table.
#[derive(Clone, Debug)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.lr,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            epsilon: cfg.adam_epsilon,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let step = self.lr / c1;
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= step * *m / ((*v / c2).sqrt() + self.epsilon);
        }
    }
}

/// One optimization step: diffuse the whole table, score the batch, pull the
/// gradient back through the encoder and update. Returns the batch loss.
pub fn train_step(
    table: &mut EmbeddingTable,
    encoder: &GraphEncoder,
    batch: &TrainingBatch,
    loss: &LossConfig,
    adam: &mut Adam,
) -> Result<f64> {
    let z = encoder.forward(&table.x)?;
    let (value, grad_z) = loss_and_grad_z(&z, batch, loss)?;
    if !value.is_finite() {
        return Err(Error::NonFiniteLoss {
            value,
            epoch: 0,
            step: adam.steps() as usize,
        });
    }
    let grad_x = encoder.backward(&grad_z)?;
    adam.update(table.x.as_mut_slice(), grad_x.as_slice());
    Ok(value)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mode: String,
    pub loss: f64,
    pub recall: f64,
    pub ndcg: f64,
    pub cutoff: usize,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    /// Table with the best evaluation NDCG (the initial table if no
    /// evaluation ran).
    pub best: EmbeddingTable,
    pub best_epoch: Option<usize>,
    pub last: EmbeddingTable,
    pub history: Vec<EpochRecord>,
}

/// Stateful driver over epochs.
pub struct Trainer<'a> {
    ds: &'a InteractionDataset,
    encoder: GraphEncoder,
    loss: LossConfig,
    cfg: TrainConfig,
    table: EmbeddingTable,
    adam: Adam,
    shuffle_rng: ChaCha8Rng,
    negative_rng: ChaCha8Rng,
    epoch: usize,
}

impl<'a> Trainer<'a> {
    pub fn new(ds: &'a InteractionDataset, encoder: GraphEncoder, loss: LossConfig, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        loss.validate()?;
        let table = EmbeddingTable::init(ds.num_vertices(), cfg.embedding_dim, cfg.seed);
        let adam = Adam::new(table.x.as_slice().len(), &cfg);
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        shuffle_rng.set_stream(1);
        let mut negative_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        negative_rng.set_stream(2);
        Ok(Self {
            ds,
            encoder,
            loss,
            cfg,
            table,
            adam,
            shuffle_rng,
            negative_rng,
            epoch: 0,
        })
    }

    pub fn table(&self) -> &EmbeddingTable {
        &self.table
    }

    pub fn encoder(&self) -> &GraphEncoder {
        &self.encoder
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One pass over the training edges in a fresh shuffled order. Returns
    /// the mean batch loss.
    pub fn train_epoch(&mut self) -> Result<f64> {
        let mut edges = self.ds.train_edges().to_vec();
        edges.shuffle(&mut self.shuffle_rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for (step, chunk) in edges.chunks(self.cfg.batch_size).enumerate() {
            let batch = TrainingBatch::sample(
                chunk,
                self.ds.num_users(),
                self.ds.num_items(),
                self.loss.n_neg,
                &mut self.negative_rng,
            )?;
            let value = train_step(&mut self.table, &self.encoder, &batch, &self.loss, &mut self.adam)
                .map_err(|e| match e {
                    Error::NonFiniteLoss { value, .. } => Error::NonFiniteLoss {
                        value,
                        epoch: self.epoch,
                        step,
                    },
                    other => other,
                })?;
            total += value;
            batches += 1;
        }
        self.epoch += 1;
        Ok(if batches == 0 { 0.0 } else { total / batches as f64 })
    }

    pub fn representations(&self) -> Result<DenseMatrix> {
        self.encoder.forward(&self.table.x)
    }

    pub fn evaluate(&self, cutoff: usize) -> Result<RankingReport> {
        evaluate(&self.representations()?, self.ds, cutoff, false)
    }

    /// Runs the configured epochs with periodic evaluation and early
    /// stopping, keeping the best table by NDCG. `on_record` sees each
    /// history record as it is produced.
    pub fn fit(mut self, cutoff: usize, mut on_record: impl FnMut(&EpochRecord) -> Result<()>) -> Result<FitResult> {
        let mut history = Vec::new();
        let mut best = self.table.clone();
        let mut best_ndcg = f64::NEG_INFINITY;
        let mut best_epoch = None;
        let mut stale = 0usize;
        for _ in 0..self.cfg.epochs {
            let loss = self.train_epoch()?;
            if self.epoch % self.cfg.eval_interval != 0 {
                continue;
            }
            let report = self.evaluate(cutoff)?;
            let record = EpochRecord {
                epoch: self.epoch,
                mode: self.encoder.mode_name().to_string(),
                loss,
                recall: report.recall,
                ndcg: report.ndcg,
                cutoff,
            };
            log::info!(
                "epoch {:>4} loss {:.6} recall@{} {:.5} ndcg@{} {:.5}",
                record.epoch,
                record.loss,
                cutoff,
                record.recall,
                cutoff,
                record.ndcg
            );
            on_record(&record)?;
            history.push(record);
            if report.ndcg > best_ndcg {
                best_ndcg = report.ndcg;
                best = self.table.clone();
                best_epoch = Some(self.epoch);
                stale = 0;
            } else {
                stale += 1;
                if self.cfg.early_stop_patience > 0 && stale >= self.cfg.early_stop_patience {
                    log::info!("early stop after {stale} evaluations without improvement");
                    break;
                }
            }
        }
        Ok(FitResult {
            best,
            best_epoch,
            last: self.table,
            history,
        })
    }
}
