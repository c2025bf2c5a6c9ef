//! Collaborative filtering with Markov graph diffusion.
//!
//! User and item embeddings `X` are diffused over an interaction graph with
//! the recurrence `H(k) = βÂH(k-1) + αX`, normalized by `Γ`, and trained with
//! a multi-negative softmax ranking loss. Two graphs are supported: the
//! stacked user-item graph and a sparsified item-item graph derived from
//! two-step random walks.
//!
//! ```
//! use graph_diffusion_cf::{generate, CorpusSpec, DiffusionConfig, GraphEncoder, LossConfig, TrainConfig, Trainer};
//!
//! let ds = generate(&CorpusSpec::tiny(7)).unwrap();
//! let encoder = GraphEncoder::hetero(&ds, DiffusionConfig::appnp(0.1, 4).unwrap()).unwrap();
//! let cfg = TrainConfig { epochs: 2, batch_size: 512, embedding_dim: 16, ..Default::default() };
//! let loss = LossConfig { n_neg: 8, ..Default::default() };
//! let fit = Trainer::new(&ds, encoder, loss, cfg).unwrap().fit(20, |_| Ok(())).unwrap();
//! assert_eq!(fit.history.len(), 2);
//! ```

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod dense;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod hetero;
pub mod homo;
pub mod losses;
pub mod mgdn;
pub mod sparse;
pub mod synthetic;
pub mod train;
pub mod verify;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use dataset::{load_dataset, random_split, InteractionDataset};
pub use dense::DenseMatrix;
pub use encoder::GraphEncoder;
pub use error::{Error, Result};
pub use eval::{evaluate, ndcg_at_k, rank_items, recall_at_k, RankingReport};
pub use hetero::{build_hetero_affinity, HeteroGraph};
pub use homo::{
    affinity_from_transitions, affinity_histogram, build_homo_graph, build_transitions, sparsify, BinScale, HomoGraph,
    SparsificationConfig,
};
pub use losses::{bpr_loss, combined_loss, info_bpr_loss, l2_loss, loss_and_grad_z, loss_grad_z, LossConfig, TrainingBatch};
pub use mgdn::{
    backprop_diffusion, distance_loss, distance_residual, mgdn_closed_form, mgdn_forward, mgdn_inverse, DiffusionConfig,
    Preset,
};
pub use sparse::{hadamard_sqrt, row_normalize, spgemm, spmm, sym_normalize, SparseMatrix};
pub use synthetic::{generate, CorpusSpec};
pub use train::{train_step, EmbeddingTable, EpochRecord, FitResult, Mode, TrainConfig, Trainer};
pub use verify::{run_battery, CheckKind, VerificationReport};
