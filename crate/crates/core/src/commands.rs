//! The operations behind the `gdcf` binary, usable directly from code.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::checkpoint::Checkpoint;
use crate::config::{default_config_toml, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate, RankingReport};
use crate::homo::{affinity_histogram, build_homo_graph, BinScale};
use crate::train::{EpochRecord, Trainer};
use crate::verify::{run_battery, CheckKind, VerificationReport};

pub const HISTORY_FILE: &str = "history.jsonl";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const EDGE_LIST_FILE: &str = "homo_edges.txt";
pub const HISTOGRAM_FILE: &str = "homo_histogram.txt";

#[derive(Clone, Debug, Serialize)]
pub struct TrainSummary {
    pub best_epoch: Option<usize>,
    pub best_ndcg: Option<f64>,
    pub epochs_run: usize,
    pub history: PathBuf,
    pub best_checkpoint: PathBuf,
    pub final_checkpoint: PathBuf,
}

/// Trains from a config file, writing `history.jsonl` (one record per
/// evaluation) plus best and final checkpoints into `out_dir`.
pub fn cmd_train(config_path: &Path, out_dir: &Path) -> Result<TrainSummary> {
    let cfg = RunConfig::load(config_path)?;
    train_with(&cfg, out_dir)
}

pub fn train_with(cfg: &RunConfig, out_dir: &Path) -> Result<TrainSummary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ds = cfg.load_dataset()?;
    let encoder = cfg.encoder(&ds)?;
    let trainer = Trainer::new(&ds, encoder, cfg.loss, cfg.train.clone())?;

    let history = out_dir.join(HISTORY_FILE);
    let file = File::create(&history).map_err(|e| Error::io(&history, e))?;
    let mut writer = BufWriter::new(file);
    let result = trainer.fit(cfg.eval.cutoff, |rec: &EpochRecord| {
        let line = serde_json::to_string(rec).expect("record serializes");
        writeln!(writer, "{line}").map_err(|e| Error::io(&history, e))
    })?;
    writer.flush().map_err(|e| Error::io(&history, e))?;

    let echo = cfg.to_toml_string();
    let best_checkpoint = out_dir.join(BEST_CHECKPOINT);
    let final_checkpoint = out_dir.join(FINAL_CHECKPOINT);
    for (path, table) in [(&best_checkpoint, &result.best), (&final_checkpoint, &result.last)] {
        Checkpoint {
            table: table.clone(),
            seed: cfg.train.seed,
            config_echo: echo.clone(),
        }
        .save(path)?;
    }
    let best_ndcg = result
        .best_epoch
        .and_then(|e| result.history.iter().find(|r| r.epoch == e))
        .map(|r| r.ndcg);
    Ok(TrainSummary {
        best_epoch: result.best_epoch,
        best_ndcg,
        epochs_run: result.history.last().map_or(0, |r| r.epoch),
        history,
        best_checkpoint,
        final_checkpoint,
    })
}

/// Scores a checkpoint on the configured dataset's test split.
pub fn cmd_eval(checkpoint: &Path, config_path: &Path, cutoff: Option<usize>) -> Result<RankingReport> {
    let cfg = RunConfig::load(config_path)?;
    eval_with(checkpoint, &cfg, cutoff)
}

pub fn eval_with(checkpoint: &Path, cfg: &RunConfig, cutoff: Option<usize>) -> Result<RankingReport> {
    let ck = Checkpoint::load(checkpoint)?;
    let ds = cfg.load_dataset()?;
    if ck.table.num_rows() != ds.num_vertices() {
        return Err(Error::dim(
            "cmd_eval",
            format!(
                "checkpoint has {} rows but the dataset has {} users + {} items",
                ck.table.num_rows(),
                ds.num_users(),
                ds.num_items()
            ),
        ));
    }
    let z = cfg.encoder(&ds)?.forward(&ck.table.x)?;
    evaluate(&z, &ds, cutoff.unwrap_or(cfg.eval.cutoff), false)
}

#[derive(Clone, Debug, Serialize)]
pub struct BuildHomoSummary {
    pub s_percent: f64,
    pub threshold: Option<f64>,
    pub kept_pairs: usize,
    pub candidate_pairs: usize,
    /// True when no pair survived and the item graph fell back to
    /// self-loops.
    pub degenerate: bool,
    pub edge_list: PathBuf,
    pub histogram: PathBuf,
}

/// Builds the sparsified item-item graph and writes its edge list and a
/// log-binned histogram of the unsparsified weights.
pub fn cmd_build_homo(config_path: &Path, out_dir: &Path) -> Result<BuildHomoSummary> {
    let cfg = RunConfig::load(config_path)?;
    build_homo_with(&cfg, out_dir)
}

pub fn build_homo_with(cfg: &RunConfig, out_dir: &Path) -> Result<BuildHomoSummary> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ds = cfg.load_dataset()?;
    let graph = build_homo_graph(&ds, cfg.sparsification()?, cfg.homo.max_row_fanout)?;
    let edge_list = out_dir.join(EDGE_LIST_FILE);
    graph.write_edge_list(&edge_list)?;
    let histogram = out_dir.join(HISTOGRAM_FILE);
    affinity_histogram(&graph.raw_affinity, cfg.homo.histogram_bins, BinScale::Log, graph.threshold).write(&histogram)?;
    let candidate_pairs = graph.raw_affinity.triplets().filter(|&(i, j, _)| i < j).count();
    Ok(BuildHomoSummary {
        s_percent: cfg.homo.s_percent,
        threshold: graph.threshold,
        kept_pairs: graph.kept_pairs().count(),
        candidate_pairs,
        degenerate: graph.threshold.is_none(),
        edge_list,
        histogram,
    })
}

pub const DEFAULT_VERIFY_INSTANCES: usize = 100;

/// Runs the oracle battery; `checks` restricts it to the named checks.
pub fn cmd_verify(seed: u64, instances: usize, checks: &[String], tolerance: Option<f64>) -> Result<VerificationReport> {
    let kinds = checks
        .iter()
        .map(|c| CheckKind::from_name(c))
        .collect::<Result<Vec<_>>>()?;
    run_battery(seed, instances, &kinds, tolerance)
}

pub fn cmd_print_config() -> String {
    default_config_toml()
}
