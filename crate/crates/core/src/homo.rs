//! Sparsified item-item graph built from random-walk transition matrices.
//!
//! Two-step walks item -> user -> item give the conditional probabilities
//! `p(v_j | v_i)`. The geometric mean of the two directions equals the
//! GCN-normalized joint weight `p(v_i, v_j) / sqrt(p(v_i) p(v_j))`, so the
//! graph can be ranked and cut without ever materializing the joint
//! distribution. Kept pairs become unit-weight edges.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::sparse::{hadamard_sqrt, row_normalize, spgemm, sym_normalize, SparseMatrix};

/// Row-stochastic transition operators of the bipartite walk.
#[derive(Clone, Debug)]
pub struct Transitions {
    /// `p(item | user)`, `|U| x |V|`.
    pub user_to_item: SparseMatrix,
    /// `p(user | item)`, `|V| x |U|`.
    pub item_to_user: SparseMatrix,
    /// `p(item_j | item_i)`, `|V| x |V|`.
    pub item_to_item: SparseMatrix,
}

/// Builds the three transition matrices. `max_row_fanout` bounds each row of
/// the item-item product to its largest entries; `None` keeps everything.
pub fn build_transitions(ds: &InteractionDataset, max_row_fanout: Option<usize>) -> Result<Transitions> {
    let user_to_item = row_normalize(ds.train_matrix());
    let item_to_user = row_normalize(&ds.train_matrix().transpose());
    let item_to_item = spgemm(&item_to_user, &user_to_item, max_row_fanout)?;
    Ok(Transitions {
        user_to_item,
        item_to_user,
        item_to_item,
    })
}

/// `(T ⊙ T')^{⊙1/2}`: symmetric item-item affinity on the common support of
/// the transition matrix and its transpose.
pub fn affinity_from_transitions(item_to_item: &SparseMatrix) -> Result<SparseMatrix> {
    hadamard_sqrt(item_to_item, &item_to_item.transpose())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsificationConfig {
    s_percent: f64,
}

impl SparsificationConfig {
    /// `s_percent` is the share of candidate item pairs to drop, in `[0, 100)`.
    pub fn new(s_percent: f64) -> Result<Self> {
        if !(0.0..100.0).contains(&s_percent) {
            return Err(Error::Config(format!(
                "homo.s_percent must lie in [0, 100), got {s_percent}"
            )));
        }
        Ok(Self { s_percent })
    }

    pub fn s_percent(&self) -> f64 {
        self.s_percent
    }
}

impl Default for SparsificationConfig {
    fn default() -> Self {
        Self { s_percent: 97.0 }
    }
}

#[derive(Clone, Debug)]
pub struct HomoGraph {
    /// Unit-weight symmetric adjacency with an empty diagonal.
    pub adjacency: SparseMatrix,
    /// GCN-normalized adjacency used for diffusion.
    pub affinity: SparseMatrix,
    /// Affinity before the cut, kept for histogram export.
    pub raw_affinity: SparseMatrix,
    /// Smallest kept weight, `None` when nothing survived.
    pub threshold: Option<f64>,
    pub config: SparsificationConfig,
}

impl HomoGraph {
    pub fn num_items(&self) -> usize {
        self.affinity.rows()
    }

    /// Kept undirected pairs `(i, j)` with `i < j`.
    pub fn kept_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .triplets()
            .filter(|&(i, j, _)| i < j)
            .map(|(i, j, _)| (i, j))
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (i, j) in self.kept_pairs() {
            writeln!(out, "{i} {j}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Off-diagonal weights, one per undirected pair.
fn pair_weights(affinity: &SparseMatrix) -> Vec<f64> {
    affinity
        .triplets()
        .filter(|&(i, j, _)| i < j)
        .map(|(_, _, w)| w)
        .collect()
}

/// Weight at the `s%` quantile of the undirected pair weights: the smallest
/// weight that survives when the lowest `round(s/100 * n)` pairs are dropped.
pub fn quantile_threshold(affinity: &SparseMatrix, s_percent: f64) -> Option<f64> {
    let mut weights = pair_weights(affinity);
    weights.sort_by(f64::total_cmp);
    let n = weights.len();
    let n_drop = ((s_percent / 100.0) * n as f64).round() as usize;
    weights.get(n_drop).copied()
}

/// Keeps the highest-affinity pairs (ties at the threshold are kept), gives
/// them weight 1.0, drops self-loops and renormalizes with self-loops added.
pub fn sparsify(affinity: &SparseMatrix, cfg: SparsificationConfig) -> Result<HomoGraph> {
    if !affinity.is_symmetric(0.0) {
        return Err(Error::Domain(
            "item-item affinity must be symmetric before sparsification".into(),
        ));
    }
    let threshold = quantile_threshold(affinity, cfg.s_percent);
    let adjacency = match threshold {
        Some(t) => affinity
            .filter(|i, j, w| i != j && w >= t)
            .map_values(|_| 1.0),
        None => {
            log::warn!(
                "s = {}% removes every item-item edge; the item graph degenerates to self-loops",
                cfg.s_percent
            );
            SparseMatrix::zeros(affinity.rows(), affinity.cols())
        }
    };
    let normalized = sym_normalize(&adjacency, true)?;
    Ok(HomoGraph {
        adjacency,
        affinity: normalized,
        raw_affinity: affinity.clone(),
        threshold,
        config: cfg,
    })
}

/// Transitions, affinity and sparsification in one go.
pub fn build_homo_graph(
    ds: &InteractionDataset,
    cfg: SparsificationConfig,
    max_row_fanout: Option<usize>,
) -> Result<HomoGraph> {
    let t = build_transitions(ds, max_row_fanout)?;
    let affinity = affinity_from_transitions(&t.item_to_item)?;
    sparsify(&affinity, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinScale {
    Linear,
    /// Equal-width bins over `log10(weight)`.
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AffinityHistogram {
    pub bins: Vec<HistogramBin>,
    pub threshold: Option<f64>,
}

impl AffinityHistogram {
    /// One `bin_left bin_right count` line per bin, preceded by a
    /// `# threshold` comment line.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        match self.threshold {
            Some(t) => writeln!(out, "# threshold {t:e}").map_err(io)?,
            None => writeln!(out, "# threshold none").map_err(io)?,
        }
        for b in &self.bins {
            writeln!(out, "{:e} {:e} {}", b.left, b.right, b.count).map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// Histogram of off-diagonal affinity weights (one per undirected pair) over
/// `[min, max]`; the last bin is closed on the right.
pub fn affinity_histogram(
    affinity: &SparseMatrix,
    num_bins: usize,
    scale: BinScale,
    threshold: Option<f64>,
) -> AffinityHistogram {
    let weights = pair_weights(affinity);
    if weights.is_empty() || num_bins == 0 {
        return AffinityHistogram {
            bins: Vec::new(),
            threshold,
        };
    }
    let fwd = |w: f64| match scale {
        BinScale::Linear => w,
        BinScale::Log => w.log10(),
    };
    let inv = |x: f64| match scale {
        BinScale::Linear => x,
        BinScale::Log => 10f64.powf(x),
    };
    let lo = weights.iter().copied().map(fwd).fold(f64::INFINITY, f64::min);
    let hi = weights.iter().copied().map(fwd).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / num_bins as f64;
    let mut counts = vec![0usize; num_bins];
    for w in weights {
        let idx = if width > 0.0 {
            (((fwd(w) - lo) / width).floor() as usize).min(num_bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    let bins = counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            left: inv(lo + k as f64 * width),
            right: inv(if k + 1 == num_bins { hi } else { lo + (k + 1) as f64 * width }),
            count,
        })
        .collect();
    AffinityHistogram { bins, threshold }
}
