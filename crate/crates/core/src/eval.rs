//! Top-K evaluation with binary relevance.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::InteractionDataset;
use crate::dense::{dot, DenseMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_CUTOFF: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user: usize,
    pub recall: f64,
    pub ndcg: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub cutoff: usize,
    pub recall: f64,
    pub ndcg: f64,
    pub num_users: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_user: Option<Vec<UserMetrics>>,
}

/// Higher score first, then lower item index.
fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Top-`k` item indices for `user_row` among items `0..num_items` (stored at
/// rows `item_offset..`), skipping everything in the sorted `exclude` list.
pub fn rank_items(
    z: &DenseMatrix,
    user_row: usize,
    item_offset: usize,
    num_items: usize,
    exclude: &[usize],
    k: usize,
) -> Vec<usize> {
    let u = z.row(user_row);
    let mut scored: Vec<(usize, f64)> = (0..num_items)
        .filter(|i| exclude.binary_search(i).is_err())
        .map(|i| (i, dot(u, z.row(item_offset + i))))
        .collect();
    let k = k.min(scored.len());
    if k == 0 {
        return Vec::new();
    }
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_by(rank_order);
    scored.into_iter().map(|(i, _)| i).collect()
}

fn hits<'a>(ranked: &'a [usize], test: &'a [usize], k: usize) -> impl Iterator<Item = (usize, bool)> + 'a {
    ranked
        .iter()
        .take(k)
        .enumerate()
        .map(move |(pos, item)| (pos, test.contains(item)))
}

/// `|top-k ∩ test| / |test|`.
pub fn recall_at_k(ranked: &[usize], test: &[usize], k: usize) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let n = hits(ranked, test, k).filter(|&(_, h)| h).count();
    n as f64 / test.len() as f64
}

/// Binary-relevance NDCG with the ideal list truncated at `min(|test|, k)`.
pub fn ndcg_at_k(ranked: &[usize], test: &[usize], k: usize) -> f64 {
    if test.is_empty() {
        return 0.0;
    }
    let dcg: f64 = hits(ranked, test, k)
        .filter(|&(_, h)| h)
        .map(|(pos, _)| 1.0 / ((pos + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..test.len().min(k))
        .map(|pos| 1.0 / ((pos + 2) as f64).log2())
        .sum();
    dcg / idcg
}

/// Scores every user with test items, masking their training items. `z`
/// holds user rows first, then item rows.
pub fn evaluate(z: &DenseMatrix, ds: &InteractionDataset, cutoff: usize, keep_per_user: bool) -> Result<RankingReport> {
    if z.rows() != ds.num_vertices() {
        return Err(Error::dim(
            "evaluate",
            format!("{} representation rows for {} vertices", z.rows(), ds.num_vertices()),
        ));
    }
    let users: Vec<usize> = (0..ds.num_users())
        .filter(|&u| !ds.test_items(u).is_empty())
        .collect();
    let per_user: Vec<UserMetrics> = users
        .par_iter()
        .map(|&u| {
            let ranked = rank_items(z, u, ds.num_users(), ds.num_items(), ds.train_items(u), cutoff);
            let test = ds.test_items(u);
            UserMetrics {
                user: u,
                recall: recall_at_k(&ranked, test, cutoff),
                ndcg: ndcg_at_k(&ranked, test, cutoff),
            }
        })
        .collect();
    let n = per_user.len();
    let mean = |f: fn(&UserMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_user.iter().map(f).sum::<f64>() / n as f64
        }
    };
    Ok(RankingReport {
        cutoff,
        recall: mean(|m| m.recall),
        ndcg: mean(|m| m.ndcg),
        num_users: n,
        per_user: keep_per_user.then_some(per_user),
    })
}
