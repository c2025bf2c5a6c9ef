//! Ranking losses on diffused representations and their gradients.
//!
//! Scores are dot products between a user row and an item row of `Z`. The
//! multi-negative loss is a softmax cross-entropy over one positive and
//! `N_neg` uniformly drawn negatives; with a single negative it is exactly
//! BPR. Values are means over the positives of a batch.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::{dot, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossConfig {
    pub n_neg: usize,
    pub l2_coeff: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            n_neg: 300,
            l2_coeff: 1e-4,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_neg == 0 {
            return Err(Error::Config("loss.n_neg must be at least 1".into()));
        }
        if !(self.l2_coeff >= 0.0 && self.l2_coeff.is_finite()) {
            return Err(Error::Config(format!(
                "loss.l2_coeff must be a finite value >= 0, got {}",
                self.l2_coeff
            )));
        }
        Ok(())
    }
}

/// Positive edges and their sampled negatives, as row indices into `Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingBatch {
    users: Vec<usize>,
    positives: Vec<usize>,
    /// `n_neg` entries per positive, row-major.
    negatives: Vec<usize>,
    n_neg: usize,
}

impl TrainingBatch {
    /// `users` and item lists are row indices of `Z` (items already offset).
    pub fn new(users: Vec<usize>, positives: Vec<usize>, negatives: Vec<usize>, n_neg: usize) -> Result<Self> {
        if n_neg == 0 || users.len() != positives.len() || negatives.len() != users.len() * n_neg {
            return Err(Error::dim(
                "TrainingBatch",
                format!(
                    "{} users, {} positives, {} negatives at {} per positive",
                    users.len(),
                    positives.len(),
                    negatives.len(),
                    n_neg
                ),
            ));
        }
        Ok(Self {
            users,
            positives,
            negatives,
            n_neg,
        })
    }

    /// Draws `n_neg` negatives per edge uniformly over all items, with
    /// replacement and without filtering out the user's own positives.
    /// Edges are `(user, item)` pairs in dataset indices.
    pub fn sample<R: Rng>(
        edges: &[(usize, usize)],
        num_users: usize,
        num_items: usize,
        n_neg: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if num_items == 0 {
            return Err(Error::Config("cannot sample negatives from an empty catalogue".into()));
        }
        let users = edges.iter().map(|&(u, _)| u).collect();
        let positives = edges.iter().map(|&(_, i)| num_users + i).collect();
        let negatives = (0..edges.len() * n_neg)
            .map(|_| num_users + rng.random_range(0..num_items))
            .collect();
        Self::new(users, positives, negatives, n_neg)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn users(&self) -> &[usize] {
        &self.users
    }

    pub fn positives(&self) -> &[usize] {
        &self.positives
    }

    pub fn negatives_of(&self, p: usize) -> &[usize] {
        &self.negatives[p * self.n_neg..(p + 1) * self.n_neg]
    }

    /// Candidate rows of positive `p`: the positive first, then negatives.
    fn candidates(&self, p: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.positives[p]).chain(self.negatives_of(p).iter().copied())
    }

    fn check_rows(&self, z: &DenseMatrix) -> Result<()> {
        let max = self
            .users
            .iter()
            .chain(&self.positives)
            .chain(&self.negatives)
            .copied()
            .max();
        match max {
            Some(m) if m >= z.rows() => Err(Error::dim(
                "TrainingBatch",
                format!("row {m} out of range for {} rows", z.rows()),
            )),
            _ => Ok(()),
        }
    }
}

pub fn score(z: &DenseMatrix, user_row: usize, item_row: usize) -> f64 {
    dot(z.row(user_row), z.row(item_row))
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Mean of `softplus(-(s⁺ - s⁻))` over the batch. Requires one negative per
/// positive.
pub fn bpr_loss(z: &DenseMatrix, batch: &TrainingBatch) -> Result<f64> {
    if batch.n_neg != 1 {
        return Err(Error::Config(format!(
            "BPR takes exactly one negative per positive, batch has {}",
            batch.n_neg
        )));
    }
    batch.check_rows(z)?;
    if batch.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = (0..batch.len())
        .map(|p| {
            let u = batch.users[p];
            let diff = score(z, u, batch.positives[p]) - score(z, u, batch.negatives[p]);
            softplus(-diff)
        })
        .sum();
    Ok(total / batch.len() as f64)
}

/// Per-positive loss `logsumexp(s) - s⁺` and softmax weights over the
/// candidates (positive first).
fn softmax_terms(z: &DenseMatrix, batch: &TrainingBatch, p: usize) -> (f64, Vec<f64>) {
    let u = z.row(batch.users[p]);
    let scores: Vec<f64> = batch.candidates(p).map(|r| dot(u, z.row(r))).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let norm: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= norm);
    (max + norm.ln() - scores[0], weights)
}

/// Mean over positives of `-log(e^{s⁺} / (e^{s⁺} + Σ_k e^{s⁻_k}))`.
pub fn info_bpr_loss(z: &DenseMatrix, batch: &TrainingBatch) -> Result<f64> {
    batch.check_rows(z)?;
    if batch.is_empty() {
        return Ok(0.0);
    }
    let per: Vec<f64> = (0..batch.len())
        .into_par_iter()
        .map(|p| softmax_terms(z, batch, p).0)
        .collect();
    Ok(per.iter().sum::<f64>() / batch.len() as f64)
}

/// Half the squared norms of every row the batch touches, counted once per
/// occurrence, divided by the batch size.
pub fn l2_loss(z: &DenseMatrix, batch: &TrainingBatch) -> Result<f64> {
    batch.check_rows(z)?;
    if batch.is_empty() {
        return Ok(0.0);
    }
    let sq = |r: usize| z.row(r).iter().map(|v| v * v).sum::<f64>();
    let total: f64 = batch
        .users
        .iter()
        .chain(&batch.positives)
        .chain(&batch.negatives)
        .map(|&r| sq(r))
        .sum();
    Ok(0.5 * total / batch.len() as f64)
}

pub fn combined_loss(z: &DenseMatrix, batch: &TrainingBatch, cfg: &LossConfig) -> Result<f64> {
    let rank = info_bpr_loss(z, batch)?;
    if cfg.l2_coeff == 0.0 {
        return Ok(rank);
    }
    Ok(rank + cfg.l2_coeff * l2_loss(z, batch)?)
}

/// Combined loss and its gradient with respect to `Z`. Only rows touched by
/// the batch are nonzero. Accumulation into each row follows batch order, so
/// the result does not depend on thread scheduling.
pub fn loss_and_grad_z(
    z: &DenseMatrix,
    batch: &TrainingBatch,
    cfg: &LossConfig,
) -> Result<(f64, DenseMatrix)> {
    batch.check_rows(z)?;
    let d = z.cols();
    let mut grad = DenseMatrix::zeros(z.rows(), d);
    let b = batch.len();
    if b == 0 {
        return Ok((0.0, grad));
    }
    let scale = 1.0 / b as f64;

    // Per positive: loss term, softmax coefficients (w - onehot) and the
    // user-row contribution Σ_k c_k z_{v_k}.
    let terms: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..b)
        .into_par_iter()
        .map(|p| {
            let (loss, mut coef) = softmax_terms(z, batch, p);
            coef[0] -= 1.0;
            let mut user_grad = vec![0.0; d];
            for (c, r) in coef.iter().zip(batch.candidates(p)) {
                for (g, v) in user_grad.iter_mut().zip(z.row(r)) {
                    *g += c * v;
                }
            }
            (loss, coef, user_grad)
        })
        .collect();

    let rank_loss: f64 = terms.iter().map(|t| t.0).sum::<f64>() * scale;

    // Bucket item contributions by target row, preserving (p, k) order.
    let k1 = batch.n_neg + 1;
    let rows = z.rows();
    let mut counts = vec![0usize; rows + 1];
    for p in 0..b {
        for r in batch.candidates(p) {
            counts[r + 1] += 1;
        }
    }
    for r in 0..rows {
        counts[r + 1] += counts[r];
    }
    let offsets = counts.clone();
    let mut fill = counts;
    let mut slots = vec![(0u32, 0u32); offsets[rows]];
    for p in 0..b {
        for (k, r) in batch.candidates(p).enumerate() {
            slots[fill[r]] = (p as u32, k as u32);
            fill[r] += 1;
        }
    }
    let mut user_slots: Vec<Vec<usize>> = vec![Vec::new(); rows];
    for (p, &u) in batch.users.iter().enumerate() {
        user_slots[u].push(p);
    }
    let mut occurrences = vec![0usize; rows];
    for &r in batch.users.iter().chain(&batch.positives).chain(&batch.negatives) {
        occurrences[r] += 1;
    }

    grad.as_mut_slice()
        .par_chunks_mut(d.max(1))
        .enumerate()
        .for_each(|(r, out)| {
            if d == 0 {
                return;
            }
            for &p in &user_slots[r] {
                for (o, g) in out.iter_mut().zip(&terms[p].2) {
                    *o += g;
                }
            }
            for &(p, k) in &slots[offsets[r]..offsets[r + 1]] {
                let c = terms[p as usize].1[k as usize];
                for (o, v) in out.iter_mut().zip(z.row(batch.users[p as usize])) {
                    *o += c * v;
                }
            }
            if cfg.l2_coeff != 0.0 && occurrences[r] > 0 {
                let c = cfg.l2_coeff * occurrences[r] as f64;
                for (o, v) in out.iter_mut().zip(z.row(r)) {
                    *o += c * v;
                }
            }
            out.iter_mut().for_each(|o| *o *= scale);
        });
    debug_assert_eq!(k1 * b, offsets[rows]);

    let total = if cfg.l2_coeff == 0.0 {
        rank_loss
    } else {
        rank_loss + cfg.l2_coeff * l2_loss(z, batch)?
    };
    Ok((total, grad))
}

/// Gradient of [`combined_loss`] with respect to `Z`.
pub fn loss_grad_z(z: &DenseMatrix, batch: &TrainingBatch, cfg: &LossConfig) -> Result<DenseMatrix> {
    loss_and_grad_z(z, batch, cfg).map(|(_, g)| g)
}
