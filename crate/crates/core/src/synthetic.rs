//! Seeded generator for small implicit-feedback corpora with latent taste
//! clusters and long-tailed item popularity, shaped like the classic
//! ~1k-user movie-rating benchmarks.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, weighted::WeightedIndex};

use crate::dataset::{random_split, InteractionDataset};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct CorpusSpec {
    pub num_users: usize,
    pub num_items: usize,
    pub num_clusters: usize,
    /// Median interactions per user before clamping.
    pub median_interactions: f64,
    pub min_interactions: usize,
    pub max_interactions: usize,
    /// Share of a user's draws taken from their primary / secondary cluster;
    /// the remainder is popularity-weighted noise over the whole catalogue.
    pub primary_share: f64,
    pub secondary_share: f64,
    /// Zipf exponent of item popularity inside a cluster.
    pub popularity_exponent: f64,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            num_users: 1000,
            num_items: 1700,
            num_clusters: 16,
            median_interactions: 45.0,
            min_interactions: 10,
            max_interactions: 300,
            primary_share: 0.65,
            secondary_share: 0.2,
            popularity_exponent: 0.8,
            test_fraction: 0.2,
            seed: 2022,
        }
    }
}

impl CorpusSpec {
    /// A scaled-down corpus for quick runs and doc examples.
    pub fn tiny(seed: u64) -> Self {
        Self {
            num_users: 120,
            num_items: 200,
            num_clusters: 6,
            median_interactions: 20.0,
            min_interactions: 5,
            max_interactions: 60,
            seed,
            ..Self::default()
        }
    }
}

/// Draws the full interaction list, then applies a seeded per-user holdout.
pub fn generate(spec: &CorpusSpec) -> Result<InteractionDataset> {
    let interactions = generate_interactions(spec);
    random_split(
        spec.num_users,
        spec.num_items,
        &interactions,
        spec.test_fraction,
        spec.seed ^ 0x5eed,
    )
}

pub fn generate_interactions(spec: &CorpusSpec) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let clusters = spec.num_clusters.max(1);

    let mut order: Vec<usize> = (0..spec.num_items).collect();
    order.shuffle(&mut rng);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clusters];
    for (pos, &item) in order.iter().enumerate() {
        members[pos % clusters].push(item);
    }
    let weights = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|r| 1.0 / ((r + 10) as f64).powf(spec.popularity_exponent))
            .collect()
    };
    let cluster_pick: Vec<Option<WeightedIndex<f64>>> = members
        .iter()
        .map(|m| WeightedIndex::new(weights(m.len())).ok())
        .collect();
    let global_pick = WeightedIndex::new(weights(spec.num_items)).ok();

    let sizes = LogNormal::new(spec.median_interactions.ln(), 0.6).expect("valid lognormal");
    let cap = spec.num_items.min(spec.max_interactions);
    let mut out = Vec::new();
    for user in 0..spec.num_users {
        let primary = rng.random_range(0..clusters);
        let secondary = rng.random_range(0..clusters);
        let target = (sizes.sample(&mut rng).round() as usize)
            .clamp(spec.min_interactions.min(cap), cap);
        let mut chosen = HashSet::with_capacity(target);
        let mut attempts = 0;
        while chosen.len() < target && attempts < target * 50 {
            attempts += 1;
            let roll: f64 = rng.random();
            let item = if roll < spec.primary_share + spec.secondary_share {
                let c = if roll < spec.primary_share { primary } else { secondary };
                match &cluster_pick[c] {
                    Some(pick) => members[c][pick.sample(&mut rng)],
                    None => continue,
                }
            } else {
                match &global_pick {
                    Some(pick) => order[pick.sample(&mut rng)],
                    None => continue,
                }
            };
            if chosen.insert(item) {
                out.push((user, item));
            }
        }
    }
    out
}
