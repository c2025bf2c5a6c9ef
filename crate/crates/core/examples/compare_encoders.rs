// Trains matrix factorization with BPR, the user-item diffusion encoder
// and the item-item diffusion encoder (both with the multi-negative loss)
// on the same generated corpus and budget, and prints NDCG@20 for each.
// Small batches keep the number of optimizer steps per epoch reasonable on
// a corpus this size.
//
// ```bash
// cargo run --release --example compare_encoders -- 20
// ```

use graph_diffusion_cf::{
    generate, CorpusSpec, DiffusionConfig, GraphEncoder, InteractionDataset, LossConfig, Result, SparsificationConfig,
    TrainConfig, Trainer,
};

pub fn fit_ndcg(ds: &InteractionDataset, encoder: GraphEncoder, n_neg: usize, epochs: usize) -> Result<Vec<f64>> {
    let cfg = TrainConfig {
        epochs,
        batch_size: 512,
        early_stop_patience: 0,
        ..TrainConfig::default()
    };
    let loss = LossConfig { n_neg, l2_coeff: 1e-3 };
    let fit = Trainer::new(ds, encoder, loss, cfg)?.fit(20, |_| Ok(()))?;
    Ok(fit.history.iter().map(|r| r.ndcg).collect())
}

pub fn compare(spec: &CorpusSpec, epochs: usize) -> Result<Vec<(&'static str, Vec<f64>)>> {
    let ds = generate(spec)?;
    println!(
        "corpus: {} users, {} items, {} train / {} test interactions",
        ds.num_users(),
        ds.num_items(),
        ds.train_edges().len(),
        ds.test_edges().len()
    );
    let runs = [
        ("mf+bpr", GraphEncoder::Identity, 1),
        ("mf+infobpr", GraphEncoder::Identity, 300),
        ("hetero+infobpr", GraphEncoder::hetero(&ds, DiffusionConfig::appnp(0.1, 4)?)?, 300),
        (
            "homo+infobpr",
            GraphEncoder::homo(&ds, SparsificationConfig::default(), None, DiffusionConfig::appnp(0.1, 2)?)?,
            300,
        ),
    ];
    let mut out = Vec::new();
    for (name, encoder, n_neg) in runs {
        let start = std::time::Instant::now();
        let curve = fit_ndcg(&ds, encoder, n_neg, epochs)?;
        let best = curve.iter().copied().fold(0.0, f64::max);
        println!(
            "{name:<15} final ndcg@20 {:.4}  best {:.4}  ({:.1}s)",
            curve.last().copied().unwrap_or(0.0),
            best,
            start.elapsed().as_secs_f64()
        );
        out.push((name, curve));
    }
    Ok(out)
}

pub fn run_example() -> Result<()> {
    compare(&CorpusSpec::tiny(5), 2).map(|_| ())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let epochs = std::env::args().nth(1).map_or(20, |a| a.parse().expect("epoch count"));
    compare(&CorpusSpec::default(), epochs)?;
    Ok(())
}
