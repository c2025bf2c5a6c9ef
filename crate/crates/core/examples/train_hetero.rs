// End-to-end training on a small generated corpus with the user-item
// diffusion encoder, followed by a checkpoint round trip.

use graph_diffusion_cf::{
    evaluate, generate, Checkpoint, CorpusSpec, DiffusionConfig, GraphEncoder, LossConfig, Result, TrainConfig, Trainer,
};

pub fn run_example() -> Result<()> {
    let ds = generate(&CorpusSpec::tiny(3))?;
    let encoder = GraphEncoder::hetero(&ds, DiffusionConfig::appnp(0.1, 4)?)?;
    let cfg = TrainConfig {
        epochs: 5,
        batch_size: 256,
        lr: 1e-2,
        embedding_dim: 32,
        ..TrainConfig::default()
    };
    let loss = LossConfig { n_neg: 32, ..LossConfig::default() };
    let fit = Trainer::new(&ds, encoder.clone(), loss, cfg.clone())?.fit(20, |r| {
        println!("epoch {:>2}  loss {:.4}  recall@20 {:.4}  ndcg@20 {:.4}", r.epoch, r.loss, r.recall, r.ndcg);
        Ok(())
    })?;

    let dir = std::env::temp_dir().join(format!("gdcf-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| graph_diffusion_cf::Error::Io { path: dir.clone(), source: e })?;
    let path = dir.join("best.ckpt");
    Checkpoint { table: fit.best.clone(), seed: cfg.seed, config_echo: String::new() }.save(&path)?;
    let restored = Checkpoint::load(&path)?;
    let report = evaluate(&encoder.forward(&restored.table.x)?, &ds, 20, false)?;
    println!("restored best (epoch {:?}): ndcg@20 {:.4}", fit.best_epoch, report.ndcg);
    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
