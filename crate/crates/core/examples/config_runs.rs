// Driving everything from a TOML run configuration, the same path the
// `gdcf` binary takes: train, re-evaluate the saved checkpoint at another
// cutoff, and build the item-item graph files.

use graph_diffusion_cf::commands::{build_homo_with, eval_with, train_with};
use graph_diffusion_cf::{Error, Result, RunConfig};

const CONFIG: &str = r#"
[dataset]
synthetic = "tiny"

[diffusion]
preset = "appnp"
alpha = 0.1
k_layers = 4

[loss]
n_neg = 32

[train]
epochs = 3
batch_size = 256
lr = 0.01
embedding_dim = 16
mode = "hetero"
"#;

pub fn run_example() -> Result<()> {
    let cfg = RunConfig::from_toml_str(CONFIG)?;
    let out = std::env::temp_dir().join(format!("gdcf-config-example-{}", std::process::id()));

    let summary = train_with(&cfg, &out)?;
    println!("best epoch {:?}, ndcg {:?}", summary.best_epoch, summary.best_ndcg);
    let history = std::fs::read_to_string(&summary.history).map_err(|e| Error::Io { path: summary.history.clone(), source: e })?;
    print!("{history}");

    let report = eval_with(&summary.best_checkpoint, &cfg, Some(10))?;
    println!("recall@10 {:.4}  ndcg@10 {:.4}", report.recall, report.ndcg);

    let homo = build_homo_with(&cfg, &out)?;
    println!(
        "item graph at s={}%: kept {} of {} pairs (threshold {:?})",
        homo.s_percent, homo.kept_pairs, homo.candidate_pairs, homo.threshold
    );
    let _ = std::fs::remove_dir_all(&out);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
