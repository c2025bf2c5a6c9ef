// Top-K ranking metrics: training items are masked out, ties break toward
// the lower item index, users without held-out items are skipped.

use graph_diffusion_cf::{evaluate, ndcg_at_k, rank_items, recall_at_k, DenseMatrix, InteractionDataset, Result};

pub fn run_example() -> Result<()> {
    let ds = InteractionDataset::from_edges(2, 4, [(0, 0), (1, 1)], [(0, 2), (0, 3)])?;
    // users first, then items; user 0 prefers item 3 over item 2
    let z = DenseMatrix::from_rows(&[[1.0], [1.0], [0.9], [0.1], [0.5], [0.7]]);

    let ranked = rank_items(&z, 0, ds.num_users(), ds.num_items(), ds.train_items(0), 2);
    println!("user 0 top-2 (item 0 masked): {ranked:?}");
    println!("recall@2 {:.3}  ndcg@2 {:.4}", recall_at_k(&ranked, ds.test_items(0), 2), ndcg_at_k(&ranked, ds.test_items(0), 2));

    let report = evaluate(&z, &ds, 20, true)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
