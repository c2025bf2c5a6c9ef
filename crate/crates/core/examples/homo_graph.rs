// Item-item graph construction: two-step walk transitions, the symmetric
// affinity derived from them, sparsification at several `s%` levels and a
// log-binned histogram of the raw weights.

use graph_diffusion_cf::{
    affinity_from_transitions, affinity_histogram, build_transitions, generate, sparsify, BinScale, CorpusSpec, Result,
    SparsificationConfig,
};

pub fn run_example() -> Result<()> {
    let ds = generate(&CorpusSpec::tiny(11))?;
    let t = build_transitions(&ds, None)?;
    let affinity = affinity_from_transitions(&t.item_to_item)?;
    let pairs = affinity.triplets().filter(|&(i, j, _)| i < j).count();
    println!("{} items, {pairs} co-occurring pairs", ds.num_items());

    for s in [0.0, 90.0, 97.0, 99.9] {
        let g = sparsify(&affinity, SparsificationConfig::new(s)?)?;
        println!(
            "s = {s:>5}%  threshold {:<12}  kept pairs {}",
            g.threshold.map_or("none".into(), |t| format!("{t:.5}")),
            g.kept_pairs().count()
        );
    }

    let g = sparsify(&affinity, SparsificationConfig::default())?;
    let hist = affinity_histogram(&affinity, 8, BinScale::Log, g.threshold);
    for b in &hist.bins {
        println!("  [{:.2e}, {:.2e}) {}", b.left, b.right, b.count);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
