// Building the normalized user-item affinity from a handful of
// interactions. Users occupy vertices `0..|U|`, items follow.

use graph_diffusion_cf::{build_hetero_affinity, InteractionDataset, Result};

pub fn run_example() -> Result<()> {
    let train = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)];
    let test = [(0, 2), (2, 0)];
    let ds = InteractionDataset::from_edges(3, 3, train, test)?;
    let graph = build_hetero_affinity(&ds)?;
    let a = graph.affinity();
    println!(
        "{} users, {} items -> {}x{} affinity with {} stored entries",
        graph.num_users(),
        graph.num_items(),
        a.rows(),
        a.cols(),
        a.nnz()
    );
    for (i, j, w) in a.triplets().filter(|&(i, j, _)| i < j) {
        println!("  vertex {i} - vertex {j}: {w:.4}");
    }
    // held-out interactions never enter the graph
    assert_eq!(a.get(0, ds.item_vertex(2)), 0.0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
