//! Normalized user-item affinity over the stacked bipartite graph.

use std::path::Path;

use crate::dataset::InteractionDataset;
use crate::error::Result;
use crate::sparse::{sym_normalize, SparseMatrix};

#[derive(Clone, Debug)]
pub struct HeteroGraph {
    affinity: SparseMatrix,
    num_users: usize,
    num_items: usize,
}

impl HeteroGraph {
    pub fn affinity(&self) -> &SparseMatrix {
        &self.affinity
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn export_triplets(&self, path: &Path) -> Result<()> {
        self.affinity.write_triplets(path)
    }
}

/// Block adjacency `[[0, M], [M', 0]]` over training edges, with self-loops
/// and symmetric degree normalization. Item `j` sits at row `num_users + j`.
pub fn build_hetero_affinity(ds: &InteractionDataset) -> Result<HeteroGraph> {
    let n = ds.num_vertices();
    let offset = ds.num_users();
    let adjacency = SparseMatrix::from_triplets(
        n,
        n,
        ds.train_edges().iter().flat_map(|&(u, i)| {
            [(u, offset + i, 1.0), (offset + i, u, 1.0)]
        }),
    )?;
    let affinity = sym_normalize(&adjacency, true)?;
    Ok(HeteroGraph {
        affinity,
        num_users: ds.num_users(),
        num_items: ds.num_items(),
    })
}
