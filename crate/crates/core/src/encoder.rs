//! Vertex encoders: the map from input embeddings `X` to representations `Z`
//! for the three training modes, with the matching backward pass.

use crate::dataset::InteractionDataset;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::hetero::build_hetero_affinity;
use crate::homo::{build_homo_graph, HomoGraph, SparsificationConfig};
use crate::mgdn::{mgdn_forward, DiffusionConfig};
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug)]
pub enum GraphEncoder {
    /// Plain matrix factorization, `Z = X`.
    Identity,
    /// Diffusion over the stacked user-item graph.
    Hetero {
        affinity: SparseMatrix,
        diffusion: DiffusionConfig,
    },
    /// Diffusion over the item-item graph; user rows pass through untouched.
    Homo {
        item_affinity: SparseMatrix,
        num_users: usize,
        diffusion: DiffusionConfig,
    },
}

impl GraphEncoder {
    pub fn hetero(ds: &InteractionDataset, diffusion: DiffusionConfig) -> Result<Self> {
        let graph = build_hetero_affinity(ds)?;
        Self::from_hetero_affinity(graph.affinity().clone(), diffusion)
    }

    pub fn from_hetero_affinity(affinity: SparseMatrix, diffusion: DiffusionConfig) -> Result<Self> {
        require_symmetric(&affinity)?;
        Ok(GraphEncoder::Hetero {
            affinity,
            diffusion,
        })
    }

    pub fn homo(
        ds: &InteractionDataset,
        sparsification: SparsificationConfig,
        max_row_fanout: Option<usize>,
        diffusion: DiffusionConfig,
    ) -> Result<Self> {
        let graph = build_homo_graph(ds, sparsification, max_row_fanout)?;
        Self::from_homo_graph(&graph, ds.num_users(), diffusion)
    }

    pub fn from_homo_graph(graph: &HomoGraph, num_users: usize, diffusion: DiffusionConfig) -> Result<Self> {
        require_symmetric(&graph.affinity)?;
        Ok(GraphEncoder::Homo {
            item_affinity: graph.affinity.clone(),
            num_users,
            diffusion,
        })
    }

    pub fn forward(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        match self {
            GraphEncoder::Identity => Ok(x.clone()),
            GraphEncoder::Hetero {
                affinity,
                diffusion,
            } => mgdn_forward(x, affinity, diffusion),
            GraphEncoder::Homo {
                item_affinity,
                num_users,
                diffusion,
            } => {
                let n_items = item_affinity.rows();
                if x.rows() != num_users + n_items {
                    return Err(Error::dim(
                        "GraphEncoder::forward",
                        format!("{} rows for {} users + {} items", x.rows(), num_users, n_items),
                    ));
                }
                let items = x.slice_rows(*num_users, x.rows());
                let diffused = mgdn_forward(&items, item_affinity, diffusion)?;
                let mut z = x.clone();
                z.set_rows(*num_users, &diffused);
                Ok(z)
            }
        }
    }

    /// Pulls `∂L/∂Z` back to `∂L/∂X`. The diffusion operator is self-adjoint
    /// (symmetry is checked at construction), so this reuses the forward map.
    pub fn backward(&self, grad_z: &DenseMatrix) -> Result<DenseMatrix> {
        self.forward(grad_z)
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            GraphEncoder::Identity => "mf",
            GraphEncoder::Hetero { .. } => "hetero",
            GraphEncoder::Homo { .. } => "homo",
        }
    }
}

fn require_symmetric(a: &SparseMatrix) -> Result<()> {
    if !a.is_symmetric(0.0) {
        return Err(Error::Config(
            "diffusion affinity must be symmetric for backpropagation".into(),
        ));
    }
    Ok(())
}
