//! Implicit-feedback interaction corpora.
//!
//! The on-disk format is one line per user: the user id followed by the ids
//! of every item that user interacted with, separated by any run of spaces or
//! tabs. Ids are dense and 0-based. Users and items live in separate index
//! spaces; graph builders place item `j` at global vertex `num_users + j`.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug)]
pub struct InteractionDataset {
    num_users: usize,
    num_items: usize,
    train_edges: Vec<(usize, usize)>,
    test_edges: Vec<(usize, usize)>,
    train_matrix: SparseMatrix,
    train_items: Vec<Vec<usize>>,
    test_items: Vec<Vec<usize>>,
}

impl InteractionDataset {
    /// Builds a dataset from explicit edge lists. Duplicate pairs within a
    /// split collapse to one edge; an edge present in both splits is an error.
    pub fn from_edges(
        num_users: usize,
        num_items: usize,
        train: impl IntoIterator<Item = (usize, usize)>,
        test: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let train = collect_split(num_users, num_items, train, "train")?;
        let test = collect_split(num_users, num_items, test, "test")?;
        if let Some(&(u, i)) = train.intersection(&test).next() {
            return Err(Error::Domain(format!(
                "edge (user {u}, item {i}) appears in both train and test splits"
            )));
        }
        let train_edges: Vec<_> = train.into_iter().collect();
        let test_edges: Vec<_> = test.into_iter().collect();
        let train_matrix = SparseMatrix::from_triplets(
            num_users,
            num_items,
            train_edges.iter().map(|&(u, i)| (u, i, 1.0)),
        )?;
        let train_items = group_by_user(num_users, &train_edges);
        let test_items = group_by_user(num_users, &test_edges);
        Ok(Self {
            num_users,
            num_items,
            train_edges,
            test_edges,
            train_matrix,
            train_items,
            test_items,
        })
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    /// Total vertex count of the bipartite graph.
    pub fn num_vertices(&self) -> usize {
        self.num_users + self.num_items
    }

    /// Sorted by (user, item).
    pub fn train_edges(&self) -> &[(usize, usize)] {
        &self.train_edges
    }

    pub fn test_edges(&self) -> &[(usize, usize)] {
        &self.test_edges
    }

    /// Binary user-item interaction matrix over training edges.
    pub fn train_matrix(&self) -> &SparseMatrix {
        &self.train_matrix
    }

    pub fn train_items(&self, user: usize) -> &[usize] {
        &self.train_items[user]
    }

    pub fn test_items(&self, user: usize) -> &[usize] {
        &self.test_items[user]
    }

    pub fn item_vertex(&self, item: usize) -> usize {
        self.num_users + item
    }

    pub fn density(&self) -> f64 {
        let cells = (self.num_users * self.num_items) as f64;
        (self.train_edges.len() + self.test_edges.len()) as f64 / cells
    }

    /// Writes both splits in the line format accepted by [`load_dataset`].
    pub fn export(&self, train_path: &Path, test_path: &Path) -> Result<()> {
        write_split(train_path, &self.train_items)?;
        write_split(test_path, &self.test_items)
    }
}

fn collect_split(
    num_users: usize,
    num_items: usize,
    edges: impl IntoIterator<Item = (usize, usize)>,
    split: &str,
) -> Result<BTreeSet<(usize, usize)>> {
    let mut set = BTreeSet::new();
    for (u, i) in edges {
        if u >= num_users || i >= num_items {
            return Err(Error::dim(
                "InteractionDataset",
                format!("{split} edge ({u}, {i}) outside {num_users} users x {num_items} items"),
            ));
        }
        set.insert((u, i));
    }
    Ok(set)
}

fn group_by_user(num_users: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); num_users];
    for &(u, i) in edges {
        out[u].push(i);
    }
    out
}

/// One parsed split: users seen (including item-less lines) and edges.
#[derive(Debug, Default)]
struct RawSplit {
    max_user: Option<usize>,
    max_item: Option<usize>,
    edges: Vec<(usize, usize)>,
}

fn parse_id(token: &str, path: &Path, line: usize) -> Result<usize> {
    let err = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    match token.parse::<i64>() {
        Ok(v) if v < 0 => Err(err(format!("negative id {v}"))),
        Ok(v) => usize::try_from(v).map_err(|_| err(format!("id {v} out of range"))),
        Err(_) => Err(err(format!("expected an integer id, found {token:?}"))),
    }
}

fn parse_split(path: &Path) -> Result<RawSplit> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut raw = RawSplit::default();
    // `lines` strips both LF and CRLF terminators.
    for (idx, line) in text.lines().enumerate() {
        let mut tokens = line.split_ascii_whitespace();
        let Some(first) = tokens.next() else { continue };
        let user = parse_id(first, path, idx + 1)?;
        raw.max_user = raw.max_user.max(Some(user));
        for tok in tokens {
            let item = parse_id(tok, path, idx + 1)?;
            raw.max_item = raw.max_item.max(Some(item));
            raw.edges.push((user, item));
        }
    }
    Ok(raw)
}

/// Loads a train/test pair. User and item counts are one past the largest
/// id seen in either file.
pub fn load_dataset(train_path: impl AsRef<Path>, test_path: impl AsRef<Path>) -> Result<InteractionDataset> {
    let train = parse_split(train_path.as_ref())?;
    let test = parse_split(test_path.as_ref())?;
    let count = |a: Option<usize>, b: Option<usize>| a.max(b).map_or(0, |m| m + 1);
    let num_users = count(train.max_user, test.max_user);
    let num_items = count(train.max_item, test.max_item);
    log::info!(
        "loaded {} users, {} items, {} train / {} test lines of edges",
        num_users,
        num_items,
        train.edges.len(),
        test.edges.len()
    );
    InteractionDataset::from_edges(num_users, num_items, train.edges, test.edges)
}

fn write_split(path: &Path, per_user: &[Vec<usize>]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(PathBuf::from(path), e);
    for (user, items) in per_user.iter().enumerate() {
        write!(out, "{user}").map_err(io)?;
        for item in items {
            write!(out, " {item}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Seeded per-user holdout: each user's interactions are shuffled and the
/// last `round(test_fraction * n)` go to the test split. Users with a single
/// interaction keep it in train.
pub fn random_split(
    num_users: usize,
    num_items: usize,
    interactions: &[(usize, usize)],
    test_fraction: f64,
    seed: u64,
) -> Result<InteractionDataset> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config(format!(
            "test fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let unique = collect_split(num_users, num_items, interactions.iter().copied(), "input")?;
    let mut per_user = vec![Vec::new(); num_users];
    for (u, i) in unique {
        per_user[u].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (u, mut items) in per_user.into_iter().enumerate() {
        items.shuffle(&mut rng);
        let n_test = if items.len() < 2 {
            0
        } else {
            ((items.len() as f64 * test_fraction).round() as usize).min(items.len() - 1)
        };
        let split = items.len() - n_test;
        train.extend(items[..split].iter().map(|&i| (u, i)));
        test.extend(items[split..].iter().map(|&i| (u, i)));
    }
    InteractionDataset::from_edges(num_users, num_items, train, test)
}
