//! Compressed sparse row storage and the handful of kernels the graph
//! operators are built from.
//!
//! Every matrix keeps sorted, deduplicated column indices per row and never
//! stores an explicit zero. Kernels accumulate in ascending column order so
//! results are reproducible bit for bit, with or without row parallelism.

use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            indptr: vec![0; rows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Assembles a matrix from `(row, col, weight)` triplets. Duplicate
    /// coordinates are summed; entries that end up exactly zero are dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, w) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::dim(
                    "SparseMatrix::from_triplets",
                    format!("entry ({r}, {c}) outside {rows}x{cols}"),
                ));
            }
            if !w.is_finite() {
                return Err(Error::Domain(format!("non-finite weight {w} at ({r}, {c})")));
            }
            per_row[r].push((c, w));
        }
        Ok(Self::from_row_lists(rows, cols, per_row))
    }

    /// Rows are sorted and merged in place; indices must already be in range.
    fn from_row_lists(rows: usize, cols: usize, per_row: Vec<Vec<(usize, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for mut row in per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < row.len() {
                let c = row[k].0;
                let mut w = 0.0;
                while k < row.len() && row[k].0 == c {
                    w += row[k].1;
                    k += 1;
                }
                if w != 0.0 {
                    indices.push(c);
                    values.push(w);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let triplets = (0..m.rows())
            .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, m.get(i, j)))
            .filter(|&(_, _, w)| w != 0.0);
        Self::from_triplets(m.rows(), m.cols(), triplets).expect("dense input is in range")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Column indices and weights of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &w)| (i, j, w))
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, w) in self.triplets() {
            out.set(i, j, w);
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Same sparsity pattern, every stored weight replaced by `f(weight)`.
    /// Results equal to zero are dropped.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> SparseMatrix {
        let per_row = (0..self.rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, &w)| (c, f(w))).collect()
            })
            .collect();
        Self::from_row_lists(self.rows, self.cols, per_row)
    }

    /// Drops every entry for which `keep(row, col, weight)` is false.
    pub fn filter(&self, keep: impl Fn(usize, usize, f64) -> bool) -> SparseMatrix {
        let per_row = (0..self.rows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter()
                    .zip(vals)
                    .filter(|&(&c, &w)| keep(i, c, w))
                    .map(|(&c, &w)| (c, w))
                    .collect()
            })
            .collect();
        Self::from_row_lists(self.rows, self.cols, per_row)
    }

    /// `true` when the index pattern equals its transpose's and mirrored
    /// weights differ by at most `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let t = self.transpose();
        t.indptr == self.indptr
            && t.indices == self.indices
            && t.values
                .iter()
                .zip(&self.values)
                .all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        // Rows are visited in ascending order, so each transposed row comes
        // out sorted.
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&c, &w) in cols.iter().zip(vals) {
                let dst = next[c];
                indices[dst] = i;
                values[dst] = w;
                next[c] += 1;
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            indptr,
            indices,
            values,
        }
    }

    /// Writes one `row col weight` line per stored entry.
    pub fn write_triplets(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (i, j, w) in self.triplets() {
            writeln!(out, "{i} {j} {w:e}").map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }
}

/// Sparse times dense. Each output row accumulates in ascending column
/// order of the sparse row.
pub fn spmm(s: &SparseMatrix, d: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = DenseMatrix::zeros(s.rows(), d.cols());
    spmm_into(s, d, &mut out)?;
    Ok(out)
}

/// [`spmm`] writing into a caller-owned buffer, which is overwritten.
pub fn spmm_into(s: &SparseMatrix, d: &DenseMatrix, out: &mut DenseMatrix) -> Result<()> {
    if s.cols() != d.rows() || out.shape() != (s.rows(), d.cols()) {
        return Err(Error::dim(
            "spmm",
            format!(
                "sparse {}x{} times dense {}x{} into {}x{}",
                s.rows(),
                s.cols(),
                d.rows(),
                d.cols(),
                out.rows(),
                out.cols()
            ),
        ));
    }
    let width = d.cols();
    if width == 0 {
        return Ok(());
    }
    out.as_mut_slice()
        .par_chunks_mut(width)
        .enumerate()
        .for_each(|(i, dst)| {
            dst.fill(0.0);
            let (cols, vals) = s.row(i);
            for (&c, &w) in cols.iter().zip(vals) {
                for (o, x) in dst.iter_mut().zip(d.row(c)) {
                    *o += w * x;
                }
            }
        });
    Ok(())
}

/// Sparse times sparse, row by row. With `max_row_nnz` set, each output row
/// keeps only its largest entries (ties resolved toward the smaller column).
pub fn spgemm(
    a: &SparseMatrix,
    b: &SparseMatrix,
    max_row_nnz: Option<usize>,
) -> Result<SparseMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::dim(
            "spgemm",
            format!(
                "{}x{} times {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            ),
        ));
    }
    let ncols = b.cols();
    let per_row: Vec<Vec<(usize, f64)>> = (0..a.rows())
        .into_par_iter()
        .map_init(
            || (vec![0.0f64; ncols], vec![false; ncols]),
            |(acc, seen), i| {
                let mut touched = Vec::new();
                let (acols, avals) = a.row(i);
                for (&k, &wa) in acols.iter().zip(avals) {
                    let (bcols, bvals) = b.row(k);
                    for (&j, &wb) in bcols.iter().zip(bvals) {
                        if !seen[j] {
                            seen[j] = true;
                            touched.push(j);
                        }
                        acc[j] += wa * wb;
                    }
                }
                let mut row: Vec<(usize, f64)> = touched
                    .iter()
                    .map(|&j| {
                        let w = acc[j];
                        acc[j] = 0.0;
                        seen[j] = false;
                        (j, w)
                    })
                    .filter(|&(_, w)| w != 0.0)
                    .collect();
                if let Some(cap) = max_row_nnz {
                    if row.len() > cap {
                        row.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
                        row.truncate(cap);
                    }
                }
                row.sort_by_key(|&(j, _)| j);
                row
            },
        )
        .collect();
    Ok(SparseMatrix::from_row_lists(a.rows(), ncols, per_row))
}

/// Element-wise `sqrt(a_ij * b_ij)` on the intersection of both supports.
pub fn hadamard_sqrt(a: &SparseMatrix, b: &SparseMatrix) -> Result<SparseMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::dim(
            "hadamard_sqrt",
            format!("{:?} vs {:?}", a.shape(), b.shape()),
        ));
    }
    if let Some(w) = a.values().iter().chain(b.values()).find(|&&w| w < 0.0) {
        return Err(Error::Domain(format!(
            "hadamard_sqrt needs nonnegative weights, found {w}"
        )));
    }
    let per_row = (0..a.rows())
        .map(|i| {
            let (ac, av) = a.row(i);
            let (bc, bv) = b.row(i);
            let mut out = Vec::new();
            let (mut p, mut q) = (0, 0);
            while p < ac.len() && q < bc.len() {
                match ac[p].cmp(&bc[q]) {
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                    std::cmp::Ordering::Equal => {
                        out.push((ac[p], (av[p] * bv[q]).sqrt()));
                        p += 1;
                        q += 1;
                    }
                }
            }
            out
        })
        .collect();
    Ok(SparseMatrix::from_row_lists(a.rows(), a.cols(), per_row))
}

/// Divides each row by its sum. Empty rows stay empty (inverse degree 0).
/// Weights are expected to be nonnegative.
pub fn row_normalize(s: &SparseMatrix) -> SparseMatrix {
    debug_assert!(s.values().iter().all(|&w| w >= 0.0));
    let mut out = s.clone();
    for i in 0..out.rows {
        let (lo, hi) = (out.indptr[i], out.indptr[i + 1]);
        let sum: f64 = out.values[lo..hi].iter().sum();
        if sum > 0.0 {
            out.values[lo..hi].iter_mut().for_each(|w| *w /= sum);
        }
    }
    out
}

/// GCN normalization `D^{-1/2} (A + I) D^{-1/2}`, with the identity term
/// controlled by `add_self_loops`. Rows with zero degree get inverse degree 0.
pub fn sym_normalize(a: &SparseMatrix, add_self_loops: bool) -> Result<SparseMatrix> {
    if !a.is_square() {
        return Err(Error::dim(
            "sym_normalize",
            format!("non-square {}x{}", a.rows(), a.cols()),
        ));
    }
    let n = a.rows();
    let with_loops = if add_self_loops {
        SparseMatrix::from_triplets(n, n, a.triplets().chain((0..n).map(|i| (i, i, 1.0))))?
    } else {
        a.clone()
    };
    let degree = with_loops.row_sums();
    let mut out = with_loops;
    for i in 0..n {
        let (lo, hi) = (out.indptr[i], out.indptr[i + 1]);
        for k in lo..hi {
            let j = out.indices[k];
            let denom = (degree[i] * degree[j]).sqrt();
            out.values[k] = if denom > 0.0 { out.values[k] / denom } else { 0.0 };
        }
    }
    Ok(out.filter(|_, _, w| w != 0.0))
}
