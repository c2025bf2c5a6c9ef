//! Markov graph diffusion.
//!
//! The encoder computes `Z = (Σ_k θ_k Â^k) X` through the recurrence
//!
//! ```text
//! H(0) = X
//! H(k) = β Â H(k-1) + α H(0)
//! Z    = H(K) / Γ,   Γ = β^K + Σ_{k<K} α β^k
//! ```
//!
//! which keeps only two `N x d` buffers alive. `α = β = 1` is LightGCN's mean
//! pooling over propagation depths; `β = 1 - α` is APPNP's personalized
//! PageRank with teleport `α`. As `K` grows the output tends to
//! `(1 - β)(I - βÂ)^{-1} X`, the minimizer of a graph-smoothness loss with a
//! pull toward the input embeddings of strength `μ = 1/β - 1`. The dense
//! closed form, its inverse and that loss live here for verification; they
//! are not used for training.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::sparse::{spmm_into, SparseMatrix};

/// Largest vertex count accepted by the dense closed-form operators.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    alpha: f64,
    beta: f64,
    k_layers: usize,
    gamma: f64,
}

impl DiffusionConfig {
    pub fn new(alpha: f64, beta: f64, k_layers: usize) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!("diffusion.alpha must be >= 0, got {alpha}")));
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::Config(format!("diffusion.beta must lie in (0, 1], got {beta}")));
        }
        let gamma = finite_gamma(alpha, beta, k_layers);
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!(
                "normalizer Γ = {gamma} for α = {alpha}, β = {beta}, K = {k_layers}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            k_layers,
            gamma,
        })
    }

    /// `α = β = 1`: mean of `Â^k X` over `k = 0..=K`, `Γ = K + 1`.
    pub fn lightgcn(k_layers: usize) -> Self {
        Self::new(1.0, 1.0, k_layers).expect("lightgcn preset is valid")
    }

    /// `β = 1 - α`, for which `Γ` is exactly 1.
    pub fn appnp(alpha: f64, k_layers: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config(format!(
                "appnp teleport probability must lie in (0, 1], got {alpha}"
            )));
        }
        let beta = 1.0 - alpha;
        if beta == 0.0 {
            // Pure teleport, H(k) = X for every k. The only place β = 0 is
            // admitted.
            return Ok(Self {
                alpha,
                beta: 0.0,
                k_layers,
                gamma: 1.0,
            });
        }
        let mut cfg = Self::new(alpha, beta, k_layers)?;
        cfg.gamma = 1.0;
        Ok(cfg)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k_layers(&self) -> usize {
        self.k_layers
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Strength of the pull toward the input embeddings, from `β = 1/(1+μ)`.
    pub fn mu(&self) -> f64 {
        1.0 / self.beta - 1.0
    }

    /// `θ_k = αβ^k / Γ` for `k < K` and `θ_K = β^K / Γ`.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.k_layers + 1);
        let mut power = 1.0;
        for _ in 0..self.k_layers {
            out.push(self.alpha * power / self.gamma);
            power *= self.beta;
        }
        out.push(power / self.gamma);
        out
    }

    fn require_contractive(&self, op: &str) -> Result<()> {
        if self.beta >= 1.0 {
            return Err(Error::Config(format!("{op} needs β < 1, got {}", self.beta)));
        }
        Ok(())
    }
}

fn finite_gamma(alpha: f64, beta: f64, k_layers: usize) -> f64 {
    let mut sum = 0.0;
    let mut power = 1.0;
    for _ in 0..k_layers {
        sum += alpha * power;
        power *= beta;
    }
    sum + power
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase")]
pub enum Preset {
    Lightgcn { k_layers: usize },
    Appnp { alpha: f64, k_layers: usize },
    Custom { alpha: f64, beta: f64, k_layers: usize },
}

impl Preset {
    /// Resolves a preset by name; `alpha`/`beta` are ignored where the
    /// preset fixes them.
    pub fn from_name(name: &str, alpha: f64, beta: f64, k_layers: usize) -> Result<Self> {
        match name {
            "lightgcn" => Ok(Preset::Lightgcn { k_layers }),
            "appnp" => Ok(Preset::Appnp { alpha, k_layers }),
            "custom" => Ok(Preset::Custom {
                alpha,
                beta,
                k_layers,
            }),
            other => Err(Error::Config(format!(
                "unknown diffusion preset {other:?} (expected lightgcn, appnp or custom)"
            ))),
        }
    }

    pub fn config(&self) -> Result<DiffusionConfig> {
        match *self {
            Preset::Lightgcn { k_layers } => Ok(DiffusionConfig::lightgcn(k_layers)),
            Preset::Appnp { alpha, k_layers } => DiffusionConfig::appnp(alpha, k_layers),
            Preset::Custom {
                alpha,
                beta,
                k_layers,
            } => DiffusionConfig::new(alpha, beta, k_layers),
        }
    }
}

/// Runs the Markov recurrence for `K` steps.
pub fn mgdn_forward(x: &DenseMatrix, affinity: &SparseMatrix, cfg: &DiffusionConfig) -> Result<DenseMatrix> {
    if !affinity.is_square() || affinity.rows() != x.rows() {
        return Err(Error::dim(
            "mgdn_forward",
            format!(
                "affinity {}x{} with {} embedding rows",
                affinity.rows(),
                affinity.cols(),
                x.rows()
            ),
        ));
    }
    let mut h = x.clone();
    let mut next = DenseMatrix::zeros(x.rows(), x.cols());
    for _ in 0..cfg.k_layers {
        spmm_into(affinity, &h, &mut next)?;
        for (n, x0) in next.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *n = cfg.beta * *n + cfg.alpha * x0;
        }
        std::mem::swap(&mut h, &mut next);
    }
    if cfg.gamma != 1.0 {
        h.scale(1.0 / cfg.gamma);
    }
    Ok(h)
}

/// Gradient of a loss on `Z` pulled back to `X`. The propagation operator is
/// a polynomial in a symmetric `Â`, hence self-adjoint, so the backward pass
/// is the forward pass applied to the upstream gradient.
pub fn backprop_diffusion(
    grad_z: &DenseMatrix,
    affinity: &SparseMatrix,
    cfg: &DiffusionConfig,
) -> Result<DenseMatrix> {
    if !affinity.is_symmetric(0.0) {
        return Err(Error::Config(
            "backpropagation through diffusion requires a symmetric affinity".into(),
        ));
    }
    mgdn_forward(grad_z, affinity, cfg)
}

fn to_nalgebra(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_nalgebra(m: &DMatrix<f64>) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.set(i, j, m[(i, j)]);
        }
    }
    out
}

/// `I - βÂ` as a dense matrix.
fn contraction(affinity: &SparseMatrix, beta: f64, x_rows: usize, op: &'static str) -> Result<DMatrix<f64>> {
    let n = affinity.rows();
    if !affinity.is_square() || n != x_rows {
        return Err(Error::dim(
            op,
            format!("affinity {}x{} with {x_rows} rows", n, affinity.cols()),
        ));
    }
    if n > DENSE_LIMIT {
        return Err(Error::Config(format!(
            "{op} is limited to {DENSE_LIMIT} vertices, got {n}"
        )));
    }
    let mut m = DMatrix::<f64>::identity(n, n);
    for (i, j, w) in affinity.triplets() {
        m[(i, j)] -= beta * w;
    }
    Ok(m)
}

/// Infinite-depth limit `(1 - β)(I - βÂ)^{-1} X`, by dense LU.
pub fn mgdn_closed_form(x: &DenseMatrix, affinity: &SparseMatrix, cfg: &DiffusionConfig) -> Result<DenseMatrix> {
    cfg.require_contractive("mgdn_closed_form")?;
    let system = contraction(affinity, cfg.beta, x.rows(), "mgdn_closed_form")?;
    let rhs = to_nalgebra(x);
    let solved = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("I - βÂ is singular".into()))?;
    if solved.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("closed-form solve produced non-finite values".into()));
    }
    let mut z = from_nalgebra(&solved);
    z.scale(1.0 - cfg.beta);
    Ok(z)
}

/// Inverse of [`mgdn_closed_form`]: `X = (I - βÂ) Z / (1 - β)`, which is
/// `(Γ∞/α)(I - βÂ) Z` with the infinite-depth normalizer `Γ∞ = α/(1 - β)`.
pub fn mgdn_inverse(z: &DenseMatrix, affinity: &SparseMatrix, cfg: &DiffusionConfig) -> Result<DenseMatrix> {
    if cfg.alpha == 0.0 {
        return Err(Error::Config("the diffusion inverse is undefined for α = 0".into()));
    }
    cfg.require_contractive("mgdn_inverse")?;
    let system = contraction(affinity, cfg.beta, z.rows(), "mgdn_inverse")?;
    let mut x = from_nalgebra(&(system * to_nalgebra(z)));
    x.scale(1.0 / (1.0 - cfg.beta));
    Ok(x)
}

/// Distance loss in its pairwise form:
///
/// `½ (Σ_ij Ã_ij ‖z_i/√d_i − z_j/√d_j‖² + μ Σ_i ‖z_i − x_i‖²)`
///
/// where `augmented` is the adjacency with self-loops and `d` its row sums.
pub fn distance_loss(x: &DenseMatrix, z: &DenseMatrix, augmented: &SparseMatrix, mu: f64) -> Result<f64> {
    if x.shape() != z.shape() || augmented.rows() != z.rows() || !augmented.is_square() {
        return Err(Error::dim(
            "distance_loss",
            format!(
                "x {:?}, z {:?}, graph {:?}",
                x.shape(),
                z.shape(),
                augmented.shape()
            ),
        ));
    }
    let inv_sqrt: Vec<f64> = augmented
        .row_sums()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut smooth = 0.0;
    for (i, j, w) in augmented.triplets() {
        let (zi, zj) = (z.row(i), z.row(j));
        let dist: f64 = zi
            .iter()
            .zip(zj)
            .map(|(a, b)| {
                let diff = a * inv_sqrt[i] - b * inv_sqrt[j];
                diff * diff
            })
            .sum();
        smooth += w * dist;
    }
    let fit: f64 = z
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(0.5 * (smooth + mu * fit))
}

/// Stationarity residual `Z − ÂZ + μ(Z − X)` of the distance loss, as used in
/// the closed-form derivation. It vanishes at `(1 − β)(I − βÂ)^{-1} X`.
pub fn distance_residual(
    x: &DenseMatrix,
    z: &DenseMatrix,
    affinity: &SparseMatrix,
    mu: f64,
) -> Result<DenseMatrix> {
    let az = crate::sparse::spmm(affinity, z)?;
    let mut out = z.clone();
    out.add_scaled(-1.0, &az)?;
    let mut pull = z.clone();
    pull.add_scaled(-1.0, x)?;
    out.add_scaled(mu, &pull)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::sym_normalize;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(n: usize, p: f64, rng: &mut ChaCha8Rng) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    t.push((i, j, 1.0));
                    t.push((j, i, 1.0));
                }
            }
        }
        sym_normalize(&SparseMatrix::from_triplets(n, n, t).unwrap(), true).unwrap()
    }

    fn random_dense(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
        DenseMatrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn coefficient_examples() {
        let l = DiffusionConfig::lightgcn(4);
        assert_eq!(l.gamma(), 5.0);
        assert_eq!(l.coefficients(), vec![0.2; 5]);

        let c = DiffusionConfig::new(0.1, 0.9, 2).unwrap();
        assert!((c.gamma() - 1.0).abs() < 1e-15);
        let theta = c.coefficients();
        for (a, b) in theta.iter().zip([0.1, 0.09, 0.81]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn presets() {
        let a = Preset::from_name("appnp", 0.1, 0.0, 4).unwrap().config().unwrap();
        assert_eq!(a.gamma(), 1.0);
        assert!((a.beta() - 0.9).abs() < 1e-15);
        let c = Preset::from_name("custom", 0.5, 0.5, 2).unwrap().config().unwrap();
        assert_eq!(c.gamma(), 1.0);
        let l = Preset::from_name("lightgcn", 0.0, 0.0, 4).unwrap().config().unwrap();
        assert_eq!((l.alpha(), l.beta(), l.gamma()), (1.0, 1.0, 5.0));
        assert!(Preset::from_name("sgc", 0.1, 0.9, 2).is_err());
    }

    #[test]
    fn invalid_configs() {
        assert!(DiffusionConfig::new(-0.1, 0.5, 2).is_err());
        assert!(DiffusionConfig::new(0.1, 0.0, 2).is_err());
        assert!(DiffusionConfig::new(0.1, 1.5, 2).is_err());
        assert!(DiffusionConfig::appnp(0.0, 2).is_err());
        // α = 0 is legal: Γ = β^K > 0
        assert!(DiffusionConfig::new(0.0, 0.5, 3).is_ok());
    }

    #[test]
    fn forward_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_dense(5, 3, &mut rng);
        let g = random_graph(5, 0.5, &mut rng);
        let k0 = DiffusionConfig::new(0.3, 0.7, 0).unwrap();
        assert_eq!(k0.gamma(), 1.0);
        assert_eq!(mgdn_forward(&x, &g, &k0).unwrap(), x);
        let cfg = DiffusionConfig::new(0.3, 0.7, 6).unwrap();
        let z = mgdn_forward(&x, &SparseMatrix::identity(5), &cfg).unwrap();
        assert!(z.max_abs_diff(&x) < 1e-14);
        assert!(mgdn_forward(&x, &SparseMatrix::identity(4), &cfg).is_err());
    }

    #[test]
    fn forward_matches_coefficient_polynomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_graph(7, 0.4, &mut rng);
        let x = random_dense(7, 2, &mut rng);
        let cfg = DiffusionConfig::new(0.2, 0.6, 5).unwrap();
        let dense = g.to_dense();
        let mut power = x.clone();
        let mut expected = DenseMatrix::zeros(7, 2);
        for theta in cfg.coefficients() {
            expected.add_scaled(theta, &power).unwrap();
            power = dense.matmul(&power).unwrap();
        }
        let z = mgdn_forward(&x, &g, &cfg).unwrap();
        assert!(z.max_abs_diff(&expected) < 1e-13);
    }

    #[test]
    fn closed_form_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_dense(4, 3, &mut rng);
        let cfg = DiffusionConfig::new(0.1, 0.9, 4).unwrap();
        let z = mgdn_closed_form(&x, &SparseMatrix::identity(4), &cfg).unwrap();
        assert!(z.max_abs_diff(&x) < 1e-12);
        let g = random_graph(4, 0.6, &mut rng);
        let zero = mgdn_closed_form(&DenseMatrix::zeros(4, 3), &g, &cfg).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        assert!(mgdn_closed_form(&x, &g, &DiffusionConfig::lightgcn(3)).is_err());
    }

    #[test]
    fn six_vertex_forward_against_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = random_graph(6, 0.5, &mut rng);
        let x = random_dense(6, 4, &mut rng);
        let cfg = DiffusionConfig::new(0.1, 0.9, 100).unwrap();
        let fwd = mgdn_forward(&x, &g, &cfg).unwrap();
        let closed = mgdn_closed_form(&x, &g, &cfg).unwrap();
        assert!(fwd.max_abs_diff(&closed) <= 1e-6);
    }

    #[test]
    fn ten_vertex_forward_against_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = random_graph(10, 0.4, &mut rng);
        let x = random_dense(10, 3, &mut rng);
        let cfg = DiffusionConfig::new(0.2, 0.8, 200).unwrap();
        let fwd = mgdn_forward(&x, &g, &cfg).unwrap();
        let closed = mgdn_closed_form(&x, &g, &cfg).unwrap();
        assert!(fwd.max_abs_diff(&closed) <= 1e-8);
    }

    #[test]
    fn inverse_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let appnp = DiffusionConfig::appnp(0.1, 4).unwrap();
        let z = random_dense(3, 2, &mut rng);
        let x = mgdn_inverse(&z, &SparseMatrix::identity(3), &appnp).unwrap();
        assert!(x.max_abs_diff(&z) < 1e-12);
        let g = random_graph(8, 0.4, &mut rng);
        let zero = mgdn_inverse(&DenseMatrix::zeros(8, 2), &g, &appnp).unwrap();
        assert_eq!(zero.max_abs(), 0.0);

        let x = random_dense(8, 3, &mut rng);
        let z = mgdn_closed_form(&x, &g, &appnp).unwrap();
        let back = mgdn_inverse(&z, &g, &appnp).unwrap();
        assert!(back.max_abs_diff(&x) <= 1e-10);

        let no_teleport = DiffusionConfig::new(0.0, 0.5, 2).unwrap();
        assert!(matches!(mgdn_inverse(&z, &g, &no_teleport), Err(Error::Config(_))));
    }

    #[test]
    fn distance_loss_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_dense(4, 3, &mut rng);
        let loops = SparseMatrix::identity(4);
        assert_eq!(distance_loss(&x, &x, &loops, 2.0).unwrap(), 0.0);
        let zero = DenseMatrix::zeros(4, 3);
        let path = SparseMatrix::from_triplets(
            4,
            4,
            [(0, 1, 1.0), (1, 0, 1.0), (0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0), (3, 3, 1.0)],
        )
        .unwrap();
        let v = distance_loss(&x, &zero, &path, 0.7).unwrap();
        assert!((v - 0.35 * x.squared_norm()).abs() < 1e-14);
    }

    #[test]
    fn residual_vanishes_at_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let g = random_graph(10, 0.3, &mut rng);
            let x = random_dense(10, 4, &mut rng);
            let cfg = DiffusionConfig::new(0.1, rng.random_range(0.2..0.95), 3).unwrap();
            let z = mgdn_closed_form(&x, &g, &cfg).unwrap();
            let r = distance_residual(&x, &z, &g, cfg.mu()).unwrap();
            assert!(r.max_abs() <= 1e-8, "{}", r.max_abs());
        }
    }

    #[test]
    fn backprop_rejects_asymmetric_graph() {
        let a = SparseMatrix::from_triplets(2, 2, [(0, 1, 1.0)]).unwrap();
        let cfg = DiffusionConfig::lightgcn(2);
        assert!(backprop_diffusion(&DenseMatrix::zeros(2, 1), &a, &cfg).is_err());
        let eye = SparseMatrix::identity(2);
        let g = DenseMatrix::from_rows(&[[1.0], [2.0]]);
        assert_eq!(backprop_diffusion(&g, &eye, &cfg).unwrap(), g);
    }
}
