//! Numerical checks of the identities the encoder relies on, run on small
//! seeded random instances with dense reference arithmetic.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::InteractionDataset;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::homo::{affinity_from_transitions, build_transitions};
use crate::mgdn::{distance_residual, mgdn_closed_form, mgdn_forward, mgdn_inverse, DiffusionConfig};
use crate::sparse::{sym_normalize, SparseMatrix};

/// Largest vertex count the dense oracles accept.
pub const ORACLE_LIMIT: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    ClosedForm,
    DisOptimality,
    Specializations,
    InverseRoundtrip,
    Sparsification,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] = [
        CheckKind::ClosedForm,
        CheckKind::DisOptimality,
        CheckKind::Specializations,
        CheckKind::InverseRoundtrip,
        CheckKind::Sparsification,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::ClosedForm => "closed_form",
            CheckKind::DisOptimality => "dis_optimality",
            CheckKind::Specializations => "specializations",
            CheckKind::InverseRoundtrip => "inverse_roundtrip",
            CheckKind::Sparsification => "sparsification",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!("unknown check {name:?}, expected one of {names:?}"))
            })
    }

    /// The identity being checked.
    pub fn identity(&self) -> &'static str {
        match self {
            CheckKind::ClosedForm => "H(K)/Γ -> (1-β)(I-βÂ)^{-1} X as K grows",
            CheckKind::DisOptimality => "Z - ÂZ + μ(Z - X) = 0 at Z = (1-β)(I-βÂ)^{-1} X, μ = 1/β - 1",
            CheckKind::Specializations => {
                "α=β=1 gives mean of Â^k X (Γ = K+1); β=1-α gives H(k) = (1-α)ÂH(k-1) + αX with Γ = 1"
            }
            CheckKind::InverseRoundtrip => "(I-βÂ) Z / (1-β) recovers X from the closed form",
            CheckKind::Sparsification => {
                "sqrt(T ⊙ T') equals p(v_i, v_j) / sqrt(p(v_i) p(v_j)) from two-step walk enumeration"
            }
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            CheckKind::ClosedForm => 1e-6,
            CheckKind::DisOptimality => 1e-8,
            CheckKind::Specializations => 1e-12,
            CheckKind::InverseRoundtrip => 1e-10,
            CheckKind::Sparsification => 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub identity: String,
    pub instances: usize,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{:<18} {}  deviation={:.3e}  tolerance={:.1e}  instances={}  [{}]",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.deviation,
                c.tolerance,
                c.instances,
                c.identity
            )?;
        }
        write!(f, "overall: {}", if self.passed { "PASS" } else { "FAIL" })
    }
}

/// Random symmetric graph on `n` vertices, GCN-normalized with self-loops.
pub fn random_affinity(n: usize, rng: &mut impl Rng) -> SparseMatrix {
    let p: f64 = rng.random_range(0.1..0.7);
    let mut t = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                t.push((i, j, 1.0));
                t.push((j, i, 1.0));
            }
        }
    }
    let a = SparseMatrix::from_triplets(n, n, t).expect("indices in range");
    sym_normalize(&a, true).expect("square input")
}

pub fn random_dense(rows: usize, cols: usize, rng: &mut impl Rng) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data).expect("sized buffer")
}

/// Random bipartite corpus with every edge in the train split.
pub fn random_bipartite(num_users: usize, num_items: usize, rng: &mut impl Rng) -> InteractionDataset {
    let p: f64 = rng.random_range(0.2..0.8);
    let edges: Vec<_> = (0..num_users)
        .flat_map(|u| (0..num_items).map(move |i| (u, i)))
        .filter(|_| rng.random::<f64>() < p)
        .collect();
    InteractionDataset::from_edges(num_users, num_items, edges, []).expect("edges in range")
}

fn check_size(n: usize) -> Result<()> {
    if n > ORACLE_LIMIT {
        return Err(Error::Config(format!(
            "dense oracles are limited to {ORACLE_LIMIT} vertices, got {n}"
        )));
    }
    Ok(())
}

/// Smallest `K` with `β^K ≤ 1e-9`.
pub fn depth_for(beta: f64) -> usize {
    (1e-9f64.ln() / beta.ln()).ceil() as usize
}

/// Max-abs gap between the deep recurrence and the dense closed form.
pub fn check_closed_form_convergence(seed: u64, n: usize, beta: f64) -> Result<f64> {
    check_size(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let affinity = random_affinity(n, &mut rng);
    let x = random_dense(n, 4, &mut rng);
    let alpha = rng.random_range(0.05..1.0);
    let cfg = DiffusionConfig::new(alpha, beta, depth_for(beta))?;
    let iterative = mgdn_forward(&x, &affinity, &cfg)?;
    let closed = mgdn_closed_form(&x, &affinity, &cfg)?;
    Ok(iterative.max_abs_diff(&closed))
}

/// Max-abs stationarity residual of the distance loss at the closed form.
pub fn check_dis_optimality(seed: u64, n: usize, beta: f64) -> Result<f64> {
    check_size(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let affinity = random_affinity(n, &mut rng);
    let x = random_dense(n, 4, &mut rng);
    let cfg = DiffusionConfig::new(1.0 - beta, beta, 1)?;
    let z = mgdn_closed_form(&x, &affinity, &cfg)?;
    Ok(distance_residual(&x, &z, &affinity, cfg.mu())?.max_abs())
}

/// Worst deviation over `K = 1..=8` of the two preset identities, checked
/// against dense powers of `Â`, plus `|Γ - 1|` for the APPNP presets.
pub fn check_specializations(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=12);
    let affinity = random_affinity(n, &mut rng);
    let dense = affinity.to_dense();
    let x = random_dense(n, 3, &mut rng);
    let mut worst = 0.0f64;
    for k in 1..=8usize {
        // mean of Â^j X, j = 0..=k
        let mut power = x.clone();
        let mut mean = x.clone();
        for _ in 0..k {
            power = dense.matmul(&power)?;
            mean.add_scaled(1.0, &power)?;
        }
        mean.scale(1.0 / (k + 1) as f64);
        let light = DiffusionConfig::lightgcn(k);
        worst = worst.max((light.gamma() - (k + 1) as f64).abs());
        worst = worst.max(mgdn_forward(&x, &affinity, &light)?.max_abs_diff(&mean));

        for alpha in [0.05, 0.1, 0.5] {
            let cfg = DiffusionConfig::appnp(alpha, k)?;
            worst = worst.max((cfg.gamma() - 1.0).abs());
            let mut h = x.clone();
            for _ in 0..k {
                let mut next = dense.matmul(&h)?;
                next.scale(1.0 - alpha);
                next.add_scaled(alpha, &x)?;
                h = next;
            }
            worst = worst.max(mgdn_forward(&x, &affinity, &cfg)?.max_abs_diff(&h));
        }
    }
    Ok(worst)
}

/// Max-abs error of inverting the closed form on a random 8-vertex graph.
pub fn check_inverse_roundtrip(seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let affinity = random_affinity(8, &mut rng);
    let x = random_dense(8, 4, &mut rng);
    let cfg = DiffusionConfig::appnp(rng.random_range(0.05..0.95), 4)?;
    let z = mgdn_closed_form(&x, &affinity, &cfg)?;
    Ok(mgdn_inverse(&z, &affinity, &cfg)?.max_abs_diff(&x))
}

/// GCN-normalized item-item weights from exhaustive two-step walk
/// enumeration under the degree-proportional item distribution.
pub fn brute_force_item_affinity(ds: &InteractionDataset) -> DenseMatrix {
    let (nu, ni) = (ds.num_users(), ds.num_items());
    let mut linked = vec![vec![false; ni]; nu];
    for &(u, i) in ds.train_edges() {
        linked[u][i] = true;
    }
    let user_deg: Vec<f64> = linked.iter().map(|r| r.iter().filter(|&&b| b).count() as f64).collect();
    let item_deg: Vec<f64> = (0..ni)
        .map(|i| linked.iter().filter(|r| r[i]).count() as f64)
        .collect();
    let total: f64 = item_deg.iter().sum();
    let mut out = DenseMatrix::zeros(ni, ni);
    if total == 0.0 {
        return out;
    }
    let marginal: Vec<f64> = item_deg.iter().map(|d| d / total).collect();
    for i in 0..ni {
        for j in 0..ni {
            // p(i, j) = p(i) Σ_u p(u | i) p(j | u)
            let mut joint = 0.0;
            for u in 0..nu {
                if linked[u][i] && linked[u][j] {
                    joint += marginal[i] * (1.0 / item_deg[i]) * (1.0 / user_deg[u]);
                }
            }
            if joint > 0.0 {
                out.set(i, j, joint / (marginal[i] * marginal[j]).sqrt());
            }
        }
    }
    out
}

/// Max-abs gap between the transition-based affinity and the brute force.
pub fn check_sparsification_oracle(ds: &InteractionDataset) -> Result<f64> {
    check_size(ds.num_users().max(ds.num_items()))?;
    let t = build_transitions(ds, None)?;
    let fast = affinity_from_transitions(&t.item_to_item)?.to_dense();
    Ok(fast.max_abs_diff(&brute_force_item_affinity(ds)))
}

const BETAS: [f64; 3] = [0.5, 0.8, 0.9];

/// Runs `kind` over `instances` seeded instances and returns the worst
/// deviation.
pub fn run_check(kind: CheckKind, seed: u64, instances: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..instances {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(k as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(s ^ 0xabcdef);
        let dev = match kind {
            CheckKind::ClosedForm => {
                check_closed_form_convergence(s, rng.random_range(2..=32), BETAS[k % BETAS.len()])?
            }
            CheckKind::DisOptimality => {
                check_dis_optimality(s, rng.random_range(2..=32), BETAS[k % BETAS.len()])?
            }
            CheckKind::Specializations => check_specializations(s)?,
            CheckKind::InverseRoundtrip => check_inverse_roundtrip(s)?,
            CheckKind::Sparsification => {
                let ds = random_bipartite(rng.random_range(1..=6), rng.random_range(1..=6), &mut rng);
                check_sparsification_oracle(&ds)?
            }
        };
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// Runs the selected checks (all when `only` is empty). `tolerance`
/// overrides every check's default threshold.
pub fn run_battery(seed: u64, instances: usize, only: &[CheckKind], tolerance: Option<f64>) -> Result<VerificationReport> {
    let kinds: Vec<CheckKind> = if only.is_empty() { CheckKind::ALL.to_vec() } else { only.to_vec() };
    let mut checks = Vec::new();
    for kind in kinds {
        let deviation = run_check(kind, seed, instances)?;
        let tol = tolerance.unwrap_or(kind.default_tolerance());
        checks.push(CheckResult {
            name: kind.name().to_string(),
            identity: kind.identity().to_string(),
            instances,
            deviation,
            tolerance: tol,
            passed: deviation <= tol,
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport { seed, checks, passed })
}
