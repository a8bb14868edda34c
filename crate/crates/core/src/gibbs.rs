//! Two-step conjugate Gibbs sampler for logistic regression on an augmented
//! (real + synthetic) dataset.
//!
//! Step 1 draws ωᵢ ~ PG(bᵢ, xᵢᵀβ) for every row. Step 2 draws
//! β ~ N(m, V) with V⁻¹ = XᵀΩX and m = V Xᵀκ, factoring the precision with a
//! Cholesky decomposition. Both steps are exact, so every iteration advances.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, AugmentedDataset};
use crate::polya_gamma::sample_pg;
use crate::rng::{stream, StreamRng};

/// Chain length, burn-in, thinning and seeding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default)]
    pub seed: u64,
    /// Stream index under `seed`; replicates use distinct streams.
    #[serde(default)]
    pub stream: u64,
    /// Starting point; zero when absent.
    #[serde(default)]
    pub initial_beta: Option<Vec<f64>>,
}

fn default_thin() -> usize {
    1
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 3_000,
            thin: 1,
            seed: 0,
            stream: 0,
            initial_beta: None,
        }
    }
}

impl ChainConfig {
    pub fn new(iterations: usize, burn_in: usize) -> Self {
        Self {
            iterations,
            burn_in,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn with_initial_beta(mut self, beta: Vec<f64>) -> Self {
        self.initial_beta = Some(beta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.burn_in > self.iterations {
            return Err(Error::Config(format!(
                "burn-in {} exceeds iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of retained draws, ⌊(iterations − burn_in) / thin⌋.
    pub fn kept(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }
}

/// Retained β draws, row-major `kept × p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    draws: Vec<f64>,
    p: usize,
    labels: Vec<String>,
    config: ChainConfig,
    iterations_run: usize,
    approximate_pg: bool,
}

impl PosteriorDraws {
    /// Wraps externally produced draws (e.g. read back from CSV).
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let p = labels.len();
        let mut draws = Vec::with_capacity(rows.len() * p);
        for row in &rows {
            if row.len() != p {
                return Err(Error::Dimension {
                    expected: p,
                    got: row.len(),
                    context: "draw row",
                });
            }
            draws.extend_from_slice(row);
        }
        let n = rows.len();
        Ok(Self {
            draws,
            p,
            labels,
            config: ChainConfig::new(n.max(1), 0),
            iterations_run: n,
            approximate_pg: false,
        })
    }

    pub fn len(&self) -> usize {
        self.draws.len().checked_div(self.p).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn draw(&self, i: usize) -> &[f64] {
        &self.draws[i * self.p..(i + 1) * self.p]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.draws.chunks_exact(self.p.max(1))
    }

    /// All draws of coefficient `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.iter().map(|d| d[k]).collect()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.p {
            return Err(Error::Dimension {
                expected: self.p,
                got: labels.len(),
                context: "coefficient labels",
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    /// Gibbs iterations performed, including burn-in and thinned-out ones.
    pub fn iterations_run(&self) -> usize {
        self.iterations_run
    }

    /// True when some PG draws used the approximate fractional-shape path.
    pub fn approximate_pg(&self) -> bool {
        self.approximate_pg
    }

    /// Writes the draws as CSV with a header of coefficient labels.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.labels.join(","))?;
        for d in self.iter() {
            let line: Vec<String> = d.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Step 1: ωᵢ ~ PG(bᵢ, xᵢᵀβ) independently for every augmented row.
pub fn step_omega<R: Rng + ?Sized>(aug: &AugmentedDataset, beta: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    check_len(beta.len(), aug.dim(), "beta")?;
    aug.rows().map(|r| sample_pg(r.b, dot(r.x, beta), rng)).collect()
}

/// Precision contributions of the real rows and of the synthetic rows.
pub fn precision_blocks(aug: &AugmentedDataset, omega: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let p = aug.dim();
    let mut real = DMatrix::zeros(p, p);
    let mut synthetic = DMatrix::zeros(p, p);
    for (i, &w) in omega.iter().enumerate() {
        let x = aug.x_row(i);
        let target = if i < aug.n_real() { &mut real } else { &mut synthetic };
        for r in 0..p {
            let wx = w * x[r];
            for c in 0..=r {
                target[(r, c)] += wx * x[c];
            }
        }
    }
    for m in [&mut real, &mut synthetic] {
        m.fill_upper_triangle_with_lower_triangle();
    }
    (real, synthetic)
}

/// XᵀΩX, formed as the real block plus the synthetic block.
pub fn precision(aug: &AugmentedDataset, omega: &[f64]) -> DMatrix<f64> {
    let (real, synthetic) = precision_blocks(aug, omega);
    real + synthetic
}

/// Conditional mean m = (XᵀΩX)⁻¹ Xᵀκ and the Cholesky factor of XᵀΩX.
pub fn conditional_gaussian(aug: &AugmentedDataset, omega: &[f64]) -> Result<(DVector<f64>, Cholesky<f64, nalgebra::Dyn>)> {
    check_len(omega.len(), aug.len(), "omega")?;
    if omega.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::Domain("PG latent variables must be positive".into()));
    }
    let p = aug.dim();
    let mut rhs = DVector::zeros(p);
    for r in aug.rows() {
        for (k, xk) in r.x.iter().enumerate() {
            rhs[k] += r.kappa * xk;
        }
    }
    let chol = precision(aug, omega).cholesky().ok_or(Error::Cholesky)?;
    let mean = chol.solve(&rhs);
    Ok((mean, chol))
}

/// Step 2: β ~ N(m, (XᵀΩX)⁻¹), drawn as m + L⁻ᵀ z with LLᵀ = XᵀΩX.
pub fn step_beta<R: Rng + ?Sized>(aug: &AugmentedDataset, omega: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let (mean, chol) = conditional_gaussian(aug, omega)?;
    let p = aug.dim();
    let z = DVector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let offset = chol
        .l()
        .transpose()
        .solve_upper_triangular(&z)
        .ok_or(Error::Cholesky)?;
    Ok((mean + offset).iter().copied().collect())
}

/// Runs the sampler from `config.initial_beta` (zero by default).
pub fn run_chain(aug: &AugmentedDataset, config: &ChainConfig) -> Result<PosteriorDraws> {
    config.validate()?;
    let p = aug.dim();
    let mut beta = match &config.initial_beta {
        Some(b) => {
            check_len(b.len(), p, "initial beta")?;
            b.clone()
        }
        None => vec![0.0; p],
    };
    let mut rng: StreamRng = stream(config.seed, config.stream);
    let kept = config.kept();
    let mut draws = Vec::with_capacity(kept * p);
    let mut iterations_run = 0;
    for t in 1..=config.iterations {
        let omega = step_omega(aug, &beta, &mut rng)?;
        beta = step_beta(aug, &omega, &mut rng)?;
        iterations_run += 1;
        if t > config.burn_in && (t - config.burn_in).is_multiple_of(config.thin) {
            if beta.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("non-finite draw at iteration {t}")));
            }
            draws.extend_from_slice(&beta);
        }
    }
    debug_assert_eq!(draws.len(), kept * p);
    Ok(PosteriorDraws {
        draws,
        p,
        labels: default_labels(p),
        config: config.clone(),
        iterations_run,
        approximate_pg: !aug.exact_weights(),
    })
}

pub fn default_labels(p: usize) -> Vec<String> {
    (0..p).map(|k| format!("beta{k}")).collect()
}

fn check_len(got: usize, expected: usize, context: &'static str) -> Result<()> {
    if got != expected {
        return Err(Error::Dimension { expected, got, context });
    }
    Ok(())
}
