//! Conditional-means priors: expert design points carrying Beta beliefs on the
//! response probability, and their conversion to pseudo-binomial rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{numeric_rank, rows_to_matrix};
use crate::model::softplus;

/// One expert design point with a Beta(a, b) belief on σ(x̃ᵀβ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub x_tilde: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl DesignPoint {
    pub fn new(x_tilde: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return Err(Error::Domain(format!(
                "Beta hyperparameters must be positive and finite, got a={a}, b={b}"
            )));
        }
        if x_tilde.is_empty() || x_tilde.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("design point covariates must be non-empty and finite".into()));
        }
        Ok(Self { x_tilde, a, b })
    }

    /// Effective prior sample size a + b.
    pub fn weight(&self) -> f64 {
        self.a + self.b
    }

    pub fn prior_mean(&self) -> f64 {
        self.a / self.weight()
    }
}

/// Builds a design point from a prior mean response and an effective sample size.
pub fn elicit_from_mean_and_weight(mean: f64, weight: f64, x_tilde: Vec<f64>) -> Result<DesignPoint> {
    if !(mean > 0.0 && mean < 1.0) {
        return Err(Error::Domain(format!("prior mean must lie in (0, 1), got {mean}")));
    }
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::Domain(format!("prior weight must be positive, got {weight}")));
    }
    DesignPoint::new(x_tilde, mean * weight, (1.0 - mean) * weight)
}

/// One entry of a prior specification file: covariates plus either Beta
/// hyperparameters or a (mean, weight) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum PriorEntry {
    Beta { covariates: Vec<f64>, a: f64, b: f64 },
    MeanWeight { covariates: Vec<f64>, mean: f64, weight: f64 },
}

impl PriorEntry {
    pub fn to_design_point(&self) -> Result<DesignPoint> {
        match self {
            PriorEntry::Beta { covariates, a, b } => DesignPoint::new(covariates.clone(), *a, *b),
            PriorEntry::MeanWeight { covariates, mean, weight } => {
                elicit_from_mean_and_weight(*mean, *weight, covariates.clone())
            }
        }
    }
}

/// A pseudo-binomial row: `successes` out of `trials` at covariates `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticObservation {
    pub x: Vec<f64>,
    pub trials: f64,
    pub successes: f64,
}

/// A conditional-means prior over a `p`-dimensional coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcjPrior {
    points: Vec<DesignPoint>,
    p: usize,
}

impl BcjPrior {
    pub fn new(points: Vec<DesignPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::Domain("a prior needs at least one design point".into()))?;
        let p = first.x_tilde.len();
        for pt in &points {
            if pt.x_tilde.len() != p {
                return Err(Error::Dimension {
                    expected: p,
                    got: pt.x_tilde.len(),
                    context: "design point covariates",
                });
            }
        }
        Ok(Self { points, p })
    }

    pub fn from_entries(entries: &[PriorEntry]) -> Result<Self> {
        let points = entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                e.to_design_point()
                    .map_err(|err| Error::Config(format!("prior entry {i}: {err}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn to_entries(&self) -> Vec<PriorEntry> {
        self.points
            .iter()
            .map(|pt| PriorEntry::Beta {
                covariates: pt.x_tilde.clone(),
                a: pt.a,
                b: pt.b,
            })
            .collect()
    }

    pub fn points(&self) -> &[DesignPoint] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn to_synthetic(&self) -> Vec<SyntheticObservation> {
        to_synthetic(self)
    }

    pub fn validate(&self) -> PriorReport {
        validate_prior(self)
    }

    /// log Π σ(x̃ⱼᵀβ)^{aⱼ} (1 − σ(x̃ⱼᵀβ))^{bⱼ}, the induced prior kernel on β.
    pub fn log_kernel(&self, beta: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|pt| {
                let eta: f64 = pt.x_tilde.iter().zip(beta).map(|(x, b)| x * b).sum();
                // log σ(η) = −softplus(−η), log(1 − σ(η)) = −softplus(η)
                -pt.a * softplus(-eta) - pt.b * softplus(eta)
            })
            .sum()
    }
}

/// One pseudo-binomial row per design point, in order: `trials = a + b`,
/// `successes = a`.
pub fn to_synthetic(prior: &BcjPrior) -> Vec<SyntheticObservation> {
    prior
        .points
        .iter()
        .map(|pt| SyntheticObservation {
            x: pt.x_tilde.clone(),
            trials: pt.weight(),
            successes: pt.a,
        })
        .collect()
}

/// Properness diagnostics for a prior on its own.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorReport {
    pub rank: usize,
    pub p: usize,
    pub n_points: usize,
    /// Rank p and every weight ≥ 1.
    pub proper: bool,
    /// More design points than coefficients.
    pub over_determined: bool,
    pub warnings: Vec<String>,
}

pub fn validate_prior(prior: &BcjPrior) -> PriorReport {
    let p = prior.p;
    let design = rows_to_matrix(prior.points.iter().map(|pt| pt.x_tilde.as_slice()), p);
    let rank = numeric_rank(&design);
    let light: Vec<usize> = prior
        .points
        .iter()
        .enumerate()
        .filter(|(_, pt)| pt.weight() < 1.0)
        .map(|(i, _)| i)
        .collect();

    let mut warnings = Vec::new();
    if rank < p {
        warnings.push(format!(
            "design points have rank {rank} < {p}: the prior alone is improper; \
             the posterior may still be proper once data are added"
        ));
    }
    if !light.is_empty() {
        warnings.push(format!("design points {light:?} have effective sample size below 1"));
    }
    PriorReport {
        rank,
        p,
        n_points: prior.points.len(),
        proper: rank == p && light.is_empty(),
        over_determined: prior.points.len() > p,
        warnings,
    }
}

/// Conjugate Beta–Binomial update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBinomialPosterior {
    pub a: f64,
    pub b: f64,
    pub mean: f64,
}

pub fn beta_binomial_posterior(a: f64, b: f64, successes: u64, n: u64) -> Result<BetaBinomialPosterior> {
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::Domain(format!("Beta hyperparameters must be positive, got a={a}, b={b}")));
    }
    if successes > n {
        return Err(Error::Domain(format!("successes {successes} exceed trials {n}")));
    }
    let a_post = a + successes as f64;
    let b_post = b + (n - successes) as f64;
    Ok(BetaBinomialPosterior {
        a: a_post,
        b: b_post,
        mean: a_post / (a_post + b_post),
    })
}
