//! Chain diagnostics and posterior summaries.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gibbs::PosteriorDraws;
use crate::model::predict_prob;

/// Largest ESS reported, as a multiple of the series length.
pub const ESS_CLAMP: f64 = 1.05;
/// Geweke window fractions (early, late).
pub const GEWEKE_FIRST: f64 = 0.1;
pub const GEWEKE_LAST: f64 = 0.5;
pub const GEWEKE_BATCHES: usize = 20;
/// Slopes below this magnitude make −β₀/β₁ meaningless.
pub const ED50_SLOPE_EPS: f64 = 1e-8;
/// Largest tolerated fraction of near-zero slopes.
pub const ED50_MAX_FLAT_FRACTION: f64 = 0.01;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Effective sample size N / (1 + 2Σρ̂ₖ), truncating the autocorrelation sum
/// with Geyer's initial monotone positive sequence.
pub fn ess(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 10 {
        return Err(Error::TooShort { needed: 10, got: n });
    }
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|v| v - m).collect();
    let autocov = |k: usize| -> f64 {
        centered[..n - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let gamma0 = autocov(0);
    if !(gamma0 > 0.0) || gamma0 < 1e-300 {
        return Err(Error::UndefinedEss("series is constant".into()));
    }

    // Γₘ = ρ₂ₘ + ρ₂ₘ₊₁, summed while positive and forced non-increasing
    let mut tau = -1.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        tau += 2.0 * pair;
        prev_pair = pair;
        lag += 2;
    }
    let cap = ESS_CLAMP * n as f64;
    if tau <= 0.0 {
        return Ok(cap);
    }
    Ok((n as f64 / tau).min(cap))
}

/// Mean and squared standard error of a window, via batch means.
fn batch_mean_stats(window: &[f64]) -> (f64, f64) {
    let batch = (window.len() / GEWEKE_BATCHES).max(1);
    let k = window.len() / batch;
    let means: Vec<f64> = window
        .chunks_exact(batch)
        .take(k)
        .map(mean)
        .collect();
    let se2 = if k > 1 { sample_var(&means) / k as f64 } else { 0.0 };
    (mean(window), se2)
}

/// Geweke z-score comparing the first 10% with the last 50% of the chain.
pub fn geweke_z(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 100 {
        return Err(Error::TooShort { needed: 100, got: n });
    }
    let n_a = (GEWEKE_FIRST * n as f64).floor() as usize;
    let n_b = (GEWEKE_LAST * n as f64).floor() as usize;
    let (mean_a, se2_a) = batch_mean_stats(&series[..n_a]);
    let (mean_b, se2_b) = batch_mean_stats(&series[n - n_b..]);
    let diff = mean_a - mean_b;
    let denom = (se2_a + se2_b).sqrt();
    if denom > 0.0 {
        Ok(diff / denom)
    } else if diff == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Domain("Geweke windows are constant but differ".into()))
    }
}

/// Linear interpolation between order statistics at rank (n − 1)·q.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed credible interval at `level`.
pub fn credible_interval(series: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("credible level must lie in (0, 1), got {level}")));
    }
    if series.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: series.len() });
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    Ok((quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail)))
}

/// σ(xᵀβ) for every draw.
pub fn probability_draws(draws: &PosteriorDraws, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != draws.dim() {
        return Err(Error::Dimension {
            expected: draws.dim(),
            got: x.len(),
            context: "query covariates",
        });
    }
    Ok(draws.iter().map(|b| predict_prob(b, x)).collect())
}

/// Fraction of draws with σ(x_doseᵀβ) − σ(x_refᵀβ) > delta.
pub fn decision_prob(draws: &PosteriorDraws, x_dose: &[f64], x_ref: &[f64], delta: f64) -> Result<f64> {
    let dose = probability_draws(draws, x_dose)?;
    let reference = probability_draws(draws, x_ref)?;
    if dose.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    let hits = dose.iter().zip(&reference).filter(|(d, r)| *d - *r > delta).count();
    Ok(hits as f64 / dose.len() as f64)
}

/// Posterior summary of ED50 = −β₀/β₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ed50Summary {
    pub median: f64,
    pub lo: f64,
    pub hi: f64,
    /// Reported for completeness; the ratio may have no finite moments.
    pub mean: f64,
    pub draws_used: usize,
    pub draws_dropped: usize,
}

pub fn ed50_posterior(draws: &PosteriorDraws, level: f64) -> Result<Ed50Summary> {
    if draws.dim() != 2 {
        return Err(Error::Dimension {
            expected: 2,
            got: draws.dim(),
            context: "ED50 needs (intercept, slope)",
        });
    }
    if draws.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: draws.len() });
    }
    let ratios: Vec<f64> = draws
        .iter()
        .filter(|b| b[1].abs() >= ED50_SLOPE_EPS)
        .map(|b| -b[0] / b[1])
        .collect();
    let dropped = draws.len() - ratios.len();
    let fraction = dropped as f64 / draws.len() as f64;
    if fraction >= ED50_MAX_FLAT_FRACTION {
        return Err(Error::UnstableEd50 { fraction });
    }
    let (lo, hi) = credible_interval(&ratios, level)?;
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(Ed50Summary {
        median: quantile_sorted(&sorted, 0.5),
        lo,
        hi,
        mean: mean(&ratios),
        draws_used: ratios.len(),
        draws_dropped: dropped,
    })
}

/// Potential scale reduction across chains of equal length (optional check).
pub fn rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::TooShort { needed: 2, got: m });
    }
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let w = chains.iter().map(|c| sample_var(&c[..n])).sum::<f64>() / m as f64;
    let b = n as f64 * sample_var(&means);
    let var_plus = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    Ok((var_plus / w).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSummary {
    pub label: String,
    pub mean: f64,
    pub sd: f64,
    pub ess: Option<f64>,
    pub geweke_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilitySummary {
    pub x: Vec<f64>,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub draws: usize,
    pub level: f64,
    pub coefficients: Vec<CoefficientSummary>,
    pub queries: Vec<ProbabilitySummary>,
}

pub fn summarize_probability(draws: &PosteriorDraws, x: &[f64], level: f64) -> Result<ProbabilitySummary> {
    let probs = probability_draws(draws, x)?;
    let (lo, hi) = credible_interval(&probs, level)?;
    Ok(ProbabilitySummary {
        x: x.to_vec(),
        mean: mean(&probs),
        lo,
        hi,
        width: hi - lo,
    })
}

/// Per-coefficient moments and diagnostics plus probability summaries at
/// each query point. ESS and Geweke are `None` where the chain is too short
/// or constant.
pub fn summarize(draws: &PosteriorDraws, queries: &[Vec<f64>], level: f64) -> Result<ChainSummary> {
    if draws.len() < 2 {
        return Err(Error::TooShort { needed: 2, got: draws.len() });
    }
    let coefficients = (0..draws.dim())
        .map(|k| {
            let col = draws.column(k);
            CoefficientSummary {
                label: draws.labels()[k].clone(),
                mean: mean(&col),
                sd: sample_var(&col).sqrt(),
                ess: ess(&col).ok(),
                geweke_z: geweke_z(&col).ok(),
            }
        })
        .collect();
    let queries = queries
        .iter()
        .map(|x| summarize_probability(draws, x, level))
        .collect::<Result<_>>()?;
    Ok(ChainSummary {
        draws: draws.len(),
        level,
        coefficients,
        queries,
    })
}
