//! Binary-response datasets, stacking of real and synthetic rows into the
//! sampler's augmented form, and log-posterior evaluation.

use crate::error::{Error, Result};
use crate::linalg::{null_directions, numeric_rank, rows_to_matrix};
use crate::prior::{BcjPrior, SyntheticObservation};

/// Bernoulli observations: an `n × p` design (row-major) and 0/1 responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Vec<f64>,
    y: Vec<u8>,
    p: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Vec<f64>>, y: Vec<u8>) -> Result<Self> {
        if rows.len() != y.len() {
            return Err(Error::Dimension {
                expected: rows.len(),
                got: y.len(),
                context: "response length",
            });
        }
        let p = rows.first().map_or(0, Vec::len);
        let mut x = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Dimension {
                    expected: p,
                    got: row.len(),
                    context: "design row",
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("row {i} has a non-finite covariate")));
            }
            x.extend_from_slice(row);
        }
        if let Some(bad) = y.iter().position(|&v| v > 1) {
            return Err(Error::Domain(format!("response at row {bad} is not 0/1")));
        }
        Ok(Self { x, y, p })
    }

    /// An empty dataset of dimension `p` (prior-only fits).
    pub fn empty(p: usize) -> Self {
        Self { x: Vec::new(), y: Vec::new(), p }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    /// Σ [yᵢ xᵢᵀβ − log(1 + exp(xᵢᵀβ))].
    pub fn log_likelihood(&self, beta: &[f64]) -> f64 {
        (0..self.len())
            .map(|i| {
                let eta = dot(self.row(i), beta);
                self.y[i] as f64 * eta - softplus(eta)
            })
            .sum()
    }
}

/// A row of the augmented dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentedRow<'a> {
    pub x: &'a [f64],
    /// Trial weight (PG shape).
    pub b: f64,
    /// successes − b/2.
    pub kappa: f64,
}

impl AugmentedRow<'_> {
    pub fn successes(&self) -> f64 {
        self.kappa + 0.5 * self.b
    }
}

/// Real rows (b = 1) followed by synthetic rows (b = n_j), with a design of
/// full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedDataset {
    x: Vec<f64>,
    b: Vec<f64>,
    kappa: Vec<f64>,
    p: usize,
    n_real: usize,
}

impl AugmentedDataset {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn n_real(&self) -> usize {
        self.n_real
    }

    pub fn n_synthetic(&self) -> usize {
        self.len() - self.n_real
    }

    pub fn row(&self, i: usize) -> AugmentedRow<'_> {
        AugmentedRow {
            x: self.x_row(i),
            b: self.b[i],
            kappa: self.kappa[i],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = AugmentedRow<'_>> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn x_row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn weights(&self) -> &[f64] {
        &self.b
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// Whether every trial weight is an integer, i.e. all PG draws are exact.
    pub fn exact_weights(&self) -> bool {
        self.b.iter().all(|b| b.fract() == 0.0)
    }
}

/// Stacks real Bernoulli rows and synthetic binomial rows.
///
/// Fails if the stacked design does not have full column rank.
pub fn augment(data: &Dataset, synthetic: &[SyntheticObservation]) -> Result<AugmentedDataset> {
    let p = if data.is_empty() && data.dim() == 0 {
        synthetic.first().map_or(0, |s| s.x.len())
    } else {
        data.dim()
    };
    if p == 0 {
        return Err(Error::Domain("augmented dataset has no coefficients".into()));
    }
    let n = data.len() + synthetic.len();
    let mut x = Vec::with_capacity(n * p);
    let mut b = Vec::with_capacity(n);
    let mut kappa = Vec::with_capacity(n);

    for i in 0..data.len() {
        x.extend_from_slice(data.row(i));
        b.push(1.0);
        kappa.push(data.y[i] as f64 - 0.5);
    }
    for (j, s) in synthetic.iter().enumerate() {
        if s.x.len() != p {
            return Err(Error::Dimension {
                expected: p,
                got: s.x.len(),
                context: "synthetic row covariates",
            });
        }
        if !(s.trials > 0.0) || !(0.0..=s.trials).contains(&s.successes) {
            return Err(Error::Domain(format!(
                "synthetic row {j}: need trials > 0 and 0 <= successes <= trials, got {}/{}",
                s.successes, s.trials
            )));
        }
        x.extend_from_slice(&s.x);
        b.push(s.trials);
        kappa.push(s.successes - 0.5 * s.trials);
    }

    let design = rows_to_matrix(x.chunks(p), p);
    let rank = numeric_rank(&design);
    if rank < p {
        return Err(Error::RankDeficient {
            rank,
            p,
            directions: null_directions(&design),
        });
    }
    Ok(AugmentedDataset {
        x,
        b,
        kappa,
        p,
        n_real: data.len(),
    })
}

/// Convenience: augment with the synthetic rows of `prior`, or none.
pub fn augment_with_prior(data: &Dataset, prior: Option<&BcjPrior>) -> Result<AugmentedDataset> {
    match prior {
        Some(prior) => augment(data, &prior.to_synthetic()),
        None => augment(data, &[]),
    }
}

/// Unnormalized log posterior Σ [s·xᵀβ − b·log(1 + exp(xᵀβ))].
pub fn log_posterior(beta: &[f64], aug: &AugmentedDataset) -> f64 {
    aug.rows()
        .map(|r| {
            let eta = dot(r.x, beta);
            r.successes() * eta - r.b * softplus(eta)
        })
        .sum()
}

/// Gradient Σ (s − b·σ(xᵀβ))·x of [`log_posterior`].
pub fn log_posterior_grad(beta: &[f64], aug: &AugmentedDataset) -> Vec<f64> {
    let mut g = vec![0.0; aug.dim()];
    for r in aug.rows() {
        let resid = r.successes() - r.b * sigmoid(dot(r.x, beta));
        for (gk, xk) in g.iter_mut().zip(r.x) {
            *gk += resid * xk;
        }
    }
    g
}

/// σ(xᵀβ).
pub fn predict_prob(beta: &[f64], x: &[f64]) -> f64 {
    sigmoid(dot(x, beta))
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// log(1 + eᵗ).
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::DesignPoint;

    fn dose_prior() -> BcjPrior {
        BcjPrior::new(vec![
            DesignPoint::new(vec![1.0, 0.0], 1.0, 9.0).unwrap(),
            DesignPoint::new(vec![1.0, 4.0], 3.0, 7.0).unwrap(),
        ])
        .unwrap()
    }

    fn two_rows() -> Dataset {
        Dataset::new(vec![vec![1.0, 0.5], vec![1.0, 2.5]], vec![1, 0]).unwrap()
    }

    #[test]
    fn augmentation_weights_and_offsets() {
        let aug = augment(&two_rows(), &dose_prior().to_synthetic()).unwrap();
        assert_eq!(aug.len(), 4);
        assert_eq!(aug.n_real(), 2);
        let r = aug.row(0);
        assert_eq!((r.b, r.kappa), (1.0, 0.5));
        assert_eq!(aug.row(1).kappa, -0.5);
        assert_eq!((aug.row(2).b, aug.row(2).kappa), (10.0, -4.0));
        assert_eq!((aug.row(3).b, aug.row(3).kappa), (10.0, -2.0));
        assert_eq!(aug.row(3).x, &[1.0, 4.0]);
        for r in aug.rows() {
            assert!((0.0..=r.b).contains(&r.successes()));
        }
    }

    #[test]
    fn flat_augmentation_keeps_real_rows_only() {
        let aug = augment(&two_rows(), &[]).unwrap();
        assert_eq!(aug.len(), 2);
        assert_eq!(aug.n_synthetic(), 0);
        assert!(aug.weights().iter().all(|&b| b == 1.0));
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let data = Dataset::new(vec![vec![1.0, 2.0], vec![1.0, 2.0]], vec![0, 1]).unwrap();
        match augment(&data, &[]) {
            Err(Error::RankDeficient { rank, p, directions }) => {
                assert_eq!((rank, p), (1, 2));
                assert_eq!(directions.len(), 1);
                // null direction is ∝ (2, −1)
                let d = &directions[0];
                assert!((2.0 * d[0] + 4.0 * d[1]).abs() < 1e-10 || (d[0] + 2.0 * d[1]).abs() < 1e-10);
            }
            other => panic!("expected rank error, got {other:?}"),
        }
        // the prior supplies the missing direction
        let aug = augment(&data, &dose_prior().to_synthetic());
        assert!(aug.is_ok());
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![vec![1.0]], vec![2]).is_err());
        assert!(Dataset::new(vec![vec![1.0], vec![1.0, 2.0]], vec![0, 1]).is_err());
        assert!(Dataset::new(vec![vec![f64::NAN]], vec![0]).is_err());
        assert!(Dataset::new(vec![vec![1.0]], vec![0, 1]).is_err());
    }

    #[test]
    fn log_posterior_at_zero() {
        let aug = augment(&two_rows(), &dose_prior().to_synthetic()).unwrap();
        let lp = log_posterior(&[0.0, 0.0], &aug);
        assert!((lp + 22.0 * 2f64.ln()).abs() < 1e-12);
        assert!((lp + 15.249_238_2).abs() < 1e-6);

        let flat = augment(&two_rows(), &[]).unwrap();
        assert!((log_posterior(&[0.0, 0.0], &flat) + 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn prediction() {
        assert_eq!(predict_prob(&[0.0, 0.0], &[1.0, 17.0]), 0.5);
        assert!((sigmoid(logit(0.1)) - 0.1).abs() < 1e-15);
        for d in [0.0, 0.5, 4.0, 100.0] {
            assert!((predict_prob(&[logit(0.1), 0.0], &[1.0, d]) - 0.1).abs() < 1e-12);
        }
        assert!((predict_prob(&[-2.1972, 0.0], &[1.0, 3.0]) - 0.10).abs() < 1e-4);
        let hi = sigmoid(700.0);
        let lo = sigmoid(-700.0);
        assert!(hi <= 1.0 && hi > 0.999 && lo > 0.0 && lo < 1e-300);
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(log_posterior(&[0.0, 50.0], &augment(&two_rows(), &[]).unwrap()).is_finite());
    }
}
