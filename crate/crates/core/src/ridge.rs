//! Ridge regression two ways: the penalized normal equations, and ordinary
//! least squares on a design stacked with √λ·I pseudo-rows at zero response.
//!
//! The intercept, if present as a column of `x`, is penalized like any other
//! coefficient. Center the data first if it should not be.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeProblem {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub lambda: f64,
}

impl RidgeProblem {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, lambda: f64) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension {
                expected: x.nrows(),
                got: y.len(),
                context: "ridge response length",
            });
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("ridge penalty must be >= 0, got {lambda}")));
        }
        Ok(Self { x, y, lambda })
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// The stacked design [X; √λ·I] and response [y; 0].
    pub fn augmented(&self) -> (DMatrix<f64>, DVector<f64>) {
        let (n, p) = self.x.shape();
        let mut xa = DMatrix::zeros(n + p, p);
        xa.view_mut((0, 0), (n, p)).copy_from(&self.x);
        let root = self.lambda.sqrt();
        for j in 0..p {
            xa[(n + j, j)] = root;
        }
        let mut ya = DVector::zeros(n + p);
        ya.rows_mut(0, n).copy_from(&self.y);
        (xa, ya)
    }

    /// XᵀX + λI.
    pub fn penalized_gram(&self) -> DMatrix<f64> {
        let mut g = self.x.transpose() * &self.x;
        for j in 0..self.dim() {
            g[(j, j)] += self.lambda;
        }
        g
    }
}

/// Solves (XᵀX + λI)β = Xᵀy by Cholesky.
pub fn ridge_closed_form(prob: &RidgeProblem) -> Result<DVector<f64>> {
    let rhs = prob.x.transpose() * &prob.y;
    let chol = prob.penalized_gram().cholesky().ok_or(Error::Cholesky)?;
    Ok(chol.solve(&rhs))
}

/// OLS on the stacked design, via Householder QR of [X; √λ·I].
pub fn ridge_augmented(prob: &RidgeProblem) -> Result<DVector<f64>> {
    if !(prob.lambda > 0.0) {
        return Err(Error::Domain("augmented ridge needs lambda > 0".into()));
    }
    let (xa, ya) = prob.augmented();
    ols(xa, &ya)
}

/// Least squares by QR; requires full column rank.
pub fn ols(x: DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let p = x.ncols();
    let qr = x.qr();
    let qty = qr.q().transpose() * y;
    let r = qr.r();
    if (0..p).any(|i| r[(i, i)] == 0.0) {
        return Err(Error::RankDeficient {
            rank: (0..p).filter(|&i| r[(i, i)] != 0.0).count(),
            p,
            directions: Vec::new(),
        });
    }
    r.solve_upper_triangular(&qty.rows(0, p).into_owned())
        .ok_or(Error::Cholesky)
}

/// ‖a − b‖∞ / ‖b‖∞.
pub fn max_relative_deviation(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    (a - b).amax() / scale
}

/// Result of comparing both ridge routes on one random instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RidgeComparison {
    pub instance: usize,
    pub n: usize,
    pub p: usize,
    pub lambda: f64,
    pub max_relative_deviation: f64,
    /// ‖(X̄ᵀX̄) − (XᵀX + λI)‖∞ entrywise.
    pub gram_deviation: f64,
}

/// A random instance with `n ∈ [5, 50]`, `p ∈ [1, min(10, n)]`, standard
/// normal design and response.
pub fn random_problem<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> RidgeProblem {
    let n = rng.random_range(5..=50);
    let p = rng.random_range(1..=10.min(n));
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    RidgeProblem::new(x, y, lambda).expect("well formed")
}

/// Solves `instances` random problems per penalty both ways. Instance `i`
/// draws from stream `i` under `seed`, so every penalty sees the same designs.
pub fn equivalence_demo(seed: u64, instances: usize, lambdas: &[f64]) -> Result<Vec<RidgeComparison>> {
    let mut out = Vec::with_capacity(instances * lambdas.len());
    for &lambda in lambdas {
        for i in 0..instances {
            let prob = random_problem(&mut stream(seed, i as u64), lambda);
            let closed = ridge_closed_form(&prob)?;
            let aug = ridge_augmented(&prob)?;
            let (xa, _) = prob.augmented();
            let gram = xa.transpose() * &xa;
            out.push(RidgeComparison {
                instance: i,
                n: prob.x.nrows(),
                p: prob.dim(),
                lambda,
                max_relative_deviation: max_relative_deviation(&aug, &closed),
                gram_deviation: (gram - prob.penalized_gram()).amax(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_example() {
        let prob = RidgeProblem::new(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 2.0]), 1.0).unwrap();
        let closed = ridge_closed_form(&prob).unwrap();
        let aug = ridge_augmented(&prob).unwrap();
        assert!((closed[0] - 0.5).abs() < 1e-15 && (closed[1] - 1.0).abs() < 1e-15);
        assert!((aug[0] - 0.5).abs() < 1e-14 && (aug[1] - 1.0).abs() < 1e-14);
        assert_eq!(prob.augmented().0.nrows(), 4);
    }

    #[test]
    fn zero_penalty_is_ols() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.2, 6.9]);
        let prob = RidgeProblem::new(x.clone(), y.clone(), 0.0).unwrap();
        let closed = ridge_closed_form(&prob).unwrap();
        let direct = ols(x, &y).unwrap();
        assert!(max_relative_deviation(&closed, &direct) < 1e-12);
        assert!(ridge_augmented(&prob).is_err());
    }

    #[test]
    fn huge_penalty_shrinks_to_zero() {
        let x = DMatrix::from_row_slice(3, 2, &[0.5, -0.2, 0.1, 0.9, -0.7, 0.3]);
        let y = DVector::from_vec(vec![0.4, -0.3, 0.8]);
        let prob = RidgeProblem::new(x, y, 1e8).unwrap();
        assert!(ridge_closed_form(&prob).unwrap().norm() < 1e-5);
        assert!(ridge_augmented(&prob).unwrap().norm() < 1e-5);
    }

    #[test]
    fn invalid_problems() {
        assert!(RidgeProblem::new(DMatrix::identity(2, 2), DVector::zeros(3), 1.0).is_err());
        assert!(RidgeProblem::new(DMatrix::identity(2, 2), DVector::zeros(2), -1.0).is_err());
    }
}
