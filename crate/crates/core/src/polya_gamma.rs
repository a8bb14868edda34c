//! Exact sampling from the Pólya-Gamma distribution PG(b, z).
//!
//! PG(1, z) is drawn with Devroye's alternating-series accept/reject method on
//! the two-piece proposal (truncated inverse Gaussian below the truncation
//! point, truncated exponential above it). Integer shapes are convolutions of
//! PG(1, z) draws. Non-integer shapes add a fractional part drawn from a
//! truncated gamma-sum representation whose tail is replaced by its mean, so
//! those draws are approximate.

use std::f64::consts::{FRAC_2_PI, PI};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Truncation point between the inverse-Gaussian and exponential pieces.
const TRUNC: f64 = 0.64;
const TRUNC_RECIP: f64 = 1.0 / TRUNC;

/// Terms kept in the gamma-sum representation for fractional shapes.
pub const GAMMA_SERIES_TERMS: usize = 200;

/// Parameters of a PG(b, z) law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgParams {
    /// Shape (trial weight).
    pub b: f64,
    /// Tilt (the linear predictor).
    pub z: f64,
}

impl PgParams {
    pub fn new(b: f64, z: f64) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::Domain(format!("PG shape must be positive, got {b}")));
        }
        if !z.is_finite() {
            return Err(Error::Domain(format!("PG tilt must be finite, got {z}")));
        }
        Ok(Self { b, z })
    }

    pub fn mean(&self) -> f64 {
        pg_mean(self.b, self.z)
    }

    /// Whether [`sample_pg`] is exact for this shape.
    pub fn is_exact(&self) -> bool {
        is_exact_shape(self.b)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        sample_pg(self.b, self.z, rng)
    }
}

pub fn is_exact_shape(b: f64) -> bool {
    b.fract() == 0.0
}

/// E[PG(b, z)] = b/(2z) · tanh(z/2), with the limit b/4 at z = 0.
pub fn pg_mean(b: f64, z: f64) -> f64 {
    let z = z.abs();
    if z < 1e-8 {
        b / 4.0 - b * z * z / 48.0
    } else {
        b / (2.0 * z) * (0.5 * z).tanh()
    }
}

/// One exact draw from PG(1, z).
pub fn sample_pg1<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    // PG(1, z) = J*(1, z/2) / 4
    0.25 * sample_jstar(0.5 * z.abs(), rng)
}

/// One draw from PG(b, z) for b ≥ 1.
///
/// Exact for integer `b`; for non-integer `b` see the module docs.
pub fn sample_pg<R: Rng + ?Sized>(b: f64, z: f64, rng: &mut R) -> Result<f64> {
    if !(b >= 1.0) || !b.is_finite() {
        return Err(Error::Domain(format!("PG shape must be >= 1, got {b}")));
    }
    let whole = b.floor();
    let mut total = 0.0;
    for _ in 0..whole as u64 {
        total += sample_pg1(z, rng);
    }
    let frac = b - whole;
    if frac > 0.0 {
        total += sample_pg_gamma_series(frac, z, rng);
    }
    Ok(total)
}

/// Truncated gamma-sum draw for 0 < b < 1, with the dropped tail replaced by
/// its expectation so the mean is matched exactly.
fn sample_pg_gamma_series<R: Rng + ?Sized>(b: f64, z: f64, rng: &mut R) -> f64 {
    let gamma = Gamma::new(b, 1.0).expect("shape is positive");
    let c2 = (z / (2.0 * PI)).powi(2);
    let scale = 1.0 / (2.0 * PI * PI);
    let mut draw = 0.0;
    let mut head_mean = 0.0;
    for k in 1..=GAMMA_SERIES_TERMS {
        let h = k as f64 - 0.5;
        let den = h * h + c2;
        draw += gamma.sample(rng) / den;
        head_mean += b / den;
    }
    let tail = (pg_mean(b, z) - scale * head_mean).max(0.0);
    scale * draw + tail
}

/// Devroye's sampler for J*(1, z), z ≥ 0.
fn sample_jstar<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let p_exp = mass_texpon(z);
    loop {
        let x = if rng.random::<f64>() < p_exp {
            let e: f64 = Exp1.sample(rng);
            TRUNC + e / fz
        } else {
            sample_tigauss(z, rng)
        };

        let mut s = series_coef(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0u32;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coef(n, x);
                if y <= s {
                    return x;
                }
            } else {
                s += series_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}

/// n-th coefficient of the alternating series for the J*(1) density.
fn series_coef(n: u32, x: f64) -> f64 {
    let h = n as f64 + 0.5;
    let k = h * PI;
    if x > TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else if x > 0.0 {
        (-1.5 * ((0.5 * PI).ln() + x.ln()) + k.ln() - 2.0 * h * h / x).exp()
    } else {
        0.0
    }
}

/// Probability of proposing from the exponential piece.
fn mass_texpon(z: f64) -> f64 {
    let t = TRUNC;
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let b = (1.0 / t).sqrt() * (t * z - 1.0);
    let a = -(1.0 / t).sqrt() * (t * z + 1.0);
    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + log_norm_cdf(b);
    let xa = x0 + z + log_norm_cdf(a);
    let q_over_p = 2.0 * FRAC_2_PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_over_p)
}

/// Inverse Gaussian IG(1/z, 1) truncated to (0, TRUNC).
fn sample_tigauss<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let t = TRUNC;
    if z < TRUNC_RECIP {
        // mean beyond the truncation point: proposal from the z = 0 limit
        loop {
            let x = loop {
                let e1: f64 = Exp1.sample(rng);
                let e2: f64 = Exp1.sample(rng);
                if e1 * e1 <= 2.0 * e2 / t {
                    let q = 1.0 + e1 * t;
                    break t / (q * q);
                }
            };
            let alpha = (-0.5 * z * z * x).exp();
            if rng.random::<f64>() <= alpha {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let n: f64 = StandardNormal.sample(rng);
            let mu_y = mu * n * n;
            let half_mu = 0.5 * mu;
            let mut x = mu + half_mu * mu_y - half_mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x <= t {
                return x;
            }
        }
    }
}

/// log Φ(x), accurate far into the lower tail.
fn log_norm_cdf(x: f64) -> f64 {
    if x > -20.0 {
        (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
    } else {
        // asymptotic expansion of the Mills ratio
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// Mean of PG(b, z) by differentiating the log Laplace transform
    /// s ↦ log E[exp(-ω s)] = -b·log cosh(√(s/2)) of PG(b, 0), at s = z²/2,
    /// using the closed form (e^ψ)^{b/2} / (1+e^ψ)^b · 2^b for the transform.
    fn fd_mean(b: f64, z: f64) -> f64 {
        let log_transform = |s: f64| {
            let psi = (2.0 * s).sqrt();
            0.5 * b * psi - b * psi.exp().ln_1p() + b * 2f64.ln()
        };
        let s = 0.5 * z * z;
        let h = 1e-5;
        if s < 2.0 * h {
            let (f0, f1, f2) = (log_transform(s), log_transform(s + h), log_transform(s + 2.0 * h));
            -(-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
        } else {
            -(log_transform(s + h) - log_transform(s - h)) / (2.0 * h)
        }
    }

    fn mc(b: f64, z: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = stream(seed, 0);
        let draws: Vec<f64> = (0..n).map(|_| sample_pg(b, z, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn mean_formula_matches_finite_difference_oracle() {
        for &b in &[1.0, 2.0, 10.0, 1.7] {
            for &z in &[0.0, 0.5, 2.0, 5.0, -3.0] {
                let oracle = fd_mean(b, z);
                assert!(
                    (pg_mean(b, z) - oracle).abs() < 1e-5 * oracle.max(1.0),
                    "b={b} z={z}: {} vs {oracle}",
                    pg_mean(b, z)
                );
            }
        }
    }

    #[test]
    fn mean_frozen_values() {
        assert_eq!(pg_mean(1.0, 0.0), 0.25);
        // 10·tanh(1)/4
        assert!((pg_mean(10.0, 2.0) - 1.903_985_389_889_412_3).abs() < 1e-12);
        assert_eq!(pg_mean(2.0, -2.0), pg_mean(2.0, 2.0));
        // series guard is continuous with the closed form
        assert!((pg_mean(3.0, 1e-8) - pg_mean(3.0, 1.0001e-8)).abs() < 1e-15);
    }

    #[test]
    fn pg1_mean_at_zero_and_two() {
        let n = 1_000_000;
        let mut rng = stream(11, 0);
        let draws: Vec<f64> = (0..n).map(|_| sample_pg1(0.0, &mut rng)).collect();
        let (m, se) = mean_se(&draws);
        assert!((m - 0.25).abs() < 4.0 * se, "{m} ± {se}");

        let draws: Vec<f64> = (0..n).map(|_| sample_pg1(2.0, &mut rng)).collect();
        let (m, se) = mean_se(&draws);
        let expected = 1f64.tanh() / 4.0;
        assert!((m - expected).abs() < 4.0 * se, "{m} ± {se} vs {expected}");
    }

    #[test]
    fn integer_shape_means() {
        let (m, se) = mc(10.0, 0.0, 200_000, 5);
        assert!((m - 2.5).abs() < 4.0 * se);
        let (m, se) = mc(10.0, 2.0, 200_000, 6);
        assert!((m - 10.0 * 1f64.tanh() / 4.0).abs() < 4.0 * se);
    }

    #[test]
    fn fractional_shape_mean_is_matched() {
        for &(b, z) in &[(1.5, 0.0), (2.3, 1.0), (1.01, 4.0)] {
            let (m, se) = mc(b, z, 100_000, 9);
            assert!((m - pg_mean(b, z)).abs() < 4.0 * se, "b={b} z={z}: {m} ± {se}");
        }
        assert!(!is_exact_shape(1.5));
        assert!(is_exact_shape(10.0));
    }

    #[test]
    fn unit_shape_dispatch_is_bitwise_identical() {
        let mut a = stream(3, 1);
        let mut b = stream(3, 1);
        for z in [-4.0, 0.0, 0.3, 7.5] {
            assert_eq!(sample_pg(1.0, z, &mut a).unwrap().to_bits(), sample_pg1(z, &mut b).to_bits());
        }
    }

    #[test]
    fn rejects_small_shape() {
        let mut rng = stream(0, 0);
        assert!(matches!(sample_pg(0.5, 0.0, &mut rng), Err(Error::Domain(_))));
        assert!(sample_pg(f64::NAN, 0.0, &mut rng).is_err());
        assert!(PgParams::new(0.0, 1.0).is_err());
        assert!(PgParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn extreme_tilt_stays_finite_and_positive() {
        let mut rng = stream(1, 0);
        for &z in &[50.0, 300.0, 700.0, -700.0] {
            for _ in 0..1000 {
                let w = sample_pg1(z, &mut rng);
                assert!(w.is_finite() && w > 0.0, "z={z}: {w}");
            }
            let (m, se) = {
                let d: Vec<f64> = (0..20_000).map(|_| sample_pg1(z, &mut rng)).collect();
                mean_se(&d)
            };
            assert!((m - pg_mean(1.0, z)).abs() < 4.0 * se + 1e-12, "z={z}: {m} ± {se}");
        }
    }

    #[test]
    fn log_norm_cdf_branches_agree() {
        let lo = log_norm_cdf(-20.0 + 1e-9);
        let hi = log_norm_cdf(-20.0 - 1e-9);
        assert!((lo - hi).abs() < 1e-6);
        assert!((log_norm_cdf(0.0) - 0.5f64.ln()).abs() < 1e-14);
    }

    fn mean_se(d: &[f64]) -> (f64, f64) {
        let n = d.len() as f64;
        let m = d.iter().sum::<f64>() / n;
        let v = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }
}
