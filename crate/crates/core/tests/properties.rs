use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

use synprior::diagnostics::{credible_interval, decision_prob, ess, geweke_z};
use synprior::gibbs::{conditional_gaussian, precision, precision_blocks, step_beta};
use synprior::linalg::numeric_rank;
use synprior::model::{augment_with_prior, log_posterior, log_posterior_grad};
use synprior::polya_gamma::{sample_pg, sample_pg1};
use synprior::prior::{elicit_from_mean_and_weight, PriorEntry};
use synprior::ridge::{ridge_closed_form, RidgeProblem};
use synprior::rng::stream;
use synprior::{run_chain, BcjPrior, ChainConfig, Dataset, DesignPoint, PosteriorDraws};

fn normal_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Random data set with an intercept column and `p - 1` standard normal covariates.
fn random_dataset(seed: u64, n: usize, p: usize) -> Dataset {
    let mut rng = stream(seed, 0);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| std::iter::once(1.0).chain(normal_vec(&mut rng, p - 1, 1.0)).collect())
        .collect();
    let y = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
    Dataset::new(rows, y).unwrap()
}

fn random_prior(seed: u64, p: usize) -> BcjPrior {
    let mut rng = stream(seed, 1);
    let points = (0..p)
        .map(|_| {
            let x: Vec<f64> = std::iter::once(1.0).chain(normal_vec(&mut rng, p - 1, 1.0)).collect();
            DesignPoint::new(x, rng.random_range(0.5..8.0), rng.random_range(0.5..8.0)).unwrap()
        })
        .collect();
    BcjPrior::new(points).unwrap()
}

fn draws_from(seed: u64, n: usize) -> PosteriorDraws {
    let mut rng = stream(seed, 7);
    let rows = (0..n).map(|_| vec![-1.5 + 0.3 * rng.sample::<f64, _>(StandardNormal), 0.4 + 0.2 * rng.sample::<f64, _>(StandardNormal)]).collect();
    PosteriorDraws::from_rows(rows, vec!["b0".into(), "b1".into()]).unwrap()
}

fn ar1(seed: u64, n: usize, phi: f64) -> Vec<f64> {
    let mut rng = stream(seed, 3);
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x = phi * x + rng.sample::<f64, _>(StandardNormal);
            x
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prior_entries_round_trip(seed in any::<u64>(), p in 1usize..5) {
        let prior = random_prior(seed, p);
        let back = BcjPrior::from_entries(&prior.to_entries()).unwrap();
        prop_assert_eq!(back, prior);
    }

    #[test]
    fn elicitation_preserves_pseudo_counts(mean in 0.01f64..0.99, weight in 0.5f64..500.0) {
        let pt = elicit_from_mean_and_weight(mean, weight, vec![1.0, 2.0]).unwrap();
        prop_assert!((pt.a + pt.b - weight).abs() <= 1e-12 * weight);
        prop_assert!((pt.prior_mean() - mean).abs() < 1e-12);
        let entry = PriorEntry::MeanWeight { covariates: vec![1.0, 2.0], mean, weight };
        let via_entry = entry.to_design_point().unwrap();
        prop_assert!((via_entry.a - pt.a).abs() < 1e-12 && (via_entry.b - pt.b).abs() < 1e-12);
    }

    #[test]
    fn synthetic_rows_carry_pseudo_counts(seed in any::<u64>(), p in 1usize..5) {
        let prior = random_prior(seed, p);
        for (pt, s) in prior.points().iter().zip(prior.to_synthetic()) {
            prop_assert_eq!(&s.x, &pt.x_tilde);
            prop_assert_eq!(s.trials, pt.a + pt.b);
            prop_assert_eq!(s.successes, pt.a);
        }
    }

    #[test]
    fn rank_agrees_with_svd(seed in any::<u64>(), r in 0usize..=5) {
        let mut rng = stream(seed, 0);
        let left = DMatrix::from_vec(5, r, normal_vec(&mut rng, 5 * r, 1.0));
        let right = DMatrix::from_vec(r, 5, normal_vec(&mut rng, 5 * r, 1.0));
        let m = left * right;
        let sv = m.clone().svd(false, false).singular_values;
        let top = sv.max();
        let svd_rank = sv.iter().filter(|&&s| s > 1e-10 * top).count();
        prop_assert_eq!(numeric_rank(&m), r);
        prop_assert_eq!(svd_rank, r);
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), p in 1usize..5, with_prior: bool) {
        let data = random_dataset(seed, 30, p);
        let prior = with_prior.then(|| random_prior(seed, p));
        let aug = augment_with_prior(&data, prior.as_ref()).unwrap();
        let beta = normal_vec(&mut stream(seed, 2), p, 0.7);
        let grad = log_posterior_grad(&beta, &aug);
        for k in 0..p {
            let h = 1e-5 * beta[k].abs().max(1.0);
            let (mut up, mut down) = (beta.clone(), beta.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (log_posterior(&up, &aug) - log_posterior(&down, &aug)) / (2.0 * h);
            let scale = grad[k].abs().max(1.0);
            prop_assert!((fd - grad[k]).abs() / scale < 1e-6, "k={} fd={} analytic={}", k, fd, grad[k]);
        }
    }

    #[test]
    fn flat_prior_is_the_likelihood(seed in any::<u64>(), p in 1usize..5) {
        let data = random_dataset(seed, 25, p);
        let aug = augment_with_prior(&data, None).unwrap();
        let beta = normal_vec(&mut stream(seed, 2), p, 1.0);
        prop_assert_eq!(aug.n_synthetic(), 0);
        let (a, b) = (log_posterior(&beta, &aug), data.log_likelihood(&beta));
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn prior_adds_its_kernel(seed in any::<u64>(), p in 1usize..5) {
        let data = random_dataset(seed, 25, p);
        let prior = random_prior(seed, p);
        let aug = augment_with_prior(&data, Some(&prior)).unwrap();
        let beta = normal_vec(&mut stream(seed, 2), p, 1.0);
        let total = log_posterior(&beta, &aug);
        let parts = data.log_likelihood(&beta) + prior.log_kernel(&beta);
        prop_assert!((total - parts).abs() <= 1e-10 * total.abs().max(1.0));
    }

    #[test]
    fn precision_splits_into_real_and_synthetic(seed in any::<u64>(), p in 1usize..5) {
        let data = random_dataset(seed, 20, p);
        let prior = random_prior(seed, p);
        let aug = augment_with_prior(&data, Some(&prior)).unwrap();
        let mut rng = stream(seed, 4);
        let omega: Vec<f64> = (0..aug.len()).map(|_| rng.random_range(0.01..3.0)).collect();
        let x = DMatrix::from_fn(aug.len(), p, |i, j| aug.x_row(i)[j]);
        let full = x.transpose() * DMatrix::from_diagonal(&DVector::from_vec(omega.clone())) * &x;
        let (real, synthetic) = precision_blocks(&aug, &omega);
        let combined = precision(&aug, &omega);
        for i in 0..p {
            for j in 0..p {
                let tol = 1e-12 * full[(i, j)].abs().max(1.0);
                prop_assert!((combined[(i, j)] - full[(i, j)]).abs() < tol);
                prop_assert!((real[(i, j)] + synthetic[(i, j)] - full[(i, j)]).abs() < tol);
                prop_assert_eq!(combined[(i, j)], combined[(j, i)]);
            }
        }
    }

    #[test]
    fn pg_draws_ignore_the_sign_of_z(seed in any::<u64>(), z in 0.0f64..20.0) {
        let a = sample_pg1(z, &mut stream(seed, 0));
        let b = sample_pg1(-z, &mut stream(seed, 0));
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn integer_pg_is_a_sum_of_unit_draws(seed in any::<u64>(), b in 1u32..12, z in -10.0f64..10.0) {
        let whole = sample_pg(f64::from(b), z, &mut stream(seed, 0)).unwrap();
        let mut rng = stream(seed, 0);
        let parts: f64 = (0..b).map(|_| sample_pg1(z, &mut rng)).sum();
        prop_assert_eq!(whole.to_bits(), parts.to_bits());
        prop_assert!(whole > 0.0);
    }

    #[test]
    fn decisions_fall_as_delta_rises(seed in any::<u64>(), d1 in -0.5f64..0.5, step in 0.0f64..0.5) {
        let draws = draws_from(seed, 400);
        let lo = decision_prob(&draws, &[1.0, 4.0], &[1.0, 0.0], d1).unwrap();
        let hi = decision_prob(&draws, &[1.0, 4.0], &[1.0, 0.0], d1 + step).unwrap();
        prop_assert!(hi <= lo);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn wider_levels_give_wider_intervals(seed in any::<u64>(), l1 in 0.05f64..0.9, step in 0.0f64..0.09) {
        let series = normal_vec(&mut stream(seed, 5), 300, 2.0);
        let (a, b) = credible_interval(&series, l1).unwrap();
        let (c, d) = credible_interval(&series, l1 + step).unwrap();
        prop_assert!(c <= a && b <= d);
    }

    #[test]
    fn ess_is_affine_invariant(seed in any::<u64>(), scale in 0.01f64..100.0, shift in -1e3f64..1e3, phi in 0.0f64..0.9) {
        let x = ar1(seed, 2000, phi);
        let y: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
        let (ex, ey) = (ess(&x).unwrap(), ess(&y).unwrap());
        prop_assert!((ex - ey).abs() <= 1e-6 * ex, "{} vs {}", ex, ey);
    }

    #[test]
    fn geweke_tracks_affine_maps(seed in any::<u64>(), scale in 0.01f64..100.0, shift in -1e3f64..1e3, flip: bool) {
        let x = ar1(seed, 2000, 0.5);
        let s = if flip { -scale } else { scale };
        let y: Vec<f64> = x.iter().map(|v| s * v + shift).collect();
        let (zx, zy) = (geweke_z(&x).unwrap(), geweke_z(&y).unwrap());
        prop_assert!((zy - s.signum() * zx).abs() < 1e-6 * zx.abs().max(1.0));
    }

    #[test]
    fn ridge_shrinks_monotonically(seed in any::<u64>(), l1 in 0.0f64..50.0, factor in 1.0f64..20.0) {
        let mut rng = stream(seed, 0);
        let x = DMatrix::from_vec(20, 4, normal_vec(&mut rng, 80, 1.0));
        let y = DVector::from_vec(normal_vec(&mut rng, 20, 1.0));
        let small = ridge_closed_form(&RidgeProblem::new(x.clone(), y.clone(), l1).unwrap()).unwrap();
        let large = ridge_closed_form(&RidgeProblem::new(x, y, l1 * factor + 1e-3).unwrap()).unwrap();
        prop_assert!(large.norm() <= small.norm() * (1.0 + 1e-12));
    }
}

#[test]
fn beta_step_matches_its_gaussian() {
    let data = random_dataset(11, 15, 2);
    let prior = random_prior(11, 2);
    let aug = augment_with_prior(&data, Some(&prior)).unwrap();
    let omega: Vec<f64> = (0..aug.len()).map(|i| 0.1 + 0.05 * i as f64).collect();
    let (mean, chol) = conditional_gaussian(&aug, &omega).unwrap();
    let cov = chol.inverse();

    let n = 40_000;
    let mut rng = stream(5, 0);
    let draws: Vec<Vec<f64>> = (0..n).map(|_| step_beta(&aug, &omega, &mut rng).unwrap()).collect();
    let m: Vec<f64> = (0..2).map(|k| draws.iter().map(|d| d[k]).sum::<f64>() / n as f64).collect();
    for k in 0..2 {
        let se = (cov[(k, k)] / n as f64).sqrt();
        assert!((m[k] - mean[k]).abs() < 4.0 * se, "coordinate {k}: {} vs {}", m[k], mean[k]);
    }
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let c = draws.iter().map(|d| (d[i] - m[i]) * (d[j] - m[j])).sum::<f64>() / (n - 1) as f64;
        let scale = (cov[(i, i)] * cov[(j, j)]).sqrt();
        assert!((c - cov[(i, j)]).abs() < 0.03 * scale, "cov ({i},{j}): {c} vs {}", cov[(i, j)]);
    }
}

#[test]
fn chains_forget_their_start() {
    let data = random_dataset(3, 80, 2);
    let prior = random_prior(3, 2);
    let aug = augment_with_prior(&data, Some(&prior)).unwrap();
    let means = |start: Vec<f64>, stream_idx: u64| {
        let cfg = ChainConfig::new(6000, 1000).with_seed(9).with_stream(stream_idx).with_initial_beta(start);
        let d = run_chain(&aug, &cfg).unwrap();
        (0..2)
            .map(|k| {
                let c = d.column(k);
                let m = c.iter().sum::<f64>() / c.len() as f64;
                let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / c.len() as f64).sqrt();
                (m, sd)
            })
            .collect::<Vec<_>>()
    };
    let a = means(vec![0.0, 0.0], 0);
    let b = means(vec![8.0, -8.0], 1);
    for k in 0..2 {
        assert!((a[k].0 - b[k].0).abs() < 0.15 * a[k].1, "{a:?} vs {b:?}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let data = random_dataset(21, 40, 3);
    let prior = random_prior(21, 3);
    let aug = augment_with_prior(&data, Some(&prior)).unwrap();
    let csv = |seed: u64| {
        let mut buf = Vec::new();
        run_chain(&aug, &ChainConfig::new(800, 200).with_seed(seed)).unwrap().write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(csv(42), csv(42));
    assert_ne!(csv(42), csv(43));
}
