use aoi_core::distributions::ServiceDistribution;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

fn variants() -> Vec<ServiceDistribution> {
    vec![
        ServiceDistribution::deterministic(3.0).unwrap(),
        ServiceDistribution::exponential(2.0).unwrap(),
        ServiceDistribution::gamma(2.5, 0.7).unwrap(),
        ServiceDistribution::hyper_exponential(vec![0.3, 0.7], vec![0.5, 4.0]).unwrap(),
        ServiceDistribution::neg_binomial(100, 0.8).unwrap(),
        ServiceDistribution::neg_binomial(4, 0.15).unwrap(),
        ServiceDistribution::scaled_neg_binomial(25, 5, 0.5).unwrap(),
    ]
}

/// Sample mean and variance of 10^6 draws against the closed forms, with
/// standard errors estimated from the sample's own central moments.
#[test]
fn sample_moments_match_closed_forms() {
    const N: usize = 1_000_000;
    for (i, d) in variants().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + i as u64);
        let xs: Vec<f64> = (0..N).map(|_| d.sample(&mut rng)).collect();
        let n = N as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let var = m2 * n / (n - 1.0);

        let se_mean = (m2 / n).sqrt();
        let se_var = ((m4 - m2 * m2) / n).sqrt();
        if d.variance() == 0.0 {
            assert_eq!(mean, d.mean());
            assert_eq!(var, 0.0);
            continue;
        }
        assert!((mean - d.mean()).abs() <= 3.0 * se_mean, "{d:?}: mean {mean} vs {}", d.mean());
        assert!((var - d.variance()).abs() <= 3.0 * se_var, "{d:?}: var {var} vs {}", d.variance());
    }
}

#[test]
fn negative_binomial_mean_within_half_percent() {
    let d = ServiceDistribution::neg_binomial(100, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mean = (0..1_000_000).map(|_| d.sample(&mut rng)).sum::<f64>() / 1e6;
    assert!((mean - 125.0).abs() / 125.0 < 0.005);
}

#[test]
fn laplace_matches_monte_carlo() {
    let d = ServiceDistribution::exponential(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let vals: Vec<f64> = (0..n).map(|_| (-d.sample(&mut rng)).exp()).collect();
    let (mean, se) = aoi_core::stats::mean_and_stderr(&vals);
    assert!((mean - 0.5).abs() < 3.0 * se);
}

#[test]
fn hyperexponential_two_branch_scv_exceeds_one() {
    for (w, a, b) in [(0.5, 1.0, 10.0), (0.1, 3.0, 3.5), (0.9, 0.01, 100.0)] {
        let d = ServiceDistribution::hyper_exponential(vec![w, 1.0 - w], vec![a, b]).unwrap();
        assert!(d.scv() > 1.0, "{d:?}");
    }
}

fn central_difference(d: &ServiceDistribution, lam: f64) -> f64 {
    let h = 1e-5 * lam;
    (d.laplace(lam + h) - d.laplace(lam - h)) / (2.0 * h)
}

fn any_law() -> impl Strategy<Value = ServiceDistribution> {
    prop_oneof![
        (0.01f64..20.0).prop_map(|d| ServiceDistribution::deterministic(d).unwrap()),
        (0.05f64..20.0).prop_map(|m| ServiceDistribution::exponential(m).unwrap()),
        (0.2f64..10.0, 0.05f64..5.0).prop_map(|(a, s)| ServiceDistribution::gamma(a, s).unwrap()),
        (0.01f64..0.99, 0.05f64..10.0, 0.05f64..10.0)
            .prop_map(|(w, a, b)| ServiceDistribution::hyper_exponential(vec![w, 1.0 - w], vec![a, b]).unwrap()),
        (1u32..200, 0.05f64..1.0).prop_map(|(k, q)| ServiceDistribution::neg_binomial(k, q).unwrap()),
        (1u32..40, 1u32..20, 0.05f64..1.0)
            .prop_map(|(n, k, q)| ServiceDistribution::scaled_neg_binomial(n, k, q).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn laplace_derivative_matches_finite_difference(d in any_law(), x in 0.0f64..1.0) {
        // Keep λE(S) moderate so the transform is not vanishingly small.
        let lam = (0.02 + 2.0 * x) / d.mean();
        let analytic = d.laplace_deriv(lam);
        let fd = central_difference(&d, lam);
        prop_assert!(analytic < 0.0);
        prop_assert!((analytic - fd).abs() <= 1e-6 * fd.abs(), "{:?} λ={} analytic={} fd={}", d, lam, analytic, fd);
    }

    #[test]
    fn laplace_is_one_at_zero_and_decreasing(d in any_law(), a in 0.0f64..3.0, b in 0.0f64..3.0) {
        prop_assert_eq!(d.laplace(0.0), 1.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let (lo, hi) = (lo / d.mean(), hi / d.mean());
        prop_assert!(d.laplace(hi) < d.laplace(lo));
        prop_assert!(d.laplace(hi) > 0.0 && d.laplace(lo) <= 1.0);
    }

    #[test]
    fn negative_binomial_moments(k in 1u32..1000, q in 0.01f64..=1.0, n in 1u32..50) {
        let nb = ServiceDistribution::neg_binomial(k, q).unwrap();
        let k = f64::from(k);
        prop_assert!((nb.mean() - k / q).abs() <= 1e-12 * nb.mean());
        prop_assert!((nb.variance() - k * (1.0 - q) / (q * q)).abs() <= 1e-12 * nb.variance().max(1.0));
        let snb = ServiceDistribution::scaled_neg_binomial(n, k as u32, q).unwrap();
        let n = f64::from(n);
        prop_assert!((snb.mean() - n * k / q).abs() <= 1e-12 * snb.mean());
        prop_assert!((snb.variance() - n * n * k * (1.0 - q) / (q * q)).abs() <= 1e-12 * snb.variance().max(1.0));
    }
}
