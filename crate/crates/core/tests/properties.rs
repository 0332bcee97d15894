use jcl::acquisition::{compute_tolerance, joint_log_probability};
use jcl::dgp::{fit_dgp_raw, moment_match, McmcSettings};
use jcl::gp::{fit_gp_raw, interval_probability, log_interval_probability, Dataset, FittedGp, PosteriorSummary};
use jcl::kernel::{matern52, GpHyperparameters, NUGGET};
use jcl::lhs::maximin_lhs;
use jcl::normal::norm_cdf;
use jcl::surrogate::Surrogate;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn distinct_inputs(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    maximin_lhs(n, d, 5, &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fitted_gp_interpolates(seed in 0u64..1000, n in 3usize..12, d in 1usize..4) {
        let xs = distinct_inputs(n, d, seed);
        let ys: Vec<f64> = xs.iter().map(|x| (5.0 * x[0]).sin() + x.iter().sum::<f64>()).collect();
        let gp = fit_gp_raw(&xs, &ys, seed).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            let p = gp.predict(x);
            prop_assert!((p.mean - y).abs() <= 1e-4, "residual {}", p.mean - y);
            prop_assert!(p.sd * p.sd <= NUGGET + 1e-8);
            prop_assert!(p.sd * p.sd >= NUGGET - 1e-10);
        }
    }

    #[test]
    fn log_interval_matches_direct(mean in -5.0f64..5.0, sd in 1e-3f64..5.0, lo in -8.0f64..8.0, width in 0.0f64..6.0) {
        let s = PosteriorSummary { mean, sd };
        let p = interval_probability(s, lo, lo + width).unwrap();
        let lp = log_interval_probability(s, lo, lo + width).unwrap();
        prop_assert!(lp <= 0.0);
        if p >= 1e-12 {
            prop_assert!((lp.exp() - p).abs() <= 1e-10, "p = {p}, exp(lp) = {}", lp.exp());
        }
    }

    #[test]
    fn moment_matching_never_shrinks_variance(parts in prop::collection::vec((-3.0f64..3.0, 1e-3f64..2.0), 1..20)) {
        let preds: Vec<PosteriorSummary> = parts.iter().map(|&(mean, sd)| PosteriorSummary { mean, sd }).collect();
        let mm = moment_match(&preds);
        let within = preds.iter().map(|p| p.sd * p.sd).sum::<f64>() / preds.len() as f64;
        prop_assert!(mm.sd * mm.sd >= within * (1.0 - 1e-12));
    }

    #[test]
    fn tolerance_never_grows(ys in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 1..15)) {
        let mut data = Dataset::empty(1, 2);
        let mut last = f64::INFINITY;
        for (i, y) in ys.iter().enumerate() {
            data.push(vec![i as f64 / 20.0], y.clone()).unwrap();
            let t = compute_tolerance(&data, &[0.0, 0.0], 0.9).unwrap().t;
            prop_assert!(t <= last);
            last = t;
        }
    }

    #[test]
    fn kernel_is_symmetric(a in prop::collection::vec(0.0f64..1.0, 3), b in prop::collection::vec(0.0f64..1.0, 3), l in 0.05f64..3.0) {
        let hp = GpHyperparameters::new(vec![l, 2.0 * l, 0.5 * l], 1.7).unwrap();
        let k1 = matern52(&a, &b, &hp).unwrap();
        prop_assert_eq!(k1, matern52(&b, &a, &hp).unwrap());
        prop_assert!(k1 > 0.0 && k1 <= 1.7);
    }
}

/// Posterior by explicit inverse, independent of the Cholesky path.
/// Variance is the latent one floored at the nugget.
fn dense_oracle(xs: &[f64], ys: &[f64], hp: &GpHyperparameters, x: f64) -> (f64, f64) {
    let n = xs.len();
    let center = ys.iter().sum::<f64>() / n as f64;
    let k = DMatrix::from_fn(n, n, |i, j| matern52(&[xs[i]], &[xs[j]], hp).unwrap() + if i == j { NUGGET } else { 0.0 });
    let kinv = k.try_inverse().unwrap();
    let ks = DVector::from_fn(n, |i, _| matern52(&[xs[i]], &[x], hp).unwrap());
    let yc = DVector::from_fn(n, |i, _| ys[i] - center);
    let mean = center + (ks.transpose() * &kinv * yc)[0];
    let var = hp.signal_variance - (ks.transpose() * &kinv * &ks)[0];
    (mean, var.max(NUGGET).sqrt())
}

#[test]
fn gp_matches_dense_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    use rand::Rng;
    for _ in 0..10 {
        let n = rng.gen_range(1..=5);
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + rng.gen::<f64>()) / n as f64).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let hp = GpHyperparameters::new(vec![rng.gen_range(0.1..1.0)], rng.gen_range(0.5..2.0)).unwrap();
        let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let gp = FittedGp::with_hyperparameters(&inputs, &ys, hp.clone()).unwrap();
        for _ in 0..5 {
            let x = rng.gen::<f64>();
            let p = gp.predict(&[x]);
            let (m, s) = dense_oracle(&xs, &ys, &hp, x);
            assert!((p.mean - m).abs() < 1e-8 && (p.sd - s).abs() < 1e-8, "{p:?} vs ({m}, {s})");
        }
    }
}

#[test]
fn lengthscale_recovered_from_a_prior_draw() {
    let n = 60;
    let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 + 0.5) / n as f64]).collect();
    let truth = GpHyperparameters::isotropic(1, 0.2, 1.0).unwrap();
    let k = DMatrix::from_fn(n, n, |i, j| matern52(&xs[i], &xs[j], &truth).unwrap() + if i == j { NUGGET } else { 0.0 });
    let l = k.cholesky().unwrap().l();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let z = DVector::from_fn(n, |_, _| {
        // Box-Muller keeps the test free of extra distribution crates
        use rand::Rng;
        let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-300), rng.gen());
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let y = l * z;
    let fit = fit_gp_raw(&xs, y.as_slice(), 1).unwrap();
    let ell = fit.hyperparameters().lengthscales[0];
    assert!(ell > 0.1 && ell < 0.4, "fitted lengthscale {ell}");
}

#[test]
fn joint_probability_stays_a_probability() {
    let xs = distinct_inputs(8, 2, 3);
    let a: Vec<f64> = xs.iter().map(|x| x[0] - 0.3).collect();
    let b: Vec<f64> = xs.iter().map(|x| x[1] * x[0] - 0.2).collect();
    let models = vec![Surrogate::Gp(fit_gp_raw(&xs, &a, 1).unwrap()), Surrogate::Gp(fit_gp_raw(&xs, &b, 2).unwrap())];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    use rand::Rng;
    for _ in 0..500 {
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        let t = rng.gen_range(0.0..1.0);
        let j = joint_log_probability(&models, &x, t, &[0.0, 0.0]).unwrap().exp();
        assert!((0.0..=1.0).contains(&j));
        let direct: f64 = models
            .iter()
            .map(|m| {
                let s = m.predict(&x);
                norm_cdf((t - s.mean) / s.sd.max(1e-8)) - norm_cdf((-t - s.mean) / s.sd.max(1e-8))
            })
            .product();
        if direct >= 1e-12 {
            assert!((j - direct).abs() < 1e-10);
        }
    }
}

#[test]
fn dgp_interval_probability_is_monotone_in_the_upper_bound() {
    let xs = distinct_inputs(10, 2, 5);
    let ys: Vec<f64> = xs.iter().map(|x| (4.0 * x[0]).sin() * x[1]).collect();
    let post = fit_dgp_raw(&xs, &ys, McmcSettings { n_iter: 200, burn: 100, thin: 10 }, 3).unwrap();
    let x = [0.37, 0.61];
    let mut last = 0.0;
    for k in 0..40 {
        let hi = -1.0 + k as f64 * 0.05;
        let p = post.interval_probability(&x, -1.0, hi).unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(p >= last);
        last = p;
    }
    assert_eq!(post.interval_probability(&x, 0.3, 0.3).unwrap(), 0.0);
}
