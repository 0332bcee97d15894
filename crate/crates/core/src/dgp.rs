//! Two-layer deep Gaussian process fitted by MCMC.
//!
//! The latent layer warps each input dimension: column `k` of the warp `W`
//! has prior `N(X_k, Σ_k)` where `Σ_k` is an isotropic Matérn-5/2 covariance
//! on the inputs with lengthscale `ℓ_k`. The outer layer is a GP from `W` to
//! the response. Each sweep updates every latent column by elliptical slice
//! sampling, then every log-hyperparameter by random-walk Metropolis-Hastings.
//!
//! Prediction pushes a new input through the inner layer's predictive mean
//! for each retained sample, evaluates the outer GP there, and moment-matches
//! across samples.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::gp::{fit_hyperparameters, log_marginal_likelihood, Dataset, FittedGp, PosteriorSummary, LENGTHSCALE_BOUNDS, VARIANCE_BOUNDS};
use crate::kernel::{matern52_profile, GpHyperparameters, NUGGET};
use crate::normal::{gaussian_interval_probability, gaussian_log_interval_probability, log_sum_exp};

/// Signal variance of every latent-layer GP.
pub const INNER_VARIANCE: f64 = 0.03;
/// Initial latent lengthscale.
const INNER_LENGTHSCALE_INIT: f64 = 1.0;
/// Gamma(shape, rate) prior on squared latent lengthscales. Outer-layer
/// log-hyperparameters get a flat prior on the MLE search box.
const INNER_PRIOR: (f64, f64) = (1.5, 3.9 / 4.0);
const TARGET_ACCEPTANCE: f64 = 0.3;
const ADAPT_WINDOW: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McmcSettings {
    pub n_iter: usize,
    pub burn: usize,
    pub thin: usize,
}

impl Default for McmcSettings {
    fn default() -> Self {
        Self { n_iter: 1000, burn: 500, thin: 5 }
    }
}

impl McmcSettings {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 || self.burn >= self.n_iter || self.retained() == 0 {
            return Err(invalid(format!("MCMC settings {self:?} retain no samples")));
        }
        Ok(())
    }

    /// Number of samples kept: `(n_iter - burn) / thin`.
    pub fn retained(&self) -> usize {
        if self.thin == 0 || self.burn >= self.n_iter {
            0
        } else {
            (self.n_iter - self.burn) / self.thin
        }
    }

    fn keeps(&self, iter: usize) -> bool {
        iter >= self.burn && (iter - self.burn + 1).is_multiple_of(self.thin)
    }
}

/// One elliptical slice sampling update for a zero-mean Gaussian prior.
///
/// Never rejects: the bracket shrinks towards the current state until a
/// proposal clears the slice.
pub fn ess_step<R, F>(current: &[f64], prior_cov: &DMatrix<f64>, log_lik: F, rng: &mut R) -> Result<Vec<f64>>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let n = current.len();
    if prior_cov.nrows() != n || prior_cov.ncols() != n {
        return Err(invalid("prior covariance does not match the state dimension"));
    }
    let chol = prior_cov.clone().cholesky().ok_or_else(|| Error::NumericalFailure {
        context: "ESS prior covariance".into(),
        n,
        jitter: 0.0,
        min_diag: prior_cov.diagonal().min(),
    })?;
    let mut log_lik = log_lik;
    let ll = log_lik(current);
    Ok(ess_step_factored(current, ll, &chol.l(), &mut log_lik, rng).0)
}

fn ess_step_factored<R, F>(current: &[f64], current_ll: f64, chol_l: &DMatrix<f64>, log_lik: &mut F, rng: &mut R) -> (Vec<f64>, f64)
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    let n = current.len();
    let z = DVector::from_iterator(n, (0..n).map(|_| standard_normal(rng)));
    let nu = chol_l * z;
    let threshold = current_ll + rng.gen::<f64>().ln();
    let mut angle = rng.gen::<f64>() * std::f64::consts::TAU;
    let (mut lo, mut hi) = (angle - std::f64::consts::TAU, angle);
    let mut proposal = vec![0.0; n];
    for _ in 0..200 {
        let (s, c) = angle.sin_cos();
        for i in 0..n {
            proposal[i] = current[i] * c + nu[i] * s;
        }
        let ll = log_lik(&proposal);
        if ll > threshold {
            return (proposal, ll);
        }
        if angle < 0.0 {
            lo = angle;
        } else {
            hi = angle;
        }
        angle = lo + rng.gen::<f64>() * (hi - lo);
    }
    // the bracket has collapsed onto the current state
    (current.to_vec(), current_ll)
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; one draw per call keeps the stream position simple to reason about.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Isotropic latent covariance `INNER_VARIANCE·R(ℓ) + nugget·I` on the inputs.
fn inner_covariance(inputs: &[Vec<f64>], lengthscale: f64) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = INNER_VARIANCE + NUGGET;
        for j in 0..i {
            let dist = crate::lhs::squared_distance(&inputs[i], &inputs[j]).sqrt();
            let v = INNER_VARIANCE * matern52_profile(dist / lengthscale);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Log density of a squared-lengthscale Gamma prior, parameterized by `ln ℓ`.
fn log_prior_lengthscale(log_l: f64, (shape, rate): (f64, f64)) -> f64 {
    let theta = (2.0 * log_l).exp();
    (shape - 1.0) * theta.ln() - rate * theta + (2.0 * theta).ln()
}

fn in_lengthscale_bounds(log_l: f64) -> bool {
    log_l >= LENGTHSCALE_BOUNDS.0.ln() && log_l <= LENGTHSCALE_BOUNDS.1.ln()
}

fn in_variance_bounds(log_v: f64) -> bool {
    log_v >= VARIANCE_BOUNDS.0.ln() && log_v <= VARIANCE_BOUNDS.1.ln()
}

/// Zero-mean Gaussian log density from a Cholesky factor.
fn gaussian_log_density(dev: &[f64], chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let n = dev.len();
    let v = DVector::from_column_slice(dev);
    let l = chol.l_dirty();
    let z = l.solve_lower_triangular(&v).expect("nonsingular factor");
    let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum();
    -0.5 * z.dot(&z) - log_det - 0.5 * n as f64 * (std::f64::consts::TAU).ln()
}

/// One retained posterior draw with its prediction caches.
#[derive(Debug, Clone)]
pub struct DgpSample {
    /// Warped inputs, one row per observation.
    pub warp: Vec<Vec<f64>>,
    pub inner_lengthscales: Vec<f64>,
    pub outer: GpHyperparameters,
    /// `Σ_k⁻¹ (W_k − X_k)` for each latent column.
    inner_weights: Vec<Vec<f64>>,
    outer_gp: FittedGp,
}

impl DgpSample {
    fn build(inputs: &[Vec<f64>], y: &[f64], warp: Vec<Vec<f64>>, inner_lengthscales: Vec<f64>, outer: GpHyperparameters) -> Result<Self> {
        let d = inputs[0].len();
        let n = inputs.len();
        let mut inner_weights = Vec::with_capacity(d);
        for (k, &l) in inner_lengthscales.iter().enumerate() {
            let (chol, _) = crate::gp::factorize(&inner_covariance(inputs, l), "latent covariance")?;
            let dev = DVector::from_iterator(n, (0..n).map(|i| warp[i][k] - inputs[i][k]));
            inner_weights.push(chol.solve(&dev).iter().cloned().collect());
        }
        let outer_gp = FittedGp::with_hyperparameters(&warp, y, outer.clone())?;
        Ok(Self { warp, inner_lengthscales, outer, inner_weights, outer_gp })
    }
}

/// Retained MCMC samples of a two-layer deep GP.
#[derive(Debug, Clone)]
pub struct DgpPosterior {
    inputs: Vec<Vec<f64>>,
    samples: Vec<DgpSample>,
    pub settings: McmcSettings,
    /// Metropolis-Hastings acceptance rate over the whole run.
    pub acceptance_rate: f64,
}

impl DgpPosterior {
    /// Builds a posterior from explicit `(warp, inner lengthscales, outer hyperparameters)` draws.
    pub fn from_samples(
        inputs: &[Vec<f64>],
        y: &[f64],
        draws: Vec<(Vec<Vec<f64>>, Vec<f64>, GpHyperparameters)>,
    ) -> Result<Self> {
        if draws.is_empty() || inputs.is_empty() {
            return Err(invalid("a deep GP posterior needs at least one sample and one observation"));
        }
        let samples = draws
            .into_iter()
            .map(|(w, l, hp)| DgpSample::build(inputs, y, w, l, hp))
            .collect::<Result<Vec<_>>>()?;
        let s = samples.len();
        Ok(Self {
            inputs: inputs.to_vec(),
            samples,
            settings: McmcSettings { n_iter: s, burn: 0, thin: 1 },
            acceptance_rate: f64::NAN,
        })
    }

    pub fn samples(&self) -> &[DgpSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Per-sample conditional Gaussian predictions at `x`.
    pub fn sample_predictions(&self, x: &[f64]) -> Vec<PosteriorSummary> {
        let n = self.inputs.len();
        let dist: Vec<f64> = self.inputs.iter().map(|xi| crate::lhs::squared_distance(xi, x).sqrt()).collect();
        let mut w = vec![0.0; x.len()];
        let mut out = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            for (k, wk) in w.iter_mut().enumerate() {
                let l = s.inner_lengthscales[k];
                let weights = &s.inner_weights[k];
                let mut acc = 0.0;
                for i in 0..n {
                    acc += INNER_VARIANCE * matern52_profile(dist[i] / l) * weights[i];
                }
                *wk = x[k] + acc;
            }
            out.push(s.outer_gp.predict(&w));
        }
        out
    }

    /// Moment-matched predictive summary at `x`.
    pub fn predict(&self, x: &[f64]) -> PosteriorSummary {
        moment_match(&self.sample_predictions(x))
    }

    /// Mean over samples of the per-sample Gaussian interval probability.
    pub fn interval_probability(&self, x: &[f64], lo: f64, hi: f64) -> Result<f64> {
        let preds = self.sample_predictions(x);
        let mut total = 0.0;
        for p in &preds {
            total += gaussian_interval_probability(p.mean, p.sd, lo, hi)?;
        }
        Ok(total / preds.len() as f64)
    }

    /// Log of [`Self::interval_probability`], computed by log-sum-exp over samples.
    pub fn log_interval_probability(&self, x: &[f64], lo: f64, hi: f64) -> Result<f64> {
        let preds = self.sample_predictions(x);
        let logs = preds
            .iter()
            .map(|p| gaussian_log_interval_probability(p.mean, p.sd, lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Ok((log_sum_exp(&logs) - (logs.len() as f64).ln()).min(0.0))
    }
}

/// `μ = mean(μ_s)`, `σ² = mean(σ_s²) + mean((μ_s − μ)²)`.
pub fn moment_match(preds: &[PosteriorSummary]) -> PosteriorSummary {
    let s = preds.len() as f64;
    let mean = preds.iter().map(|p| p.mean).sum::<f64>() / s;
    let within = preds.iter().map(|p| p.sd * p.sd).sum::<f64>() / s;
    let between = preds.iter().map(|p| (p.mean - mean).powi(2)).sum::<f64>() / s;
    PosteriorSummary { mean, sd: (within + between).sqrt() }
}

struct Chain<'a> {
    inputs: &'a [Vec<f64>],
    yc: Vec<f64>,
    warp: Vec<Vec<f64>>,
    inner_log_l: Vec<f64>,
    inner_chol: Vec<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    /// `(ln ℓ_1, …, ln ℓ_d, ln s²)` of the outer layer.
    outer_theta: Vec<f64>,
    outer_ll: f64,
    steps: Vec<f64>,
    window_accepts: Vec<usize>,
    accepted: usize,
    proposed: usize,
}

fn outer_hp(theta: &[f64]) -> GpHyperparameters {
    let d = theta.len() - 1;
    GpHyperparameters {
        lengthscales: theta[..d].iter().map(|v| v.exp()).collect(),
        signal_variance: theta[d].exp(),
        nugget: NUGGET,
    }
}

fn outer_log_lik(warp: &[Vec<f64>], yc: &[f64], theta: &[f64]) -> f64 {
    log_marginal_likelihood(warp, yc, &outer_hp(theta), false).map(|v| v.0).unwrap_or(f64::NEG_INFINITY)
}

impl<'a> Chain<'a> {
    fn deviation(&self, k: usize) -> Vec<f64> {
        self.warp.iter().zip(self.inputs).map(|(w, x)| w[k] - x[k]).collect()
    }

    fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let d = self.inner_log_l.len();
        for k in 0..d {
            let dev = self.deviation(k);
            let l = self.inner_chol[k].l();
            let (inputs, yc, theta) = (self.inputs, &self.yc, &self.outer_theta);
            let mut scratch = self.warp.clone();
            let mut ll = |dv: &[f64]| {
                for i in 0..dv.len() {
                    scratch[i][k] = inputs[i][k] + dv[i];
                }
                outer_log_lik(&scratch, yc, theta)
            };
            let (new_dev, new_ll) = ess_step_factored(&dev, self.outer_ll, &l, &mut ll, rng);
            for (i, v) in new_dev.iter().enumerate() {
                self.warp[i][k] = self.inputs[i][k] + v;
            }
            self.outer_ll = new_ll;
        }

        // latent lengthscales
        for k in 0..d {
            let dev = self.deviation(k);
            let proposal = self.inner_log_l[k] + self.steps[k] * standard_normal(rng);
            let u: f64 = rng.gen();
            self.proposed += 1;
            if !in_lengthscale_bounds(proposal) {
                continue;
            }
            let Ok((chol, _)) = crate::gp::factorize(&inner_covariance(self.inputs, proposal.exp()), "latent covariance") else {
                continue;
            };
            let cur = gaussian_log_density(&dev, &self.inner_chol[k]) + log_prior_lengthscale(self.inner_log_l[k], INNER_PRIOR);
            let new = gaussian_log_density(&dev, &chol) + log_prior_lengthscale(proposal, INNER_PRIOR);
            if u.ln() < new - cur {
                self.inner_log_l[k] = proposal;
                self.inner_chol[k] = chol;
                self.accepted += 1;
                self.window_accepts[k] += 1;
            }
        }

        // outer lengthscales, then outer variance
        for q in 0..=d {
            let mut theta = self.outer_theta.clone();
            theta[q] += self.steps[d + q] * standard_normal(rng);
            let u: f64 = rng.gen();
            self.proposed += 1;
            let inside = if q < d { in_lengthscale_bounds(theta[q]) } else { in_variance_bounds(theta[q]) };
            if !inside {
                continue;
            }
            let new_ll = outer_log_lik(&self.warp, &self.yc, &theta);
                        if u.ln() < new_ll - self.outer_ll {
                self.outer_theta = theta;
                self.outer_ll = new_ll;
                self.accepted += 1;
                self.window_accepts[d + q] += 1;
            }
        }
        Ok(())
    }

    fn adapt(&mut self) {
        for (step, acc) in self.steps.iter_mut().zip(self.window_accepts.iter_mut()) {
            let rate = *acc as f64 / ADAPT_WINDOW as f64;
            *step = (*step * (2.0 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(0.01, 3.0);
            *acc = 0;
        }
    }
}

/// Runs the sampler on `(inputs, y)`.
pub fn fit_dgp_raw(inputs: &[Vec<f64>], y: &[f64], mcmc: McmcSettings, seed: u64) -> Result<DgpPosterior> {
    mcmc.validate()?;
    let n = inputs.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    let d = inputs[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mle = fit_hyperparameters(inputs, y, rng.gen())?;
    let center = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - center).collect();

    let mut outer_theta: Vec<f64> = mle.hyperparameters.lengthscales.iter().map(|l| l.ln()).collect();
    outer_theta.push(mle.hyperparameters.signal_variance.ln());
    let inner_log_l = vec![INNER_LENGTHSCALE_INIT.ln(); d];
    let inner_chol = inner_log_l
        .iter()
        .map(|l| crate::gp::factorize(&inner_covariance(inputs, l.exp()), "latent covariance").map(|c| c.0))
        .collect::<Result<Vec<_>>>()?;
    let warp = inputs.to_vec();
    let outer_ll = outer_log_lik(&warp, &yc, &outer_theta);
    if !outer_ll.is_finite() {
        return Err(Error::NumericalFailure { context: "initial outer covariance".into(), n, jitter: 0.0, min_diag: NUGGET });
    }
    let mut chain = Chain {
        inputs,
        yc,
        warp,
        inner_log_l,
        inner_chol,
        outer_theta,
        outer_ll,
        steps: vec![0.5; 2 * d + 1],
        window_accepts: vec![0; 2 * d + 1],
        accepted: 0,
        proposed: 0,
    };

    let mut draws = Vec::with_capacity(mcmc.retained());
    for iter in 0..mcmc.n_iter {
        chain.sweep(&mut rng)?;
        if iter < mcmc.burn && (iter + 1) % ADAPT_WINDOW == 0 {
            chain.adapt();
        }
        if mcmc.keeps(iter) {
            draws.push((
                chain.warp.clone(),
                chain.inner_log_l.iter().map(|v| v.exp()).collect::<Vec<_>>(),
                outer_hp(&chain.outer_theta),
            ));
        }
    }
    let samples = draws
        .into_iter()
        .map(|(w, l, hp)| DgpSample::build(inputs, y, w, l, hp))
        .collect::<Result<Vec<_>>>()?;
    Ok(DgpPosterior {
        inputs: inputs.to_vec(),
        samples,
        settings: mcmc,
        acceptance_rate: chain.accepted as f64 / chain.proposed.max(1) as f64,
    })
}

/// Fits a deep GP to response column `r` of `data`.
pub fn fit_dgp(data: &Dataset, r: usize, mcmc: McmcSettings, seed: u64) -> Result<DgpPosterior> {
    if r >= data.r() {
        return Err(invalid(format!("response column {r} out of range")));
    }
    fit_dgp_raw(data.inputs(), &data.column(r), mcmc, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::fit_gp_raw;

    #[test]
    fn retention_arithmetic() {
        assert_eq!(McmcSettings::default().retained(), 100);
        let m = McmcSettings { n_iter: 10, burn: 4, thin: 3 };
        assert_eq!((0..10).filter(|&i| m.keeps(i)).count(), m.retained());
        assert!(McmcSettings { n_iter: 5, burn: 5, thin: 1 }.validate().is_err());
    }

    #[test]
    fn ess_is_deterministic() {
        let cov = DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.3 });
        let ll = |v: &[f64]| -v.iter().map(|x| (x - 1.0).powi(2)).sum::<f64>();
        let a = ess_step(&[0.0; 3], &cov, ll, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = ess_step(&[0.0; 3], &cov, ll, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ess_flat_likelihood_preserves_prior() {
        // Long-run moments under a flat likelihood must match the prior.
        let n = 20;
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let mut cov = inner_covariance(&xs, 0.3);
        for i in 0..n {
            cov[(i, i)] *= 1.0 + 0.1 * i as f64 / n as f64;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut state = vec![3.0; n];
        let steps = 5000;
        let mut sum = vec![0.0; n];
        let mut sq = vec![0.0; n];
        for _ in 0..steps {
            state = ess_step(&state, &cov, |_| 0.0, &mut rng).unwrap();
            for i in 0..n {
                sum[i] += state[i];
                sq[i] += state[i] * state[i];
            }
        }
        for i in 0..n {
            let m = sum[i] / steps as f64;
            let second = sq[i] / steps as f64;
            assert!(m.abs() < 0.1 * cov[(i, i)].sqrt() + 0.1, "mean {i}: {m}");
            assert!((second - cov[(i, i)]).abs() <= 0.1 * cov[(i, i)], "second moment {i}: {second} vs {}", cov[(i, i)]);
        }
    }

    #[test]
    fn ess_conjugate_gaussian_posterior() {
        // prior N(0, I), likelihood N(f; m, s² I) -> posterior mean m/(1+s²)
        let n = 2;
        let cov = DMatrix::identity(n, n);
        let m = [2.0, -1.0];
        let s2 = 0.05;
        let ll = |v: &[f64]| -v.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (2.0 * s2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut state = vec![0.0; n];
        let mut sum = [0.0; 2];
        let (burn, keep) = (500, 20000);
        for it in 0..burn + keep {
            state = ess_step(&state, &cov, ll, &mut rng).unwrap();
            if it >= burn {
                sum[0] += state[0];
                sum[1] += state[1];
            }
        }
        for i in 0..n {
            let expected = m[i] / (1.0 + s2);
            assert!((sum[i] / keep as f64 - expected).abs() < 0.02, "{} vs {expected}", sum[i] / keep as f64);
        }
    }

    fn grid_1d(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![(i as f64 + 0.5) / n as f64]).collect()
    }

    #[test]
    fn identity_warp_matches_plain_gp() {
        let xs = vec![vec![0.1, 0.2], vec![0.5, 0.9], vec![0.8, 0.4], vec![0.3, 0.6]];
        let ys = [0.3, -1.0, 0.7, 0.2];
        let hp = GpHyperparameters::new(vec![0.4, 0.6], 1.5).unwrap();
        let gp = FittedGp::with_hyperparameters(&xs, &ys, hp.clone()).unwrap();
        let draws = (0..3).map(|i| (xs.clone(), vec![0.5 + i as f64, 0.7], hp.clone())).collect();
        let post = DgpPosterior::from_samples(&xs, &ys, draws).unwrap();
        for x in [[0.0, 0.0], [0.45, 0.55], [1.0, 0.3]] {
            let a = gp.predict(&x);
            let b = post.predict(&x);
            assert!((a.mean - b.mean).abs() < 1e-8 && (a.sd - b.sd).abs() < 1e-8);
            let pa = crate::gp::interval_probability(a, -0.2, 0.4).unwrap();
            assert!((pa - post.interval_probability(&x, -0.2, 0.4).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn single_sample_and_sample_mean_probabilities() {
        let xs = grid_1d(4);
        let ys = [0.0, 1.0, 0.5, -0.2];
        let hp = GpHyperparameters::new(vec![0.3], 1.0).unwrap();
        let warp: Vec<Vec<f64>> = xs.iter().map(|x| vec![x[0] * 1.3]).collect();
        let post = DgpPosterior::from_samples(&xs, &ys, vec![(warp.clone(), vec![0.4], hp.clone())]).unwrap();
        let s = post.sample_predictions(&[0.37])[0];
        assert_eq!(post.predict(&[0.37]), s);
        assert_eq!(post.interval_probability(&[0.37], 0.1, 0.1).unwrap(), 0.0);

        let two = DgpPosterior::from_samples(&xs, &ys, vec![(warp, vec![0.4], hp.clone()), (xs.clone(), vec![0.4], hp)]).unwrap();
        let per = two.sample_predictions(&[0.37]);
        let p: Vec<f64> = per.iter().map(|s| gaussian_interval_probability(s.mean, s.sd, 0.0, 0.6).unwrap()).collect();
        let avg = two.interval_probability(&[0.37], 0.0, 0.6).unwrap();
        assert!((avg - 0.5 * (p[0] + p[1])).abs() < 1e-14);
        assert!((two.log_interval_probability(&[0.37], 0.0, 0.6).unwrap().exp() - avg).abs() < 1e-12);
        let mm = two.predict(&[0.37]);
        let within = 0.5 * (per[0].sd.powi(2) + per[1].sd.powi(2));
        assert!(mm.sd * mm.sd >= within);
    }

    #[test]
    fn linear_function_close_to_plain_gp() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs = crate::lhs::maximin_lhs(20, 2, 20, &mut rng);
        let f = |x: &[f64]| 0.8 * x[0] - 0.5 * x[1] + 0.1;
        let ys: Vec<f64> = xs.iter().map(|x| f(x)).collect();
        let test = crate::lhs::random_lhs(40, 2, &mut rng);
        let rmse = |pred: &dyn Fn(&[f64]) -> f64| {
            (test.iter().map(|x| (pred(x) - f(x)).powi(2)).sum::<f64>() / test.len() as f64).sqrt()
        };
        let gp = fit_gp_raw(&xs, &ys, 9).unwrap();
        let r_gp = rmse(&|x| gp.predict(x).mean);
        // averaged over three chains to keep MCMC noise out of the comparison
        let mut r_dgp = 0.0;
        for seed in [9, 10, 11] {
            let post = fit_dgp_raw(&xs, &ys, McmcSettings::default(), seed).unwrap();
            r_dgp += rmse(&|x| post.predict(x).mean) / 3.0;
            assert!(post.acceptance_rate > 0.05 && post.acceptance_rate < 0.95, "{}", post.acceptance_rate);
            for (x, y) in xs.iter().zip(&ys) {
                assert!((post.predict(x).mean - y).abs() < 1e-3);
            }
        }
        assert!(r_dgp <= 2.0 * r_gp, "dgp {r_dgp} gp {r_gp}");
    }
}
