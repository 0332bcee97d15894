//! Exact Gaussian process regression with a Matérn-5/2 kernel.
//!
//! Responses are centered on their training mean before inference; the
//! predictive mean adds the centering constant back. Hyperparameters are
//! fitted by maximum marginal likelihood in log space with a handful of
//! space-filling starts, each refined by a bounded quasi-Newton search using
//! the analytic gradient.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::{matern52_profile, matern52_radial_derivative, scaled_distance, GpHyperparameters, NUGGET};
use crate::lhs::random_lhs;
use crate::normal::{gaussian_interval_probability, gaussian_log_interval_probability, SD_FLOOR};
use crate::optim::{minimize, BoxBounds, MinimizeOptions};

/// Aligned design matrix and responses: row `i` of `outputs` holds all `R`
/// responses observed at row `i` of `inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    d: usize,
    r: usize,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
}

/// Two inputs closer than this count as the same location.
pub const DUPLICATE_TOL: f64 = 1e-12;

impl Dataset {
    pub fn empty(d: usize, r: usize) -> Self {
        Self { d, r, inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<Self> {
        let d = inputs.first().map(|x| x.len()).unwrap_or(0);
        let r = outputs.first().map(|y| y.len()).unwrap_or(0);
        if inputs.len() != outputs.len() {
            return Err(invalid("inputs and outputs have different row counts"));
        }
        let mut data = Self::empty(d, r);
        for (x, y) in inputs.into_iter().zip(outputs) {
            data.push(x, y)?;
        }
        Ok(data)
    }

    /// Appends one observation, enforcing the unit cube and distinct inputs.
    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>) -> Result<()> {
        if x.len() != self.d || y.len() != self.r {
            return Err(invalid(format!(
                "observation has shape ({}, {}), dataset expects ({}, {})",
                x.len(),
                y.len(),
                self.d,
                self.r
            )));
        }
        if !x.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)) {
            return Err(invalid(format!("input {x:?} is outside the unit cube")));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(invalid(format!("non-finite response {y:?}")));
        }
        if self.inputs.iter().any(|xi| crate::lhs::squared_distance(xi, &x).sqrt() < DUPLICATE_TOL) {
            return Err(invalid(format!("duplicate input {x:?}")));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.inputs.len()
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn r(&self) -> usize {
        self.r
    }
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }
    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    pub fn column(&self, r: usize) -> Vec<f64> {
        self.outputs.iter().map(|y| y[r]).collect()
    }
}

/// Predictive mean and standard deviation at one location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub sd: f64,
}

pub fn interval_probability(s: PosteriorSummary, lo: f64, hi: f64) -> Result<f64> {
    gaussian_interval_probability(s.mean, s.sd, lo, hi)
}

pub fn log_interval_probability(s: PosteriorSummary, lo: f64, hi: f64) -> Result<f64> {
    gaussian_log_interval_probability(s.mean, s.sd, lo, hi)
}

/// Jitter levels tried, in order, when a covariance refuses to factor.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-8, 1e-6, 1e-4];

/// Cholesky factor of `matrix`, escalating diagonal jitter on failure.
pub(crate) fn factorize(matrix: &DMatrix<f64>, context: &str) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut m = matrix.clone();
        if jitter > 0.0 {
            for i in 0..m.nrows() {
                m[(i, i)] += jitter;
            }
        }
        if let Some(ch) = m.cholesky() {
            return Ok((ch, jitter));
        }
    }
    Err(Error::NumericalFailure {
        context: context.to_string(),
        n: matrix.nrows(),
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        min_diag: matrix.diagonal().min(),
    })
}

fn scale_inputs(inputs: &[Vec<f64>], lengthscales: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(inputs.len() * lengthscales.len());
    for x in inputs {
        out.extend(x.iter().zip(lengthscales).map(|(v, l)| v / l));
    }
    out
}

/// Training covariance `s²·R + (nugget)·I`.
pub(crate) fn training_covariance(inputs: &[Vec<f64>], hp: &GpHyperparameters) -> DMatrix<f64> {
    let n = inputs.len();
    let d = hp.dim();
    let z = scale_inputs(inputs, &hp.lengthscales);
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = hp.signal_variance + hp.nugget;
        for j in 0..i {
            let rho = scaled_distance(&z[i * d..(i + 1) * d], &z[j * d..(j + 1) * d]);
            let v = hp.signal_variance * matern52_profile(rho);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// A GP conditioned on one response column, with cached factorization.
#[derive(Debug, Clone)]
pub struct FittedGp {
    hp: GpHyperparameters,
    n: usize,
    d: usize,
    /// Training inputs divided by the lengthscales, row-major.
    scaled: Vec<f64>,
    /// Lower Cholesky factor, row-major.
    chol_rows: Vec<f64>,
    alpha: Vec<f64>,
    center: f64,
    jitter: f64,
}

impl FittedGp {
    /// Conditions a GP with fixed hyperparameters on `(inputs, y)`.
    ///
    /// Inputs are not required to lie in the unit cube, so warped inputs of a
    /// deep GP can use the same machinery.
    pub fn with_hyperparameters(inputs: &[Vec<f64>], y: &[f64], hp: GpHyperparameters) -> Result<Self> {
        hp.validate()?;
        let n = inputs.len();
        if n == 0 || y.len() != n {
            return Err(invalid("need at least one aligned observation"));
        }
        let d = hp.dim();
        if inputs.iter().any(|x| x.len() != d) {
            return Err(invalid("input dimension does not match lengthscales"));
        }
        let center = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - center));
        let (chol, jitter) = factorize(&training_covariance(inputs, &hp), "GP training covariance")?;
        let alpha = chol.solve(&yc);
        let l = chol.l();
        let mut chol_rows = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                chol_rows[i * n + j] = l[(i, j)];
            }
        }
        Ok(Self {
            scaled: scale_inputs(inputs, &hp.lengthscales),
            hp,
            n,
            d,
            chol_rows,
            alpha: alpha.iter().cloned().collect(),
            center,
            jitter,
        })
    }

    pub fn hyperparameters(&self) -> &GpHyperparameters {
        &self.hp
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn dim(&self) -> usize {
        self.d
    }
    /// Extra diagonal jitter needed to factor the training covariance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }
    pub fn center(&self) -> f64 {
        self.center
    }

    fn cross_covariance(&self, x: &[f64], out: &mut [f64]) {
        let d = self.d;
        let zx: Vec<f64> = x.iter().zip(&self.hp.lengthscales).map(|(v, l)| v / l).collect();
        for (i, k) in out.iter_mut().enumerate() {
            let rho = scaled_distance(&zx, &self.scaled[i * d..(i + 1) * d]);
            *k = self.hp.signal_variance * matern52_profile(rho);
            // the nugget is a white-noise term of the kernel, so it also
            // couples a query to a training input it coincides with
            if rho == 0.0 {
                *k += self.hp.nugget + self.jitter;
            }
        }
    }

    /// Posterior predictive mean only.
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        let mut k = vec![0.0; self.n];
        self.cross_covariance(x, &mut k);
        self.center + k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Posterior predictive mean and standard deviation.
    ///
    /// The variance is that of the latent function, floored at the nugget.
    pub fn predict(&self, x: &[f64]) -> PosteriorSummary {
        let n = self.n;
        let mut k = vec![0.0; n];
        self.cross_covariance(x, &mut k);
        let mean = self.center + k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
        // forward substitution L v = k, in place
        let mut vv = 0.0;
        for i in 0..n {
            let row = &self.chol_rows[i * n..i * n + i];
            let s: f64 = row.iter().zip(&k[..i]).map(|(a, b)| a * b).sum();
            k[i] = (k[i] - s) / self.chol_rows[i * n + i];
            vv += k[i] * k[i];
        }
        let var = (self.hp.signal_variance - vv).max(self.hp.nugget);
        PosteriorSummary { mean, sd: var.sqrt().max(SD_FLOOR) }
    }

    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Vec<PosteriorSummary> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// Hyperparameter search box in log space.
pub const LENGTHSCALE_BOUNDS: (f64, f64) = (1e-2, 10.0);
pub const VARIANCE_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const MLE_STARTS: usize = 5;
pub const MLE_MAX_EVALS: usize = 150;

/// Log marginal likelihood of centered responses, and optionally its gradient
/// with respect to `(ln ℓ_1, …, ln ℓ_d, ln s²)`.
pub fn log_marginal_likelihood(
    inputs: &[Vec<f64>],
    y_centered: &[f64],
    hp: &GpHyperparameters,
    with_gradient: bool,
) -> Option<(f64, Vec<f64>)> {
    let n = inputs.len();
    let d = hp.dim();
    let k = training_covariance(inputs, hp);
    let chol = k.cholesky()?;
    let y = DVector::from_column_slice(y_centered);
    let alpha = chol.solve(&y);
    let l = chol.l_dirty();
    let log_det: f64 = (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
    let ll = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
    if !ll.is_finite() {
        return None;
    }
    if !with_gradient {
        return Some((ll, Vec::new()));
    }
    let kinv = chol.inverse();
    let mut grad = vec![0.0; d + 1];
    let z = scale_inputs(inputs, &hp.lengthscales);
    for i in 0..n {
        for j in 0..=i {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            let factor = if i == j { 0.5 } else { 1.0 };
            if i == j {
                grad[d] += factor * w * hp.signal_variance;
                continue;
            }
            let zi = &z[i * d..(i + 1) * d];
            let zj = &z[j * d..(j + 1) * d];
            let rho = scaled_distance(zi, zj);
            grad[d] += factor * w * hp.signal_variance * matern52_profile(rho);
            let radial = hp.signal_variance * matern52_radial_derivative(rho);
            for q in 0..d {
                let diff = zi[q] - zj[q];
                grad[q] += factor * w * radial * diff * diff;
            }
        }
    }
    Some((ll, grad))
}

fn hp_from_log(theta: &[f64]) -> GpHyperparameters {
    let d = theta.len() - 1;
    GpHyperparameters {
        lengthscales: theta[..d].iter().map(|v| v.exp()).collect(),
        signal_variance: theta[d].exp(),
        nugget: NUGGET,
    }
}

/// Result of maximum-likelihood fitting, including the per-start record.
#[derive(Debug, Clone)]
pub struct MleReport {
    pub hyperparameters: GpHyperparameters,
    pub log_likelihood: f64,
    /// `(start hyperparameters, log-likelihood at the start)`.
    pub starts: Vec<(GpHyperparameters, f64)>,
}

/// Maximum-likelihood hyperparameters for `(inputs, y)`.
pub fn fit_hyperparameters(inputs: &[Vec<f64>], y: &[f64], seed: u64) -> Result<MleReport> {
    let n = inputs.len();
    if n < 2 {
        return Err(Error::InsufficientPoints { needed: 2, got: n });
    }
    let d = inputs[0].len();
    let center = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - center).collect();

    let mut lower = vec![LENGTHSCALE_BOUNDS.0.ln(); d];
    let mut upper = vec![LENGTHSCALE_BOUNDS.1.ln(); d];
    lower.push(VARIANCE_BOUNDS.0.ln());
    upper.push(VARIANCE_BOUNDS.1.ln());
    let bounds = BoxBounds::new(lower, upper);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Vec<f64>> = random_lhs(MLE_STARTS, d + 1, &mut rng)
        .into_iter()
        .map(|u| u.iter().enumerate().map(|(i, v)| bounds.lower[i] + v * (bounds.upper[i] - bounds.lower[i])).collect())
        .collect();

    let objective = |theta: &[f64]| match log_marginal_likelihood(inputs, &yc, &hp_from_log(theta), true) {
        Some((ll, g)) => (-ll, g.iter().map(|v| -v).collect()),
        None => (f64::INFINITY, vec![0.0; theta.len()]),
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut record = Vec::with_capacity(starts.len());
    for s in &starts {
        let start_ll = log_marginal_likelihood(inputs, &yc, &hp_from_log(s), false).map(|v| v.0).unwrap_or(f64::NEG_INFINITY);
        record.push((hp_from_log(s), start_ll));
        let opts = MinimizeOptions { max_evals: MLE_MAX_EVALS, ..Default::default() };
        let m = minimize(objective, s, &bounds, opts);
        if m.value.is_finite() && best.as_ref().is_none_or(|b| -m.value > b.1) {
            best = Some((m.x, -m.value));
        }
    }
    let (theta, ll) = best.ok_or_else(|| Error::NumericalFailure {
        context: "every likelihood start failed to factor".into(),
        n,
        jitter: 0.0,
        min_diag: NUGGET,
    })?;
    Ok(MleReport { hyperparameters: hp_from_log(&theta), log_likelihood: ll, starts: record })
}

/// Fits a GP to `(inputs, y)` by maximum likelihood.
pub fn fit_gp_raw(inputs: &[Vec<f64>], y: &[f64], seed: u64) -> Result<FittedGp> {
    let report = fit_hyperparameters(inputs, y, seed)?;
    FittedGp::with_hyperparameters(inputs, y, report.hyperparameters)
}

/// Fits a GP to response column `r` of `data`.
pub fn fit_gp(data: &Dataset, r: usize, seed: u64) -> Result<FittedGp> {
    if r >= data.r() {
        return Err(invalid(format!("response column {r} out of range")));
    }
    fit_gp_raw(data.inputs(), &data.column(r), seed)
}
