//! Uniform interface over the two surrogate families.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dgp::{fit_dgp, DgpPosterior, McmcSettings};
use crate::error::{invalid, Error, Result};
use crate::gp::{fit_gp, log_interval_probability, interval_probability, Dataset, FittedGp, PosteriorSummary};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurrogateKind {
    Gp,
    Dgp,
}

impl fmt::Display for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurrogateKind::Gp => "gp",
            SurrogateKind::Dgp => "dgp",
        })
    }
}

impl FromStr for SurrogateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gp" => Ok(SurrogateKind::Gp),
            "dgp" => Ok(SurrogateKind::Dgp),
            other => Err(invalid(format!("unknown surrogate kind '{other}' (expected gp or dgp)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Surrogate {
    Gp(FittedGp),
    Dgp(DgpPosterior),
}

impl Surrogate {
    pub fn fit(kind: SurrogateKind, data: &Dataset, r: usize, mcmc: McmcSettings, seed: u64) -> Result<Self> {
        Ok(match kind {
            SurrogateKind::Gp => Surrogate::Gp(fit_gp(data, r, seed)?),
            SurrogateKind::Dgp => Surrogate::Dgp(fit_dgp(data, r, mcmc, seed)?),
        })
    }

    pub fn predict(&self, x: &[f64]) -> PosteriorSummary {
        match self {
            Surrogate::Gp(m) => m.predict(x),
            Surrogate::Dgp(m) => m.predict(x),
        }
    }

    pub fn interval_probability(&self, x: &[f64], lo: f64, hi: f64) -> Result<f64> {
        match self {
            Surrogate::Gp(m) => interval_probability(m.predict(x), lo, hi),
            Surrogate::Dgp(m) => m.interval_probability(x, lo, hi),
        }
    }

    pub fn log_interval_probability(&self, x: &[f64], lo: f64, hi: f64) -> Result<f64> {
        match self {
            Surrogate::Gp(m) => log_interval_probability(m.predict(x), lo, hi),
            Surrogate::Dgp(m) => m.log_interval_probability(x, lo, hi),
        }
    }

    /// Posterior probability that the response lies below `level`.
    pub fn probability_below(&self, x: &[f64], level: f64) -> Result<f64> {
        self.interval_probability(x, f64::NEG_INFINITY, level)
    }
}

/// Fits one surrogate per response column, each with its own derived seed.
pub fn fit_all(kind: SurrogateKind, data: &Dataset, mcmc: McmcSettings, seed: u64) -> Result<Vec<Surrogate>> {
    let fit_one = |r: usize| Surrogate::fit(kind, data, r, mcmc, derive_seed(seed, "surrogate", &[r as u64]));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..data.r()).into_par_iter().map(fit_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..data.r()).map(fit_one).collect()
    }
}
