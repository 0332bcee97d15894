//! Synthetic benchmark problems (pre-scaled, target zero) and the Monte
//! Carlo campaign harness.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::acquisition::JclConfig;
use crate::design::{run_method, Evaluator, Method, Problem, RunRecord, Status};
use crate::error::{invalid, Error, Result};
use crate::seed::derive_seed;
use crate::surrogate::SurrogateKind;

fn check_domain(name: &str, x: &[f64], bounds: &[(f64, f64)]) -> Result<()> {
    if x.len() != bounds.len() {
        return Err(invalid(format!("{name}: expected {} inputs, got {}", bounds.len(), x.len())));
    }
    for (i, (&v, &(lo, hi))) in x.iter().zip(bounds).enumerate() {
        if !(v >= lo && v <= hi) {
            return Err(invalid(format!("{name}: x{} = {v} outside [{lo}, {hi}]", i + 1)));
        }
    }
    Ok(())
}

pub const MULTIMODAL2_DOMAIN: [(f64, f64); 2] = [(-4.0, 7.0), (-3.0, 8.0)];
pub const CAMELBACK_DOMAIN: [(f64, f64); 2] = [(-1.0, 1.0), (0.0, 1.0)];
pub const GRAMACY_DOMAIN: [(f64, f64); 2] = [(-2.0, 6.0), (-2.0, 6.0)];
pub const MULTIMODAL3_DOMAIN: [(f64, f64); 3] = [(-4.0, 7.0), (-3.0, 8.0), (0.0, 1.0)];
pub const ISHIGAMI_DOMAIN: [(f64, f64); 3] = [(-PI, PI), (-PI, PI), (-PI, PI)];
pub const TRIG_DOMAIN: [(f64, f64); 3] = [(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)];

fn multimodal_core(x1: f64, x2: f64) -> f64 {
    (x2 - 1.0) / 20.0 * (x1 * x1 + 4.0) - (2.5 * x1).sin() - 2.0
}

pub fn eval_multimodal2(x: &[f64]) -> Result<f64> {
    check_domain("multimodal", x, &MULTIMODAL2_DOMAIN)?;
    Ok(multimodal_core(x[0], x[1]) / 3.556 - 0.00678656)
}

pub fn eval_camelback(x: &[f64]) -> Result<f64> {
    check_domain("camelback", x, &CAMELBACK_DOMAIN)?;
    let u = 1.2 * x[0] - 0.1;
    let v = 0.9 * x[1];
    let u2 = u * u;
    let v2 = v * v;
    let raw = u2 * (4.0 - 2.1 * u2 + u2 * u2 / 3.0) + 2.0 * u * v + 26.0 / 9.0 * v2 * (-4.0 + 16.0 * v2 / 9.0) - 0.1;
    Ok(raw / 2.242 - 0.00719266)
}

pub fn eval_gramacy1(x: &[f64]) -> Result<f64> {
    check_domain("gramacy1", x, &GRAMACY_DOMAIN)?;
    let (x1, x2) = (x[0], x[1]);
    // the leading square carries a minus sign; as typeset the exponent grows
    // without bound and the response cannot have unit variance
    let e = (-(x1 - 0.5).powi(2) - (x2 + 0.5).powi(2)).exp();
    Ok(9.27 * (x1 * e - 0.1) + 0.09830494)
}

pub fn eval_gramacy2(x: &[f64]) -> Result<f64> {
    check_domain("gramacy2", x, &GRAMACY_DOMAIN)?;
    let (x1, x2) = (x[0], x[1]);
    let e = (-(x2 / 4.0).powi(2) - x1 * x1).exp();
    Ok(((x2 + 0.5) * e - 1.0) / 0.4975 - 0.01300846)
}

pub fn eval_multimodal3(x: &[f64]) -> Result<f64> {
    check_domain("multimodal3", x, &MULTIMODAL3_DOMAIN)?;
    Ok((multimodal_core(x[0], x[1]) + x[2] - 0.00052352) / 3.588)
}

pub fn eval_ishigami(x: &[f64]) -> Result<f64> {
    check_domain("ishigami", x, &ISHIGAMI_DOMAIN)?;
    let s1 = x[0].sin();
    Ok((s1 + 7.0 * x[1].sin().powi(2) + 0.1 * x[2].powi(4) * s1 + 2.79921514) / 3.72)
}

pub fn eval_trig(x: &[f64]) -> Result<f64> {
    check_domain("trig", x, &TRIG_DOMAIN)?;
    Ok((x[0].sin() + x[0].cos() + x[1] * x[1] + x[2].sqrt() + x[2].sin() - 3.05174287) / 0.582)
}

type Native = fn(&[f64]) -> Result<f64>;

/// Bijective affine map between the unit cube and a box.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub bounds: Vec<(f64, f64)>,
}

impl AffineMap {
    pub fn new(bounds: &[(f64, f64)]) -> Self {
        Self { bounds: bounds.to_vec() }
    }

    pub fn to_native(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.bounds).map(|(v, (lo, hi))| (lo + v * (hi - lo)).clamp(*lo, *hi)).collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.bounds).map(|(v, (lo, hi))| (v - lo) / (hi - lo)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchmarkName {
    #[serde(rename = "mm-cb")]
    MmCb,
    #[serde(rename = "double-gramacy")]
    DoubleGramacy,
    #[serde(rename = "mm-ishigami-trig")]
    MmIshigamiTrig,
}

impl BenchmarkName {
    pub const ALL: [BenchmarkName; 3] = [BenchmarkName::MmCb, BenchmarkName::DoubleGramacy, BenchmarkName::MmIshigamiTrig];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkName::MmCb => "mm-cb",
            BenchmarkName::DoubleGramacy => "double-gramacy",
            BenchmarkName::MmIshigamiTrig => "mm-ishigami-trig",
        }
    }
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkName::ALL.into_iter().find(|b| b.as_str() == s).ok_or_else(|| {
            invalid(format!("unknown problem '{s}' (expected mm-cb, double-gramacy or mm-ishigami-trig)"))
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchmarkSpec {
    pub name: BenchmarkName,
    pub d: usize,
    /// One native domain map per response function.
    pub maps: Vec<AffineMap>,
    functions: Vec<Native>,
    pub surrogate: SurrogateKind,
    pub n0: usize,
    pub n_max: usize,
    pub epsilon: f64,
}

impl BenchmarkSpec {
    pub fn get(name: BenchmarkName) -> Self {
        let (maps, functions, surrogate, n0, n_max): (Vec<&[(f64, f64)]>, Vec<Native>, _, _, _) = match name {
            BenchmarkName::MmCb => (
                vec![&MULTIMODAL2_DOMAIN, &CAMELBACK_DOMAIN],
                vec![eval_multimodal2, eval_camelback],
                SurrogateKind::Gp,
                5,
                25,
            ),
            BenchmarkName::DoubleGramacy => (
                vec![&GRAMACY_DOMAIN, &GRAMACY_DOMAIN],
                vec![eval_gramacy1, eval_gramacy2],
                SurrogateKind::Dgp,
                5,
                25,
            ),
            BenchmarkName::MmIshigamiTrig => (
                vec![&MULTIMODAL3_DOMAIN, &ISHIGAMI_DOMAIN, &TRIG_DOMAIN],
                vec![eval_multimodal3, eval_ishigami, eval_trig],
                SurrogateKind::Gp,
                10,
                40,
            ),
        };
        Self {
            name,
            d: maps[0].len(),
            maps: maps.into_iter().map(AffineMap::new).collect(),
            functions,
            surrogate,
            n0,
            n_max,
            epsilon: crate::acquisition::DEFAULT_EPSILON,
        }
    }

    pub fn r(&self) -> usize {
        self.functions.len()
    }

    /// Response `r` at unit-cube input `u`.
    pub fn eval_unit(&self, r: usize, u: &[f64]) -> Result<f64> {
        (self.functions[r])(&self.maps[r].to_native(u))
    }

    /// Default configuration for this benchmark with the given run seed.
    pub fn config(&self, seed: u64) -> JclConfig {
        let mut c = JclConfig::new(vec![0.0; self.r()], self.n0, self.n_max, seed);
        c.epsilon = self.epsilon;
        c
    }
}

pub fn make_problem(spec: &BenchmarkSpec) -> Problem {
    let evaluators: Vec<Evaluator> = (0..spec.r())
        .map(|r| {
            let f = spec.functions[r];
            let map = spec.maps[r].clone();
            let name = spec.name;
            Arc::new(move |u: &[f64]| {
                f(&map.to_native(u)).unwrap_or_else(|e| panic!("{name} evaluator called off the unit cube: {e}"))
            }) as Evaluator
        })
        .collect();
    Problem { name: spec.name.to_string(), d: spec.d, evaluators, targets: vec![0.0; spec.r()], optimum: None }
}

/// Percentile by linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    if m == 0 {
        return f64::NAN;
    }
    let pos = p * (m - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub method: Method,
    pub n: usize,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

/// Per-`n` 10/50/90 percentiles of the best distance, carrying each run's
/// terminal value forward past an early stop. Failed runs are excluded.
pub fn summarize(runs: &[RunRecord], methods: &[Method], n_max: usize) -> Vec<PercentileRow> {
    let mut out = Vec::new();
    for &m in methods {
        let ok: Vec<&RunRecord> = runs.iter().filter(|r| r.method == m && r.status != Status::Failed).collect();
        if ok.is_empty() {
            continue;
        }
        for n in 1..=n_max {
            let mut vals: Vec<f64> = ok.iter().filter_map(|r| r.distance_at(n)).collect();
            if vals.is_empty() {
                continue;
            }
            vals.sort_by(f64::total_cmp);
            out.push(PercentileRow {
                method: m,
                n,
                p10: percentile(&vals, 0.1),
                p50: percentile(&vals, 0.5),
                p90: percentile(&vals, 0.9),
            });
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CampaignRun {
    pub method: Method,
    pub rep: usize,
    pub record: RunRecord,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub runs: Vec<CampaignRun>,
    pub summary: Vec<PercentileRow>,
}

impl CampaignResult {
    pub fn failures(&self) -> impl Iterator<Item = &CampaignRun> {
        self.runs.iter().filter(|r| r.record.status == Status::Failed)
    }

    pub fn median_at(&self, method: Method, n: usize) -> Option<f64> {
        self.summary.iter().find(|r| r.method == method && r.n == n).map(|r| r.p50)
    }
}

/// Seed of repetition `rep` of `method`; independent of which other methods run.
pub fn run_seed(base_seed: u64, method: Method, rep: usize) -> u64 {
    derive_seed(base_seed, method.name(), &[rep as u64])
}

/// Runs `reps` repetitions of every method. `base` supplies every setting
/// except the seed.
pub fn run_campaign(
    problem: &Problem,
    base: &JclConfig,
    kind: SurrogateKind,
    methods: &[Method],
    reps: usize,
    base_seed: u64,
) -> Result<CampaignResult> {
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    base.validate()?;
    let jobs: Vec<(Method, usize)> = methods.iter().flat_map(|&m| (0..reps).map(move |k| (m, k))).collect();
    let run = |&(method, rep): &(Method, usize)| -> Result<CampaignRun> {
        let mut c = base.clone();
        c.seed = run_seed(base_seed, method, rep);
        Ok(CampaignRun { method, rep, record: run_method(method, problem, &c, kind)? })
    };
    #[cfg(feature = "parallel")]
    let runs: Vec<CampaignRun> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let runs: Vec<CampaignRun> = jobs.iter().map(run).collect::<Result<_>>()?;
    let records: Vec<RunRecord> = runs.iter().map(|r| r.record.clone()).collect();
    let summary = summarize(&records, methods, base.n_max);
    Ok(CampaignResult { runs, summary })
}
