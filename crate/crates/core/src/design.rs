//! Full sequential designs: the joint contour-location loop (driven through
//! an ask-tell session) and the three competitor designs.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    compute_tolerance, decide, maximize_joint_probability, multistart_maximize, JclConfig, Mode,
};
use crate::error::{invalid, Error, Result};
use crate::explore::select::{exploration_candidates, pick_from_front, MIN_SEPARATION};
use crate::explore::select_exploration;
use crate::gp::Dataset;
use crate::lhs::{maximin_lhs, squared_distance, MAXIMIN_TRIES};
use crate::seed::{derive_seed, rng_from};
use crate::surrogate::{fit_all, Surrogate, SurrogateKind};

pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `R` deterministic functions on `[0,1]^d` with target values.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub d: usize,
    pub evaluators: Vec<Evaluator>,
    pub targets: Vec<f64>,
    pub optimum: Option<Vec<f64>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("r", &self.evaluators.len())
            .field("targets", &self.targets)
            .finish()
    }
}

impl Problem {
    pub fn r(&self) -> usize {
        self.evaluators.len()
    }

    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.evaluators.iter().map(|f| f(x)).collect()
    }
}

/// `min_i Σ_r (y_ir − τ_r)²`.
pub fn best_distance(outputs: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::InvalidState("distance needs at least one observation".into()));
    }
    Ok(outputs.iter().map(|y| sq_dist(y, targets)).fold(f64::INFINITY, f64::min))
}

fn sq_dist(y: &[f64], targets: &[f64]) -> f64 {
    y.iter().zip(targets).map(|(a, t)| (a - t) * (a - t)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "jcl")]
    Jcl,
    #[serde(rename = "lhs")]
    Lhs,
    #[serde(rename = "alt-entropy")]
    AltEntropy,
    #[serde(rename = "alt-pareto")]
    AltPareto,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Jcl, Method::Lhs, Method::AltEntropy, Method::AltPareto];

    pub fn name(self) -> &'static str {
        match self {
            Method::Jcl => "jcl",
            Method::Lhs => "lhs",
            Method::AltEntropy => "alt-entropy",
            Method::AltPareto => "alt-pareto",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown method '{s}' (expected jcl, lhs, alt-entropy or alt-pareto)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    BudgetExhausted,
    EpsilonReached,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub mode: Mode,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Tolerance used to pick this point (absent for initial and competitor rows).
    pub t_n: Option<f64>,
    pub jmax: Option<f64>,
    pub d_n: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub status: Status,
    pub failure: Option<String>,
}

impl RunRecord {
    pub fn final_distance(&self) -> Option<f64> {
        self.rows.last().map(|r| r.d_n)
    }

    /// Copy with every wall-clock field zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> RunRecord {
        let mut r = self.clone();
        r.rows.iter_mut().for_each(|row| row.wall_ms = 0.0);
        r
    }

    /// Best distance after `n` observations, carrying the last value forward.
    pub fn distance_at(&self, n: usize) -> Option<f64> {
        self.rows.iter().take_while(|r| r.n <= n).last().map(|r| r.d_n)
    }
}

#[cfg(not(target_arch = "wasm32"))]
struct Stopwatch(std::time::Instant);

#[cfg(not(target_arch = "wasm32"))]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }

    fn ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

#[cfg(target_arch = "wasm32")]
struct Stopwatch;

#[cfg(target_arch = "wasm32")]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch
    }

    fn ms(&self) -> f64 {
        0.0
    }
}

fn separated(x: &[f64], data: &Dataset) -> bool {
    data.inputs().iter().all(|xi| squared_distance(xi, x) >= MIN_SEPARATION * MIN_SEPARATION)
}

fn initial_design(config: &JclConfig, d: usize, method: Method, n: usize) -> Vec<Vec<f64>> {
    let mut rng = rng_from(derive_seed(config.seed, method.name(), &[u64::MAX]));
    maximin_lhs(n, d, MAXIMIN_TRIES, &mut rng)
}

/// Why a session will not suggest further points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Epsilon,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub x: Vec<f64>,
    pub mode: Mode,
    pub jmax: Option<f64>,
    pub t: Option<f64>,
    /// Maximizer of the joint probability, reused as a start next time.
    pub optimum: Option<Vec<f64>>,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Suggest(Suggestion),
    Done(StopReason),
}

/// Ask-tell state machine for the joint contour-location design.
///
/// All randomness is derived from the configured seed and the current number
/// of observations, so a session restored from disk suggests exactly what the
/// in-memory one would.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JclSession {
    pub config: JclConfig,
    pub kind: SurrogateKind,
    pub data: Dataset,
    pub initial: Vec<Vec<f64>>,
    pub previous_optimum: Option<Vec<f64>>,
    pub pending: Option<Suggestion>,
}

impl JclSession {
    pub fn new(config: JclConfig, kind: SurrogateKind, d: usize) -> Result<Self> {
        config.validate()?;
        if d == 0 {
            return Err(invalid("input dimension must be positive"));
        }
        let initial = initial_design(&config, d, Method::Jcl, config.n0);
        let data = Dataset::empty(d, config.targets.len());
        Ok(Self { config, kind, data, initial, previous_optimum: None, pending: None })
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    pub fn stop_reason(&self) -> Option<StopReason> {
        if let Ok(dn) = best_distance(self.data.outputs(), &self.config.targets) {
            if dn < self.config.epsilon {
                return Some(StopReason::Epsilon);
            }
        }
        if self.data.n() >= self.config.n_max {
            return Some(StopReason::Budget);
        }
        None
    }

    /// Next point to evaluate. Repeated calls without an intervening
    /// [`Self::tell`] return the same suggestion.
    pub fn suggest(&mut self) -> Result<Step> {
        if let Some(reason) = self.stop_reason() {
            return Ok(Step::Done(reason));
        }
        if let Some(p) = &self.pending {
            return Ok(Step::Suggest(p.clone()));
        }
        let s = self.compute_suggestion()?;
        self.pending = Some(s.clone());
        Ok(Step::Suggest(s))
    }

    fn compute_suggestion(&self) -> Result<Suggestion> {
        let n = self.data.n();
        if n < self.config.n0 {
            let x = self.initial[n].clone();
            if separated(&x, &self.data) {
                return Ok(Suggestion { x, mode: Mode::Initial, jmax: None, t: None, optimum: None, degraded: false });
            }
        }
        let c = &self.config;
        let d = self.d();
        let models = fit_all(self.kind, &self.data, c.mcmc, derive_seed(c.seed, "jcl-fit", &[n as u64]))?;
        let tol = compute_tolerance(&self.data, &c.targets, c.w)?;
        let mut rng = rng_from(derive_seed(c.seed, "jcl-acquire", &[n as u64]));
        let best = maximize_joint_probability(
            &models,
            tol.t,
            &c.targets,
            self.previous_optimum.as_deref(),
            &c.optimizer,
            d,
            &mut rng,
        )?;
        let mut mode = decide(best.jmax, c.p_star);
        let x = if mode == Mode::Exploit && separated(&best.x, &self.data) {
            best.x.clone()
        } else {
            mode = Mode::Explore;
            select_exploration(&models, &self.data, &mut rng).x
        };
        Ok(Suggestion { x, mode, jmax: Some(best.jmax), t: Some(tol.t), optimum: Some(best.x), degraded: best.degraded })
    }

    /// Records the responses observed at `x`.
    pub fn tell(&mut self, x: Vec<f64>, y: Vec<f64>) -> Result<()> {
        self.data.push(x, y)?;
        if let Some(p) = self.pending.take() {
            if p.optimum.is_some() {
                self.previous_optimum = p.optimum;
            }
        }
        Ok(())
    }
}

struct Recorder {
    record: RunRecord,
    targets: Vec<f64>,
    best: f64,
}

impl Recorder {
    fn new(method: Method, seed: u64, targets: &[f64]) -> Self {
        Self {
            record: RunRecord { method, seed, rows: Vec::new(), status: Status::BudgetExhausted, failure: None },
            targets: targets.to_vec(),
            best: f64::INFINITY,
        }
    }

    fn push(&mut self, mode: Mode, x: Vec<f64>, y: Vec<f64>, t_n: Option<f64>, jmax: Option<f64>, wall_ms: f64) -> f64 {
        self.best = self.best.min(sq_dist(&y, &self.targets));
        let n = self.record.rows.len() + 1;
        self.record.rows.push(TraceRow { n, mode, x, y, t_n, jmax, d_n: self.best, wall_ms });
        self.best
    }

    fn finish(mut self, status: Status) -> RunRecord {
        self.record.status = status;
        self.record
    }

    fn fail(mut self, e: Error) -> RunRecord {
        self.record.status = Status::Failed;
        self.record.failure = Some(e.to_string());
        self.record
    }
}

fn check_problem(problem: &Problem, config: &JclConfig) -> Result<()> {
    config.validate()?;
    if problem.targets.len() != problem.r() || config.targets.len() != problem.r() {
        return Err(invalid("targets do not match the number of responses"));
    }
    Ok(())
}

/// Joint contour location with the given surrogate family.
pub fn run_jcl(problem: &Problem, config: &JclConfig, kind: SurrogateKind) -> Result<RunRecord> {
    check_problem(problem, config)?;
    let mut session = JclSession::new(config.clone(), kind, problem.d)?;
    let mut rec = Recorder::new(Method::Jcl, config.seed, &config.targets);
    loop {
        let clock = Stopwatch::start();
        let s = match session.suggest() {
            Ok(Step::Suggest(s)) => s,
            Ok(Step::Done(StopReason::Epsilon)) => return Ok(rec.finish(Status::EpsilonReached)),
            Ok(Step::Done(StopReason::Budget)) => return Ok(rec.finish(Status::BudgetExhausted)),
            Err(e) => return Ok(rec.fail(e)),
        };
        let y = problem.evaluate(&s.x);
        session.tell(s.x.clone(), y.clone())?;
        rec.push(s.mode, s.x, y, s.t, s.jmax, clock.ms());
    }
}

/// Space-filling baseline: one maximin LHS of the full budget, evaluated in
/// random order.
pub fn run_lhs(problem: &Problem, config: &JclConfig) -> Result<RunRecord> {
    check_problem(problem, config)?;
    let mut pts = initial_design(config, problem.d, Method::Lhs, config.n_max);
    let mut rng = rng_from(derive_seed(config.seed, Method::Lhs.name(), &[0]));
    pts.shuffle(&mut rng);
    let mut rec = Recorder::new(Method::Lhs, config.seed, &config.targets);
    for x in pts {
        let clock = Stopwatch::start();
        let y = problem.evaluate(&x);
        if rec.push(Mode::Initial, x, y, None, None, clock.ms()) < config.epsilon {
            return Ok(rec.finish(Status::EpsilonReached));
        }
    }
    Ok(rec.finish(Status::BudgetExhausted))
}

/// Binary classification entropy of `p`, zero at the endpoints.
pub fn entropy(p: f64) -> f64 {
    let mut e = 0.0;
    if p > 0.0 && p < 1.0 {
        e = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
    }
    if e.is_finite() {
        e.max(0.0)
    } else {
        0.0
    }
}

/// Entropy of the event `f_r(x) < τ_r` under surrogate `m`.
pub fn contour_entropy(m: &Surrogate, x: &[f64], target: f64) -> f64 {
    m.probability_below(x, target).map(entropy).unwrap_or(0.0)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Alternating {
    Entropy,
    Pareto,
}

fn run_alternating(
    problem: &Problem,
    config: &JclConfig,
    kind: SurrogateKind,
    which: Alternating,
) -> Result<RunRecord> {
    check_problem(problem, config)?;
    let method = match which {
        Alternating::Entropy => Method::AltEntropy,
        Alternating::Pareto => Method::AltPareto,
    };
    let tag = method.name();
    let d = problem.d;
    let mut rec = Recorder::new(method, config.seed, &config.targets);
    let mut data = Dataset::empty(d, problem.r());
    for x in initial_design(config, d, method, config.n0) {
        let clock = Stopwatch::start();
        let y = problem.evaluate(&x);
        data.push(x.clone(), y.clone())?;
        if rec.push(Mode::Initial, x, y, None, None, clock.ms()) < config.epsilon {
            return Ok(rec.finish(Status::EpsilonReached));
        }
    }
    let mut previous: Option<Vec<f64>> = None;
    while data.n() < config.n_max {
        let clock = Stopwatch::start();
        let n = data.n();
        let k = n - config.n0;
        let r = k % problem.r();
        let tau = config.targets[r];
        let fit_seed = derive_seed(config.seed, tag, &[n as u64, 0]);
        let model = match Surrogate::fit(kind, &data, r, config.mcmc, fit_seed) {
            Ok(m) => m,
            Err(e) => return Ok(rec.fail(e)),
        };
        let mut rng = rng_from(derive_seed(config.seed, tag, &[n as u64, 1]));
        let x = match which {
            Alternating::Entropy => {
                let best = multistart_maximize(
                    |x: &[f64]| contour_entropy(&model, x, tau),
                    d,
                    previous.as_deref(),
                    &config.optimizer,
                    &mut rng,
                );
                previous = Some(best.x.clone());
                if separated(&best.x, &data) {
                    best.x
                } else {
                    // entropy collapses at observed points; take the best remote candidate
                    let cands = exploration_candidates(&data, &mut rng);
                    let scores: Vec<f64> = cands.points.iter().map(|p| contour_entropy(&model, p, tau)).collect();
                    let i = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
                    cands.points[i].clone()
                }
            }
            Alternating::Pareto => {
                let cands = exploration_candidates(&data, &mut rng);
                let crit: Vec<Vec<f64>> = cands
                    .points
                    .iter()
                    .map(|p| vec![contour_entropy(&model, p, tau), model.predict(p).sd])
                    .collect();
                let (_, i) = pick_from_front(&crit, &mut rng);
                cands.points[i].clone()
            }
        };
        let y = problem.evaluate(&x);
        data.push(x.clone(), y.clone())?;
        if rec.push(Mode::Alternate, x, y, None, None, clock.ms()) < config.epsilon {
            return Ok(rec.finish(Status::EpsilonReached));
        }
    }
    Ok(rec.finish(Status::BudgetExhausted))
}

/// Alternates single-response contour location by maximizing the entropy of
/// the targeted response's sign.
pub fn run_alternating_entropy(problem: &Problem, config: &JclConfig, kind: SurrogateKind) -> Result<RunRecord> {
    run_alternating(problem, config, kind, Alternating::Entropy)
}

/// Alternates single-response acquisitions drawn from the Pareto front of
/// (entropy, posterior sd) over triangulation candidates.
pub fn run_alternating_pareto(problem: &Problem, config: &JclConfig, kind: SurrogateKind) -> Result<RunRecord> {
    run_alternating(problem, config, kind, Alternating::Pareto)
}

pub fn run_method(method: Method, problem: &Problem, config: &JclConfig, kind: SurrogateKind) -> Result<RunRecord> {
    match method {
        Method::Jcl => run_jcl(problem, config, kind),
        Method::Lhs => run_lhs(problem, config),
        Method::AltEntropy => run_alternating_entropy(problem, config, kind),
        Method::AltPareto => run_alternating_pareto(problem, config, kind),
    }
}
