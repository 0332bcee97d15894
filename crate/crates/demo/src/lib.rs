//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Everything returns JSON strings so the page needs no extra glue and the
//! same methods can be exercised natively in tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use jcl::acquisition::{compute_tolerance, joint_log_probability};
use jcl::benchmarks::{make_problem, BenchmarkName, BenchmarkSpec};
use jcl::design::StopReason;
use jcl::explore::{delaunay, select_exploration, Provenance};
use jcl::seed::{derive_seed, rng_from};
use jcl::surrogate::{fit_all, Surrogate};
use jcl::{best_distance, JclSession, Mode, Problem, Step, SurrogateKind};

const MAX_GRID: usize = 200;

#[derive(Serialize)]
struct StepView {
    done: bool,
    reason: Option<StopReason>,
    n: usize,
    mode: Option<Mode>,
    x: Option<Vec<f64>>,
    y: Option<Vec<f64>>,
    t: Option<f64>,
    jmax: Option<f64>,
    d_n: Option<f64>,
}

#[derive(Serialize)]
struct SurfaceView {
    grid: usize,
    /// Tolerance the surface is evaluated at.
    t: f64,
    /// `log10 J` per cell, row-major with `x2` varying slowest.
    log10_j: Vec<f64>,
    /// True responses per cell, one array per response.
    truth: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ExploreView {
    simplices: Vec<Vec<usize>>,
    candidates: Vec<Vec<f64>>,
    hull: Vec<bool>,
    /// Per-candidate predictive sd of each response.
    sds: Vec<Vec<f64>>,
    front: Vec<usize>,
    chosen: usize,
}

#[derive(Serialize)]
struct ObservationView {
    x: Vec<f64>,
    y: Vec<f64>,
    mode: Mode,
}

#[derive(Serialize)]
struct ErrorView {
    error: String,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| format!("{{\"error\":\"{e}\"}}"))
}

fn error_json(e: impl std::fmt::Display) -> String {
    to_json(&ErrorView { error: e.to_string() })
}

/// A jCL run on a two-dimensional benchmark, advanced one evaluation at a time.
#[wasm_bindgen]
pub struct JclDemo {
    problem: Problem,
    session: JclSession,
    modes: Vec<Mode>,
    seed: u64,
}

impl JclDemo {
    pub fn create(problem: &str, seed: u64) -> Result<JclDemo, String> {
        let name: BenchmarkName = problem.parse().map_err(|e: jcl::Error| e.to_string())?;
        let spec = BenchmarkSpec::get(name);
        if spec.d != 2 {
            return Err(format!("{name} has {} inputs; the demo draws two-dimensional problems only", spec.d));
        }
        // plain GPs keep every step interactive, also for double-gramacy
        let session = JclSession::new(spec.config(seed), SurrogateKind::Gp, spec.d).map_err(|e| e.to_string())?;
        Ok(JclDemo { problem: make_problem(&spec), session, modes: Vec::new(), seed })
    }

    fn models(&self) -> Result<(Vec<Surrogate>, f64), String> {
        let data = &self.session.data;
        let c = &self.session.config;
        if data.n() < 2 {
            return Err("need at least two observations".into());
        }
        let models = fit_all(SurrogateKind::Gp, data, c.mcmc, derive_seed(self.seed, "demo-fit", &[data.n() as u64])).map_err(|e| e.to_string())?;
        let t = compute_tolerance(data, &c.targets, c.w).map_err(|e| e.to_string())?.t;
        Ok((models, t))
    }

    fn try_step(&mut self) -> Result<StepView, String> {
        let n = self.session.data.n();
        let sg = match self.session.suggest().map_err(|e| e.to_string())? {
            Step::Done(reason) => {
                return Ok(StepView { done: true, reason: Some(reason), n, mode: None, x: None, y: None, t: None, jmax: None, d_n: None })
            }
            Step::Suggest(s) => s,
        };
        let y = self.problem.evaluate(&sg.x);
        self.session.tell(sg.x.clone(), y.clone()).map_err(|e| e.to_string())?;
        self.modes.push(sg.mode);
        let d_n = best_distance(self.session.data.outputs(), &self.session.config.targets).map_err(|e| e.to_string())?;
        Ok(StepView {
            done: false,
            reason: None,
            n: self.session.data.n(),
            mode: Some(sg.mode),
            x: Some(sg.x),
            y: Some(y),
            t: sg.t,
            jmax: sg.jmax,
            d_n: Some(d_n),
        })
    }

    fn try_surface(&self, grid: usize) -> Result<SurfaceView, String> {
        if !(2..=MAX_GRID).contains(&grid) {
            return Err(format!("grid must be between 2 and {MAX_GRID}"));
        }
        let (models, t) = self.models()?;
        let targets = &self.session.config.targets;
        let mut log10_j = Vec::with_capacity(grid * grid);
        let mut truth = vec![Vec::with_capacity(grid * grid); targets.len()];
        for j in 0..grid {
            for i in 0..grid {
                let x = [i as f64 / (grid - 1) as f64, j as f64 / (grid - 1) as f64];
                let lj = joint_log_probability(&models, &x, t, targets).map_err(|e| e.to_string())?;
                log10_j.push(lj / std::f64::consts::LN_10);
                for (r, y) in self.problem.evaluate(&x).into_iter().enumerate() {
                    truth[r].push(y);
                }
            }
        }
        Ok(SurfaceView { grid, t, log10_j, truth })
    }

    fn try_exploration(&self) -> Result<ExploreView, String> {
        let (models, _) = self.models()?;
        let data = &self.session.data;
        let simplices = if data.n() > data.d() { delaunay(data.inputs()).map(|t| t.simplices).unwrap_or_default() } else { Vec::new() };
        let mut rng = rng_from(derive_seed(self.seed, "demo-explore", &[data.n() as u64]));
        let e = select_exploration(&models, data, &mut rng);
        Ok(ExploreView {
            simplices,
            hull: e.candidates.provenance.iter().map(|p| matches!(p, Provenance::Hull)).collect(),
            candidates: e.candidates.points,
            sds: e.candidates.criteria,
            front: e.front,
            chosen: e.chosen,
        })
    }
}

#[wasm_bindgen]
impl JclDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(problem: &str, seed: u64) -> Result<JclDemo, JsError> {
        Self::create(problem, seed).map_err(|e| JsError::new(&e))
    }

    /// Evaluates the next suggested point and returns what happened as JSON.
    pub fn step(&mut self) -> String {
        self.try_step().map(|v| to_json(&v)).unwrap_or_else(error_json)
    }

    /// Joint probability of hitting every target within the current
    /// tolerance, on a `grid x grid` lattice, with the true responses.
    pub fn surface(&self, grid: usize) -> String {
        self.try_surface(grid).map(|v| to_json(&v)).unwrap_or_else(error_json)
    }

    /// Triangulation, candidate set and Pareto front an exploration step draws from.
    pub fn exploration(&self) -> String {
        self.try_exploration().map(|v| to_json(&v)).unwrap_or_else(error_json)
    }

    /// All observations so far with the mode that produced each.
    pub fn observations(&self) -> String {
        let d = &self.session.data;
        let rows: Vec<ObservationView> = d
            .inputs()
            .iter()
            .zip(d.outputs())
            .zip(&self.modes)
            .map(|((x, y), m)| ObservationView { x: x.clone(), y: y.clone(), mode: *m })
            .collect();
        to_json(&rows)
    }
}
