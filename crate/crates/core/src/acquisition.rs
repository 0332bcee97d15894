//! Adaptive tolerance, joint within-tolerance probability, its multi-start
//! maximization and the exploit/explore decision.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dgp::McmcSettings;
use crate::error::{invalid, Error, Result};
use crate::gp::Dataset;
use crate::optim::{minimize, numerical_gradient, BoxBounds, MinimizeOptions};
use crate::surrogate::Surrogate;

pub const DEFAULT_W: f64 = 0.9;
pub const DEFAULT_P_STAR: f64 = 0.2;
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Finite-difference step for the local search.
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Dense scan draws `scan_multiplier * d` uniform points.
    pub scan_multiplier: usize,
    /// The best `top_multiplier * d` scan points seed local searches.
    pub top_multiplier: usize,
    /// Plus `fresh_multiplier * d` new uniform starts.
    pub fresh_multiplier: usize,
    /// Evaluation budget per local search.
    pub max_evals: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { scan_multiplier: 10_000, top_multiplier: 10, fresh_multiplier: 10, max_evals: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JclConfig {
    pub targets: Vec<f64>,
    pub w: f64,
    pub p_star: f64,
    pub epsilon: f64,
    pub n0: usize,
    pub n_max: usize,
    pub optimizer: OptimizerSettings,
    pub mcmc: McmcSettings,
    pub seed: u64,
}

impl JclConfig {
    pub fn new(targets: Vec<f64>, n0: usize, n_max: usize, seed: u64) -> Self {
        Self {
            targets,
            w: DEFAULT_W,
            p_star: DEFAULT_P_STAR,
            epsilon: DEFAULT_EPSILON,
            n0,
            n_max,
            optimizer: OptimizerSettings::default(),
            mcmc: McmcSettings::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets.is_empty() || self.targets.iter().any(|t| !t.is_finite()) {
            return Err(invalid("targets must be a non-empty vector of finite values"));
        }
        if !(self.w > 0.0 && self.w < 1.0) {
            return Err(invalid(format!("w = {} must lie in (0, 1)", self.w)));
        }
        if !(self.p_star > 0.0 && self.p_star < 1.0) {
            return Err(invalid(format!("p* = {} must lie in (0, 1)", self.p_star)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(invalid(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.n0 < 2 || self.n0 >= self.n_max {
            return Err(invalid(format!("need 2 <= n0 < n_max, got n0 = {}, n_max = {}", self.n0, self.n_max)));
        }
        let o = &self.optimizer;
        if o.scan_multiplier == 0 || o.top_multiplier == 0 || o.max_evals == 0 {
            return Err(invalid("optimizer settings must be positive"));
        }
        self.mcmc.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Initial,
    Exploit,
    Explore,
    Alternate,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Initial => "initial",
            Mode::Exploit => "exploit",
            Mode::Explore => "explore",
            Mode::Alternate => "alternate",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "initial" => Ok(Mode::Initial),
            "exploit" => Ok(Mode::Exploit),
            "explore" => Ok(Mode::Explore),
            "alternate" => Ok(Mode::Alternate),
            other => Err(invalid(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceState {
    pub t: f64,
    /// Observation attaining the minimum worst-case deviation.
    pub index: usize,
}

/// `t = w · min_i max_r |y_ir − τ_r|`.
pub fn compute_tolerance(data: &Dataset, targets: &[f64], w: f64) -> Result<ToleranceState> {
    if data.n() == 0 {
        return Err(Error::InvalidState("tolerance needs at least one observation".into()));
    }
    if targets.len() != data.r() {
        return Err(invalid(format!("{} targets for {} responses", targets.len(), data.r())));
    }
    if !(w > 0.0 && w < 1.0) {
        return Err(invalid(format!("w = {w} must lie in (0, 1)")));
    }
    let mut best = (f64::INFINITY, 0);
    for (i, y) in data.outputs().iter().enumerate() {
        let worst = y.iter().zip(targets).map(|(a, t)| (a - t).abs()).fold(0.0, f64::max);
        if worst < best.0 {
            best = (worst, i);
        }
    }
    Ok(ToleranceState { t: w * best.0, index: best.1 })
}

/// `Σ_r ln P(τ_r − t ≤ f_r(x) ≤ τ_r + t)` under independent surrogates.
pub fn joint_log_probability(models: &[Surrogate], x: &[f64], t: f64, targets: &[f64]) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid(format!("tolerance {t} must be non-negative")));
    }
    if models.len() != targets.len() {
        return Err(invalid(format!("{} surrogates for {} targets", models.len(), targets.len())));
    }
    let mut total = 0.0;
    for (m, &tau) in models.iter().zip(targets) {
        total += m.log_interval_probability(x, tau - t, tau + t)?;
    }
    Ok(total)
}

pub fn decide(jmax: f64, p_star: f64) -> Mode {
    // ties go to exploitation
    if jmax >= p_star {
        Mode::Exploit
    } else {
        Mode::Explore
    }
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    /// Every local search failed; `x` is the best dense-scan point.
    pub degraded: bool,
    /// Start points and their objective values, in start order.
    pub starts: Vec<(Vec<f64>, f64)>,
}

fn uniform_points<R: Rng + ?Sized>(m: usize, d: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect()
}

fn eval_all<F>(f: &F, pts: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pts.par_iter().map(|p| f(p)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        pts.iter().map(|p| f(p)).collect()
    }
}

fn finite_or_floor(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Multi-start bounded maximization of `f` over the unit cube.
///
/// Starts are the best `top·d` of `scan·d` uniform points, the previous
/// optimum when given, and `fresh·d` further uniform points. Each start runs a
/// projected quasi-Newton search on `-f` with central-difference gradients.
/// Ties between local optima go to the lowest start index.
pub fn multistart_maximize<F, R>(
    f: F,
    d: usize,
    previous: Option<&[f64]>,
    settings: &OptimizerSettings,
    rng: &mut R,
) -> Maximum
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    let scan = uniform_points(settings.scan_multiplier * d, d, rng);
    let fresh = uniform_points(settings.fresh_multiplier * d, d, rng);
    let scan_vals: Vec<f64> = eval_all(&f, &scan).into_iter().map(finite_or_floor).collect();
    let mut order: Vec<usize> = (0..scan.len()).collect();
    order.sort_by(|&a, &b| scan_vals[b].total_cmp(&scan_vals[a]).then(a.cmp(&b)));

    let mut starts: Vec<(Vec<f64>, f64)> =
        order.iter().take(settings.top_multiplier * d).map(|&i| (scan[i].clone(), scan_vals[i])).collect();
    if let Some(p) = previous.filter(|p| p.len() == d) {
        let mut p = p.to_vec();
        BoxBounds::unit_cube(d).project(&mut p);
        let v = finite_or_floor(f(&p));
        starts.push((p, v));
    }
    let fresh_vals = eval_all(&f, &fresh);
    starts.extend(fresh.into_iter().zip(fresh_vals.into_iter().map(finite_or_floor)));

    let bounds = BoxBounds::unit_cube(d);
    let opts = MinimizeOptions { max_evals: settings.max_evals, cost_per_call: 2 * d + 1, ..Default::default() };
    let local = |(x0, v0): &(Vec<f64>, f64)| -> (Vec<f64>, f64) {
        if !v0.is_finite() {
            return (x0.clone(), *v0);
        }
        let mut neg = |x: &[f64]| -finite_or_floor(f(x));
        let res = minimize(
            |x| {
                let v = neg(x);
                let g = numerical_gradient(&mut neg, x, &bounds, FD_STEP);
                (v, g)
            },
            x0,
            &bounds,
            opts,
        );
        let v = -res.value;
        if v.is_finite() && v >= *v0 {
            (res.x, v)
        } else {
            (x0.clone(), *v0)
        }
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(Vec<f64>, f64)> = {
        use rayon::prelude::*;
        starts.par_iter().map(local).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(Vec<f64>, f64)> = starts.iter().map(local).collect();

    let mut best: Option<usize> = None;
    for (i, (_, v)) in results.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| *v > results[b].1) {
            best = Some(i);
        }
    }
    match best {
        Some(i) => {
            let (mut x, value) = results[i].clone();
            bounds.project(&mut x);
            Maximum { x, value, degraded: false, starts }
        }
        None => {
            let i = order[0];
            Maximum { x: scan[i].clone(), value: scan_vals[i], degraded: true, starts }
        }
    }
}

#[derive(Debug, Clone)]
pub struct JointMaximum {
    pub x: Vec<f64>,
    /// Maximum joint probability found (not its log).
    pub jmax: f64,
    pub log_jmax: f64,
    pub degraded: bool,
    pub starts: Vec<(Vec<f64>, f64)>,
}

/// Maximizes the joint log-probability over the unit cube.
pub fn maximize_joint_probability<R: Rng + ?Sized>(
    models: &[Surrogate],
    t: f64,
    targets: &[f64],
    previous: Option<&[f64]>,
    settings: &OptimizerSettings,
    d: usize,
    rng: &mut R,
) -> Result<JointMaximum> {
    // validate once so the objective can treat errors as -inf
    joint_log_probability(models, &vec![0.5; d], t, targets)?;
    let obj = |x: &[f64]| joint_log_probability(models, x, t, targets).unwrap_or(f64::NEG_INFINITY);
    let m = multistart_maximize(obj, d, previous, settings, rng);
    Ok(JointMaximum { jmax: m.value.exp(), log_jmax: m.value, x: m.x, degraded: m.degraded, starts: m.starts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::FittedGp;
    use crate::kernel::GpHyperparameters;
    use crate::normal::norm_cdf;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(ys: Vec<Vec<f64>>) -> Dataset {
        let xs = (0..ys.len()).map(|i| vec![i as f64 / 10.0]).collect();
        Dataset::new(xs, ys).unwrap()
    }

    #[test]
    fn tolerance_arithmetic() {
        let mut d = data(vec![vec![0.5, -1.2]]);
        let t = compute_tolerance(&d, &[0.0, 0.0], 0.9).unwrap();
        assert!((t.t - 1.08).abs() < 1e-15 && t.index == 0);
        d.push(vec![0.7], vec![0.1, 0.2]).unwrap();
        let t = compute_tolerance(&d, &[0.0, 0.0], 0.9).unwrap();
        assert!((t.t - 0.18).abs() < 1e-15 && t.index == 1);
        d.push(vec![0.9], vec![0.0, 0.0]).unwrap();
        assert_eq!(compute_tolerance(&d, &[0.0, 0.0], 0.9).unwrap().t, 0.0);
        assert!(compute_tolerance(&Dataset::empty(1, 2), &[0.0, 0.0], 0.9).is_err());
    }

    #[test]
    fn decision_boundary_goes_to_exploit() {
        assert_eq!(decide(0.19, 0.2), Mode::Explore);
        assert_eq!(decide(0.2, 0.2), Mode::Exploit);
        assert_eq!(decide(0.9, 0.2), Mode::Exploit);
    }

    fn fixed_gp(xs: &[f64], ys: &[f64], l: f64) -> Surrogate {
        let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Surrogate::Gp(FittedGp::with_hyperparameters(&inputs, ys, GpHyperparameters::isotropic(1, l, 1.0).unwrap()).unwrap())
    }

    #[test]
    fn joint_probability_is_a_product() {
        let a = fixed_gp(&[0.1, 0.8], &[0.3, -0.4], 0.3);
        let b = fixed_gp(&[0.2, 0.6], &[1.0, 0.2], 0.5);
        let x = [0.45];
        let (t, tau) = (0.25, [0.1, -0.2]);
        let direct: f64 = [(&a, tau[0]), (&b, tau[1])]
            .iter()
            .map(|(m, c)| {
                let s = m.predict(&x);
                norm_cdf((c + t - s.mean) / s.sd) - norm_cdf((c - t - s.mean) / s.sd)
            })
            .product();
        let lj = joint_log_probability(&[a.clone(), b], &x, t, &tau).unwrap();
        assert!((lj.exp() - direct).abs() < 1e-10);
        let single = joint_log_probability(std::slice::from_ref(&a), &x, t, &tau[..1]).unwrap();
        assert_eq!(single, a.log_interval_probability(&x, tau[0] - t, tau[0] + t).unwrap());
    }

    #[test]
    fn maximizer_dominates_its_starts_and_is_deterministic() {
        let m = fixed_gp(&[0.1, 0.5, 0.9], &[1.0, -1.0, 0.5], 0.2);
        let settings = OptimizerSettings { scan_multiplier: 500, ..Default::default() };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            maximize_joint_probability(std::slice::from_ref(&m), 0.1, &[0.0], Some(&[0.3]), &settings, 1, &mut rng)
                .unwrap()
        };
        let a = run(4);
        assert!(!a.degraded);
        assert!((0.0..=1.0).contains(&a.x[0]) && a.jmax <= 1.0);
        assert!(a.starts.iter().all(|(_, v)| a.log_jmax >= *v));
        assert_eq!(a.starts.len(), 10 + 1 + 10);
        let b = run(4);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn single_exact_hit_keeps_probability_below_one() {
        let m = fixed_gp(&[0.4], &[0.0], 0.3);
        let settings = OptimizerSettings { scan_multiplier: 1000, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = maximize_joint_probability(&[m], 1e-4, &[0.0], None, &settings, 1, &mut rng).unwrap();
        assert!(r.jmax < 1.0);
    }

    #[test]
    fn flat_objective_falls_back_inside_the_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let settings = OptimizerSettings { scan_multiplier: 50, ..Default::default() };
        let m = multistart_maximize(|_: &[f64]| f64::NEG_INFINITY, 2, None, &settings, &mut rng);
        assert!(m.degraded);
        assert!(m.x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn config_validation() {
        let mut c = JclConfig::new(vec![0.0, 0.0], 5, 25, 1);
        assert!(c.validate().is_ok());
        c.w = 1.0;
        assert!(c.validate().is_err());
        c.w = 0.9;
        c.n0 = 25;
        assert!(c.validate().is_err());
        for m in [Mode::Initial, Mode::Exploit, Mode::Explore, Mode::Alternate] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
    }
}
