//! Bounded quasi-Newton minimization.
//!
//! A projected BFGS method: the search direction comes from an inverse
//! Hessian approximation restricted to the variables not pinned at a bound,
//! and every trial point is projected back onto the box.

/// Axis-aligned box constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self { lower, upper }
    }

    pub fn unit_cube(d: usize) -> Self {
        Self::new(vec![0.0; d], vec![1.0; d])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[i], self.upper[i]);
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Budget on objective evaluations, counting each call as `cost_per_call`.
    pub max_evals: usize,
    pub cost_per_call: usize,
    pub gradient_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self { max_evals: 200, cost_per_call: 1, gradient_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Central-difference gradient, switching to one-sided steps at the bounds.
pub fn numerical_gradient<F>(f: &mut F, x: &[f64], bounds: &BoxBounds, h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        let up = (x[i] + h).min(bounds.upper[i]);
        let dn = (x[i] - h).max(bounds.lower[i]);
        if up <= dn {
            continue;
        }
        probe[i] = up;
        let fu = f(&probe);
        probe[i] = dn;
        let fd = f(&probe);
        probe[i] = x[i];
        let gi = (fu - fd) / (up - dn);
        g[i] = if gi.is_finite() { gi } else { 0.0 };
    }
    g
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Minimizes `objective` (returning value and gradient) over `bounds` from `x0`.
pub fn minimize<F>(mut objective: F, x0: &[f64], bounds: &BoxBounds, opts: MinimizeOptions) -> Minimum
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut evals = opts.cost_per_call;
    let (f0, mut g) = objective(&x);
    let mut f = sanitize(f0);
    let mut h = identity(n);
    let mut converged = false;

    while evals + opts.cost_per_call <= opts.max_evals {
        // Variables pinned at a bound with the gradient pushing outward stay fixed.
        let free: Vec<bool> = (0..n)
            .map(|i| {
                !((x[i] <= bounds.lower[i] && g[i] > 0.0) || (x[i] >= bounds.upper[i] && g[i] < 0.0))
            })
            .collect();
        let pg = (0..n).filter(|&i| free[i]).map(|i| g[i].abs()).fold(0.0, f64::max);
        if pg < opts.gradient_tol || !f.is_finite() {
            converged = pg < opts.gradient_tol;
            break;
        }

        let mut dir = direction(&h, &g, &free);
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            h = identity(n);
            dir = direction(&h, &g, &free);
        }
        // Keep the first trial step inside a box-sized neighbourhood.
        let span = (0..n).map(|i| bounds.upper[i] - bounds.lower[i]).fold(0.0, f64::max);
        let dmax = dir.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut step = if dmax > span { span / dmax } else { 1.0 };

        let mut accepted = None;
        while evals + opts.cost_per_call <= opts.max_evals {
            let mut trial: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + step * b).collect();
            bounds.project(&mut trial);
            let moved: f64 = trial.iter().zip(&x).zip(&g).map(|((a, b), gi)| (a - b) * gi).sum();
            evals += opts.cost_per_call;
            let (ft, gt) = objective(&trial);
            let ft = sanitize(ft);
            if ft.is_finite() && ft <= f + 1e-4 * moved.min(0.0) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }

        match accepted {
            Some((xn, fnew, gn)) => {
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                let decrease = f - fnew;
                x = xn;
                g = gn;
                f = fnew;
                bfgs_update(&mut h, &s, &y);
                let smax = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
                if smax < 1e-12 || decrease.abs() <= 1e-14 * (1.0 + f.abs()) {
                    converged = true;
                    break;
                }
            }
            None => {
                if is_identity(&h) {
                    break;
                }
                h = identity(n);
            }
        }
    }

    Minimum { x, value: f, evaluations: evals, converged }
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn is_identity(h: &[Vec<f64>]) -> bool {
    h.iter().enumerate().all(|(i, row)| row.iter().enumerate().all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 }))
}

fn direction(h: &[Vec<f64>], g: &[f64], free: &[bool]) -> Vec<f64> {
    let n = g.len();
    (0..n)
        .map(|i| {
            if !free[i] {
                return 0.0;
            }
            -(0..n).filter(|&j| free[j]).map(|j| h[i][j] * g[j]).sum::<f64>()
        })
        .collect()
}

fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64]) {
    let n = s.len();
    let sy: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
    let ss: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
    let yy: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(sy > 1e-10 * ss * yy) {
        return;
    }
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i][j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
