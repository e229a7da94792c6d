//! Dense BFGS minimizer with a backtracking Armijo line search.
//!
//! Problems here are tiny (at most `2n - 1` coordinates for a team of `n`),
//! so the inverse Hessian approximation is kept as a full matrix.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    /// Stop once an accepted step lowers the objective by less than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Largest allowed change of any coordinate in one step.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 2000, max_step: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, where `f(x, grad)` returns the objective and writes its
/// gradient into `grad`. A non-finite objective is treated as infeasible.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; dim];
    let mut value = f(&x, &mut g);
    if !value.is_finite() {
        return Minimum { x, value, iterations: 0, converged: false };
    }

    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..dim {
            h[i * dim + i] = 1.0;
        }
    };
    let mut h = vec![0.0; dim * dim];
    identity(&mut h);

    let mut trial = vec![0.0; dim];
    let mut g_trial = vec![0.0; dim];
    let mut direction = vec![0.0; dim];
    let mut s = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut hy = vec![0.0; dim];

    for iteration in 1..=opts.max_iterations {
        if g.iter().all(|v| v.abs() < 1e-12) {
            return Minimum { x, value, iterations: iteration - 1, converged: true };
        }
        for i in 0..dim {
            direction[i] = -(0..dim).map(|j| h[i * dim + j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&g, &direction);
        if slope >= 0.0 {
            identity(&mut h);
            direction.iter_mut().zip(&g).for_each(|(p, gi)| *p = -gi);
            slope = dot(&g, &direction);
        }
        let longest = direction.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        let mut alpha = if longest > opts.max_step { opts.max_step / longest } else { 1.0 };

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..dim {
                trial[i] = x[i] + alpha * direction[i];
            }
            let v = f(&trial, &mut g_trial);
            if v.is_finite() && v <= value + ARMIJO * alpha * slope {
                accepted = Some(v);
                break;
            }
            alpha *= 0.5;
        }
        let Some(new_value) = accepted else {
            // No descent along the search direction at machine precision.
            return Minimum { x, value, iterations: iteration, converged: true };
        };

        for i in 0..dim {
            s[i] = trial[i] - x[i];
            y[i] = g_trial[i] - g[i];
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            for i in 0..dim {
                hy[i] = (0..dim).map(|j| h[i * dim + j] * y[j]).sum();
            }
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..dim {
                for j in 0..dim {
                    h[i * dim + j] += rho * ((1.0 + rho * yhy) * s[i] * s[j]
                        - hy[i] * s[j]
                        - s[i] * hy[j]);
                }
            }
        }

        let improvement = value - new_value;
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        value = new_value;
        if improvement < opts.tolerance {
            return Minimum { x, value, iterations: iteration, converged: true };
        }
    }
    Minimum { x, value, iterations: opts.max_iterations, converged: false }
}
