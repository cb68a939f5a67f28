//! Limited-memory quasi-Newton minimization of `f(x) + c1 * ||x||_1` for a
//! smooth `f`.
//!
//! With `c1 = 0` this is plain L-BFGS with a backtracking Armijo line search.
//! With `c1 > 0` it follows the orthant-wise scheme: steer by the
//! pseudo-gradient of the full objective, keep the search direction in the
//! orthant it points into, and project every trial point back onto the
//! current orthant so coordinates crossing zero land exactly on zero.

use std::collections::VecDeque;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub c1: f64,
    pub max_iterations: usize,
    /// Stop once `(f[k - period] - f[k]) / max(|f[k]|, 1)` drops below this.
    pub tolerance: f64,
    /// Number of iterations the relative improvement is measured over.
    pub period: usize,
    pub memory: usize,
    pub max_line_search: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            c1: 0.0,
            max_iterations: 200,
            tolerance: 1e-5,
            period: 10,
            memory: 6,
            max_line_search: 40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// No descent direction left (pseudo-gradient vanished).
    Stationary,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Regularized objective after each accepted iteration, starting point first.
    pub history: Vec<f64>,
    pub termination: Termination,
}

const ARMIJO: f64 = 1e-4;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn l1(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

fn pseudo_gradient(x: &[f64], g: &[f64], c1: f64, out: &mut [f64]) {
    if c1 == 0.0 {
        out.copy_from_slice(g);
        return;
    }
    for ((pg, &xi), &gi) in out.iter_mut().zip(x).zip(g) {
        *pg = if xi > 0.0 {
            gi + c1
        } else if xi < 0.0 {
            gi - c1
        } else if gi + c1 < 0.0 {
            gi + c1
        } else if gi - c1 > 0.0 {
            gi - c1
        } else {
            0.0
        };
    }
}

/// Two-loop recursion: returns `-H * pg`.
fn direction(pg: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = pg.iter().map(|v| -v).collect();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

/// Minimizes `f(x) + c1 * ||x||_1` starting from `x0`.
///
/// `eval` returns the value and gradient of the smooth part. The regularized
/// objective never increases from one accepted iterate to the next.
pub fn minimize<F>(mut eval: F, x0: Vec<f64>, config: &OptimizerConfig) -> Result<OptimizeOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let c1 = config.c1;
    let n = x0.len();
    let mut x = x0;
    let (fx, mut g) = eval(&x)?;
    let mut obj = fx + c1 * l1(&x);
    let mut pg = vec![0.0; n];
    pseudo_gradient(&x, &g, c1, &mut pg);

    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(config.memory);
    let mut trace = vec![obj];
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    while iterations < config.max_iterations {
        if pg.iter().all(|&v| v == 0.0) {
            termination = Termination::Stationary;
            break;
        }
        let mut d = direction(&pg, &history);
        if c1 > 0.0 {
            // drop components that disagree with steepest descent of the full objective
            for (di, &pgi) in d.iter_mut().zip(&pg) {
                if *di * pgi >= 0.0 {
                    *di = 0.0;
                }
            }
        }
        if dot(&d, &pg) >= 0.0 {
            // lost descent property, restart from steepest descent
            history.clear();
            d = pg.iter().map(|v| -v).collect();
        }

        let orthant: Vec<f64> = if c1 > 0.0 {
            x.iter()
                .zip(&pg)
                .map(|(&xi, &pgi)| if xi != 0.0 { sign(xi) } else { -sign(pgi) })
                .collect()
        } else {
            Vec::new()
        };

        let mut step = if history.is_empty() {
            1.0 / dot(&d, &d).sqrt()
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..config.max_line_search {
            let mut trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            if c1 > 0.0 {
                for (ti, &oi) in trial.iter_mut().zip(&orthant) {
                    if sign(*ti) != oi {
                        *ti = 0.0;
                    }
                }
            }
            let (ft, gt) = eval(&trial)?;
            let obj_t = ft + c1 * l1(&trial);
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let decrease = dot(&pg, &moved);
            if obj_t.is_finite() && obj_t <= obj + ARMIJO * decrease && obj_t <= obj {
                accepted = Some((trial, gt, obj_t, moved));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, g_new, obj_new, s)) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };

        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if history.len() == config.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }

        x = x_new;
        g = g_new;
        obj = obj_new;
        pseudo_gradient(&x, &g, c1, &mut pg);
        iterations += 1;
        trace.push(obj);

        let period = config.period.max(1);
        if trace.len() > period && (trace[trace.len() - 1 - period] - obj) / obj.abs().max(1.0) < config.tolerance {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(OptimizeOutcome {
        x,
        objective: obj,
        iterations,
        history: trace,
        termination,
    })
}
