//! Limited-memory BFGS with Armijo backtracking, plus a conjugate-gradient
//! solver for the quadratic initializer.

use std::collections::VecDeque;

use crate::error::{Error, Result};

const HISTORY: usize = 8;

/// Relative rounding noise tolerated on energy evaluations in the
/// slope-controlled regime of the line search.
pub const NOISE: f64 = 64.0 * f64::EPSILON;

/// A smooth objective over a flat parameter vector. `value` may return `+∞`
/// for inadmissible points; such trial steps are rejected.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()>;
}

#[derive(Debug, Clone, Copy)]
pub struct DescentParams {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    /// Magnitude of the summands of the objective, used to size the rounding
    /// floor when they cancel. The floor scale is `max(|f|, noise_scale)`.
    pub noise_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone)]
pub struct Descent {
    pub x: Vec<f64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Entry 0 is the starting point (step 0); one entry per accepted step after.
    pub trace: Vec<Step>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn two_loop(history: &VecDeque<Pair>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = Vec::with_capacity(history.len());
    for p in history.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        q.iter_mut().zip(&p.y).for_each(|(qi, yi)| *qi -= a * yi);
        alpha.push(a);
    }
    if let Some(last) = history.back() {
        let scale = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|v| *v *= scale);
    }
    for (p, a) in history.iter().zip(alpha.iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        q.iter_mut().zip(&p.s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Minimizes `obj` from `x0`. Accepted steps never increase the objective by
/// more than [`NOISE`]` · max(|f|, noise_scale)`.
pub fn minimize(obj: &impl Objective, x0: Vec<f64>, params: &DescentParams) -> Result<Descent> {
    let n = x0.len();
    let mut x = x0;
    let mut f = obj.value(&x);
    if !f.is_finite() {
        return Err(Error::NonFiniteEnergy);
    }
    let mut g = vec![0.0; n];
    obj.gradient(&x, &mut g)?;
    let mut gnorm = sup_norm(&g);
    let mut trace = vec![Step { energy: f, grad_norm: gnorm, step: 0.0 }];
    let mut history: VecDeque<Pair> = VecDeque::with_capacity(HISTORY);
    let mut iterations = 0;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];

    while gnorm > params.grad_tol && iterations < params.max_iters {
        let mut use_memory = !history.is_empty();
        let accepted = loop {
            let (d, alpha0) = if use_memory {
                (two_loop(&history, &g), 1.0)
            } else {
                // Cap the first move at 0.1 in sup-norm.
                (g.iter().map(|v| -v).collect(), (0.1 / gnorm).min(1.0))
            };
            let gd = dot(&g, &d);
            if use_memory && !(gd < 0.0) {
                history.clear();
                use_memory = false;
                continue;
            }
            match line_search(obj, &x, f, &d, gd, alpha0, params, &mut x_new, &mut g_new)? {
                Some((alpha, f_trial, have_grad)) => break Some((alpha, f_trial, have_grad, d)),
                None if use_memory => {
                    history.clear();
                    use_memory = false;
                }
                None => break None,
            }
        };
        let Some((alpha, f_trial, have_grad, d)) = accepted else {
            return Err(Error::LineSearchFailure { iteration: iterations, energy: f, grad_norm: gnorm, iterate: x });
        };
        if !have_grad {
            obj.gradient(&x_new, &mut g_new)?;
        }
        let s: Vec<f64> = d.iter().map(|v| alpha * v).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        f = f_trial;
        gnorm = sup_norm(&g);
        iterations += 1;
        trace.push(Step { energy: f, grad_norm: gnorm, step: alpha });
    }
    Ok(Descent { x, energy: f, grad_norm: gnorm, iterations, converged: gnorm <= params.grad_tol, trace })
}

/// Backtracking until the Armijo condition holds.
///
/// Once the predicted decrease falls below `1e-8·S` with
/// `S = max(|f|, noise_scale)`, function differences no longer resolve
/// progress. There a trial within the evaluation noise [`NOISE`]`·S` of `f` is
/// accepted when its directional slope passes the
/// approximate Armijo test `∇f(x + αd)·d ≤ (1 − 2c)·|∇f(x)·d|` with `c = 0.1`,
/// which follows from the trapezoidal model of the line restriction.
/// Returns whether `g_new` holds the trial gradient.
#[allow(clippy::too_many_arguments)]
fn line_search(
    obj: &impl Objective,
    x: &[f64],
    f: f64,
    d: &[f64],
    gd: f64,
    alpha0: f64,
    params: &DescentParams,
    x_new: &mut [f64],
    g_new: &mut [f64],
) -> Result<Option<(f64, f64, bool)>> {
    let scale = f.abs().max(params.noise_scale).max(f64::MIN_POSITIVE);
    let floor = 1e-8 * scale;
    let mut alpha = alpha0;
    loop {
        let mut moved = false;
        for i in 0..x.len() {
            x_new[i] = x[i] + alpha * d[i];
            moved |= x_new[i] != x[i];
        }
        if !moved {
            return Ok(None);
        }
        let f_trial = obj.value(x_new);
        if f_trial.is_finite() {
            if f_trial <= f + params.armijo_c * alpha * gd {
                return Ok(Some((alpha, f_trial, false)));
            }
            if -alpha * gd < floor && f_trial <= f + NOISE * scale {
                obj.gradient(x_new, g_new)?;
                if dot(g_new, d) <= 0.8 * gd.abs() {
                    return Ok(Some((alpha, f_trial, true)));
                }
            }
        }
        alpha *= params.backtrack;
    }
}

/// Conjugate gradients for `A x = b` with `A` symmetric positive definite,
/// given as a matrix-vector product. Stops when `‖r‖₂ ≤ tol·‖b‖₂`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iters: usize,
) -> Vec<f64> {
    let n = b.len();
    let mut x = x0;
    let mut ap = vec![0.0; n];
    apply(&x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * dot(b, b).sqrt();
    for _ in 0..max_iters {
        if rr.sqrt() <= target || rr == 0.0 {
            break;
        }
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let a = rr / pap;
        for i in 0..n {
            x[i] += a * p[i];
            r[i] -= a * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    x
}
