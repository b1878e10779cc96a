//! Minimization of the discrete energy with Dirichlet data `ψ`.
//!
//! [`solve`] runs a continuation over truncation orders (outer loop,
//! ascending) and ramp widths (inner loop, descending). Each stage is an
//! L-BFGS descent with Armijo backtracking on the free nodes, warm-started
//! from the previous stage. The very first iterate is the discrete harmonic
//! extension of `ψ`, i.e. the minimizer of the `k = 1` energy with no phase
//! terms.

pub mod lbfgs;
mod oracle;

use std::cell::RefCell;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{Breakdown, DirichletEnergy, Functional, SmoothedIndicator};
use crate::error::{Error, Result};
use crate::grid::{Mesh, ScalarField};
use crate::nfunction::{EnergyLaw, Order};
use crate::output::fmt17;
use crate::problem::SampledProblem;

pub use lbfgs::{DescentParams, Objective};
pub use oracle::{kink_energy, oracle_1d};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Stop when the sup-norm of the free-node gradient is at most this.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub k_schedule: Vec<Order>,
    pub delta_schedule: Vec<f64>,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-9,
            armijo_c: 1e-4,
            backtrack: 0.5,
            k_schedule: vec![Order::Infinite],
            delta_schedule: vec![1e-2, 1e-3, 1e-4],
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Validation(m.to_string()));
        if self.max_iters == 0 {
            return fail("max_iters must be >= 1");
        }
        if !(self.grad_tol > 0.0) {
            return fail("grad_tol must be positive");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return fail("armijo_c must lie in (0, 1)");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return fail("backtrack must lie in (0, 1)");
        }
        if self.k_schedule.is_empty() {
            return fail("k_schedule is empty");
        }
        if self.k_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return fail("k_schedule must be strictly ascending");
        }
        if self.delta_schedule.is_empty() {
            return fail("delta_schedule is empty");
        }
        if self.delta_schedule.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return fail("delta_schedule entries must be positive");
        }
        if self.delta_schedule.windows(2).any(|w| w[0] <= w[1]) {
            return fail("delta_schedule must be strictly descending");
        }
        Ok(())
    }

    fn descent(&self, noise_scale: f64) -> DescentParams {
        DescentParams {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            armijo_c: self.armijo_c,
            backtrack: self.backtrack,
            noise_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub stage_k: Order,
    pub stage_delta: f64,
    pub iter: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub k: Order,
    pub delta: f64,
    pub energy: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    #[serde(skip)]
    pub field: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub field: ScalarField,
    pub energy_value: f64,
    pub breakdown: Breakdown,
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
    pub per_stage: Vec<StageSummary>,
}

impl SolveResult {
    /// `stage_k,stage_delta,iter,energy,grad_norm,step`
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "stage_k,stage_delta,iter,energy,grad_norm,step")?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.stage_k,
                fmt17(r.stage_delta),
                r.iter,
                fmt17(r.energy),
                fmt17(r.grad_norm),
                fmt17(r.step)
            )?;
        }
        Ok(())
    }

    /// Final field of the last `δ` stage of each truncation order.
    pub fn per_k_fields(&self) -> Vec<&StageSummary> {
        let mut out: Vec<&StageSummary> = Vec::new();
        for s in &self.per_stage {
            match out.last_mut() {
                Some(last) if last.k == s.k => *last = s,
                _ => out.push(s),
            }
        }
        out
    }
}

type GradientFn<'a> = Box<dyn Fn(&[f64], &mut [f64]) -> Result<()> + 'a>;

/// Restriction of a full-field objective to a set of free nodes.
struct Restricted<'a, F> {
    free: &'a [usize],
    full: RefCell<Vec<f64>>,
    full_grad: RefCell<Vec<f64>>,
    value: F,
    gradient: GradientFn<'a>,
}

impl<F: Fn(&[f64]) -> f64> Objective for Restricted<'_, F> {
    fn value(&self, x: &[f64]) -> f64 {
        let mut full = self.full.borrow_mut();
        for (&i, &v) in self.free.iter().zip(x) {
            full[i] = v;
        }
        (self.value)(&full)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        let mut full = self.full.borrow_mut();
        for (&i, &v) in self.free.iter().zip(x) {
            full[i] = v;
        }
        let mut fg = self.full_grad.borrow_mut();
        (self.gradient)(&full, &mut fg)?;
        for (gi, &i) in g.iter_mut().zip(self.free) {
            *gi = fg[i];
        }
        Ok(())
    }
}

fn free_nodes(mesh: &Mesh) -> Vec<usize> {
    (0..mesh.node_count()).filter(|&i| !mesh.boundary_mask()[i]).collect()
}

/// Discrete harmonic extension of the boundary values of `psi`: the
/// minimizer of `Σ_T |T|·|∇u_T|²` with `u = ψ` on `∂Ω`, by conjugate gradients.
pub fn harmonic_extension(mesh: &Mesh, psi: &[f64]) -> Vec<f64> {
    let free = free_nodes(mesh);
    let all: Vec<usize> = (0..mesh.element_count()).collect();
    let quad = DirichletEnergy::new(mesh, EnergyLaw::truncated(1), all);
    let n = mesh.node_count();
    let scratch = RefCell::new((vec![0.0; n], vec![0.0; n]));
    // ∇E(u) = 2·A·u, so A_ff·p = ∇E(p with zero boundary)/2 restricted to free nodes.
    let apply = |p: &[f64], out: &mut [f64]| {
        let mut s = scratch.borrow_mut();
        let (full, grad) = &mut *s;
        full.iter_mut().for_each(|v| *v = 0.0);
        for (&i, &v) in free.iter().zip(p) {
            full[i] = v;
        }
        quad.gradient_into(full, grad).expect("quadratic law cannot overflow");
        for (o, &i) in out.iter_mut().zip(&free) {
            *o = 0.5 * grad[i];
        }
    };
    // b = −A_fb·ψ_b
    let mut boundary_only = psi.to_vec();
    for &i in &free {
        boundary_only[i] = 0.0;
    }
    let mut g = vec![0.0; n];
    quad.gradient_into(&boundary_only, &mut g).expect("quadratic law cannot overflow");
    let b: Vec<f64> = free.iter().map(|&i| -0.5 * g[i]).collect();
    let x0: Vec<f64> = free.iter().map(|&i| psi[i]).collect();
    let x = lbfgs::conjugate_gradient(apply, &b, x0, 1e-14, 10 * free.len() + 100);
    let mut u = boundary_only;
    for (&i, v) in free.iter().zip(x) {
        u[i] = v;
    }
    u
}

/// One descent stage at fixed law and ramp width.
pub fn minimize_stage(
    problem: &SampledProblem,
    mesh: &Mesh,
    u0: &[f64],
    law: EnergyLaw,
    delta: f64,
    opts: &SolverOptions,
) -> Result<SolveResult> {
    if u0.len() != mesh.node_count() {
        return Err(Error::DimensionMismatch { expected: mesh.node_count(), got: u0.len() });
    }
    for (i, &b) in mesh.boundary_mask().iter().enumerate() {
        if b && u0[i] != problem.psi[i] {
            return Err(Error::Validation(format!("initial field violates the Dirichlet datum at node {i}")));
        }
    }
    let functional = Functional::new(mesh, problem, SmoothedIndicator::new(delta)?)?.with_law(law);
    let free = free_nodes(mesh);
    let objective = Restricted {
        free: &free,
        full: RefCell::new(u0.to_vec()),
        full_grad: RefCell::new(vec![0.0; mesh.node_count()]),
        value: |u: &[f64]| functional.energy(u).unwrap_or(f64::INFINITY),
        gradient: Box::new(|u: &[f64], g: &mut [f64]| functional.gradient_into(u, g)),
    };
    let x0: Vec<f64> = free.iter().map(|&i| u0[i]).collect();
    // The phase terms can cancel the gradient term, so size the rounding
    // floor by the magnitudes of the three parts at the start.
    let scale = match functional.breakdown(u0) {
        Ok(b) => b.phi_term.abs() + b.f_term.abs() + b.gamma_term.abs(),
        Err(_) => 0.0,
    };
    let out = lbfgs::minimize(&objective, x0, &opts.descent(if scale.is_finite() { scale } else { 0.0 })).map_err(
        |e| match e {
            Error::LineSearchFailure { iteration, energy, grad_norm, iterate } => {
                let mut full = u0.to_vec();
                for (&i, v) in free.iter().zip(iterate) {
                    full[i] = v;
                }
                Error::LineSearchFailure { iteration, energy, grad_norm, iterate: full }
            }
            e => e,
        },
    )?;
    let mut field = u0.to_vec();
    for (&i, &v) in free.iter().zip(&out.x) {
        field[i] = v;
    }
    let breakdown = functional.breakdown(&field)?;
    let trace = out
        .trace
        .iter()
        .enumerate()
        .map(|(iter, s)| TraceRow {
            stage_k: law.order,
            stage_delta: delta,
            iter,
            energy: s.energy,
            grad_norm: s.grad_norm,
            step: s.step,
        })
        .collect();
    let summary = StageSummary {
        k: law.order,
        delta,
        energy: out.energy,
        iterations: out.iterations,
        grad_norm: out.grad_norm,
        converged: out.converged,
        field: field.clone(),
    };
    Ok(SolveResult {
        field: ScalarField(field),
        energy_value: out.energy,
        breakdown,
        iterations: out.iterations,
        final_grad_norm: out.grad_norm,
        converged: out.converged,
        trace,
        per_stage: vec![summary],
    })
}

/// The initial iterate used by [`solve`].
pub fn initial_field(problem: &SampledProblem, mesh: &Mesh) -> Vec<f64> {
    harmonic_extension(mesh, &problem.psi)
}

/// Full `(k, δ)` continuation from the harmonic extension of `ψ`.
pub fn solve(problem: &SampledProblem, mesh: &Mesh, opts: &SolverOptions) -> Result<SolveResult> {
    opts.validate()?;
    let u0 = initial_field(problem, mesh);
    solve_from(problem, mesh, u0, opts)
}

/// Continuation from a given Dirichlet-compatible starting field.
pub fn solve_from(problem: &SampledProblem, mesh: &Mesh, u0: Vec<f64>, opts: &SolverOptions) -> Result<SolveResult> {
    opts.validate()?;
    let mut u = u0;
    let mut total = SolveResult {
        field: ScalarField(Vec::new()),
        energy_value: f64::NAN,
        breakdown: Breakdown::default(),
        iterations: 0,
        final_grad_norm: f64::NAN,
        converged: true,
        trace: Vec::new(),
        per_stage: Vec::new(),
    };
    for &k in &opts.k_schedule {
        let law = problem.law.with_order(k);
        for &delta in &opts.delta_schedule {
            let stage = minimize_stage(problem, mesh, &u, law, delta, opts).map_err(|e| Error::Stage {
                k: k.to_string(),
                delta,
                source: Box::new(e),
            })?;
            total.iterations += stage.iterations;
            total.converged &= stage.converged;
            total.trace.extend(stage.trace);
            total.per_stage.extend(stage.per_stage);
            total.energy_value = stage.energy_value;
            total.breakdown = stage.breakdown;
            total.final_grad_norm = stage.final_grad_norm;
            u = stage.field.0;
        }
    }
    total.field = ScalarField(u);
    Ok(total)
}

/// Outcome of [`solve_multistart`].
#[derive(Debug, Clone)]
pub struct MultiStart {
    pub results: Vec<SolveResult>,
    /// Pairs of starts whose energies agree within `1e-8` while their fields
    /// differ by at least `1e-8` in sup-norm.
    pub ties: Vec<(usize, usize)>,
}

/// Repeats [`solve`] from `starts` initial fields: start 0 is the harmonic
/// extension, later starts add seeded uniform noise to its interior values.
pub fn solve_multistart(
    problem: &SampledProblem,
    mesh: &Mesh,
    opts: &SolverOptions,
    starts: usize,
) -> Result<MultiStart> {
    let base = initial_field(problem, mesh);
    let lo = problem.psi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = problem.psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let amp = 0.1 * (hi - lo).max(1e-3);
    let mut results = Vec::with_capacity(starts);
    for s in 0..starts {
        let mut u0 = base.clone();
        if s > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(s as u64));
            for (i, v) in u0.iter_mut().enumerate() {
                if !mesh.boundary_mask()[i] {
                    *v += amp * rng.gen_range(-1.0..1.0);
                }
            }
        }
        results.push(solve_from(problem, mesh, u0, opts)?);
    }
    let mut ties = Vec::new();
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            let de = (results[i].energy_value - results[j].energy_value).abs();
            let du =
                results[i].field.iter().zip(results[j].field.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if de <= 1e-8 && du >= 1e-8 {
                ties.push((i, j));
            }
        }
    }
    Ok(MultiStart { results, ties })
}

/// A closed ball `{|x − center| ≤ radius}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    pub fn contains_strictly(&self, p: [f64; 2]) -> bool {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1]) < self.radius
    }

    fn check_inside(&self, mesh: &Mesh) -> Result<()> {
        let [x0, x1, y0, y1] = mesh.domain().bbox();
        let c = self.center;
        let r = self.radius;
        let inside_x = c[0] - r >= x0 && c[0] + r <= x1;
        let inside_y = mesh.dim() == 1 || (c[1] - r >= y0 && c[1] + r <= y1);
        if r > 0.0 && inside_x && inside_y {
            Ok(())
        } else {
            Err(Error::Domain(format!("ball {self:?} is not contained in the domain")))
        }
    }
}

/// Nodes strictly inside `ball` (and off `∂Ω`), and the elements touching them.
pub fn ball_support(mesh: &Mesh, ball: &Ball) -> (Vec<usize>, Vec<usize>) {
    let free: Vec<usize> = (0..mesh.node_count())
        .filter(|&i| !mesh.boundary_mask()[i] && ball.contains_strictly(mesh.nodes()[i]))
        .collect();
    let mut is_free = vec![false; mesh.node_count()];
    free.iter().for_each(|&i| is_free[i] = true);
    let elements = (0..mesh.element_count()).filter(|&e| mesh.element_nodes(e).iter().any(|&v| is_free[v])).collect();
    (free, elements)
}

fn replacement_options() -> SolverOptions {
    SolverOptions { max_iters: 50_000, grad_tol: 1e-12, ..SolverOptions::default() }
}

/// Minimizer of the pure gradient energy of `law` over the nodes inside
/// `ball`, with `u` held fixed elsewhere.
pub fn phi_harmonic_replacement(law: EnergyLaw, mesh: &Mesh, u: &[f64], ball: &Ball) -> Result<ScalarField> {
    phi_harmonic_replacement_with(law, mesh, u, ball, &replacement_options())
}

pub fn phi_harmonic_replacement_with(
    law: EnergyLaw,
    mesh: &Mesh,
    u: &[f64],
    ball: &Ball,
    opts: &SolverOptions,
) -> Result<ScalarField> {
    ball.check_inside(mesh)?;
    if u.len() != mesh.node_count() {
        return Err(Error::DimensionMismatch { expected: mesh.node_count(), got: u.len() });
    }
    let (free, elements) = ball_support(mesh, ball);
    if free.is_empty() {
        return Ok(ScalarField(u.to_vec()));
    }
    let dirichlet = DirichletEnergy::new(mesh, law, elements);
    let objective = Restricted {
        free: &free,
        full: RefCell::new(u.to_vec()),
        full_grad: RefCell::new(vec![0.0; mesh.node_count()]),
        value: |v: &[f64]| dirichlet.value(v),
        gradient: Box::new(|v: &[f64], g: &mut [f64]| dirichlet.gradient_into(v, g)),
    };
    let x0: Vec<f64> = free.iter().map(|&i| u[i]).collect();
    let out = lbfgs::minimize(&objective, x0, &opts.descent(0.0))?;
    let mut v = u.to_vec();
    for (&i, &x) in free.iter().zip(&out.x) {
        v[i] = x;
    }
    Ok(ScalarField(v))
}
