//! The discrete smoothed functional
//!
//! ```text
//! J_h(U) = Σ_T |T|·Φ(|∇u_T|) + Σ_T ∫_T (−u·f_δ(x,u) + γ_δ(x,u)) dx
//! ```
//!
//! with `f_δ = f₊·H_δ(u) + f₋·(1 − H_δ(u))`, `γ_δ` likewise, and `H_δ` the
//! one-sided ramp from 0 at `u = 0` to 1 at `u = δ`.
//!
//! The phase integrand is a quadratic polynomial of `u` on each of the three
//! regions `u ≤ 0`, `0 ≤ u ≤ δ`, `u ≥ δ`. Each simplex is clipped at the two
//! levels and every piece is integrated in closed form, so the energy is the
//! exact integral of the interpolant (coefficients taken as element means of
//! their nodal samples) and is C¹ in the nodal values.
//!
//! Element contributions are computed independently and then reduced in
//! element order, so results are bitwise identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Mesh;
use crate::nfunction::EnergyLaw;
use crate::problem::SampledProblem;

const PAR_THRESHOLD: usize = 4096;

/// Ramp regularization of the indicator of `{u > 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothedIndicator {
    pub delta: f64,
}

impl SmoothedIndicator {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("ramp width must be positive, got {delta}")));
        }
        Ok(Self { delta })
    }

    /// `H_δ(s)`: 0 for `s ≤ 0`, `s/δ` on `(0, δ)`, 1 for `s ≥ δ`.
    pub fn heaviside(&self, s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else if s < self.delta {
            s / self.delta
        } else {
            1.0
        }
    }

    /// One-sided derivative of `H_δ` from above.
    pub fn derivative(&self, s: f64) -> f64 {
        if (0.0..self.delta).contains(&s) {
            1.0 / self.delta
        } else {
            0.0
        }
    }
}

/// The three summands of the energy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Breakdown {
    pub phi_term: f64,
    pub f_term: f64,
    pub gamma_term: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.phi_term + self.f_term + self.gamma_term
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Minus,
    Ramp,
    Plus,
}

const REGIONS: [Region; 3] = [Region::Minus, Region::Ramp, Region::Plus];

/// Polynomial form of the phase integrand on one region.
struct PhasePoly {
    /// `−u·f_δ(u) = f[0]·u + f[1]·u²`
    f: [f64; 2],
    /// `γ_δ(u) = g[0] + g[1]·u`
    g: [f64; 2],
}

impl PhasePoly {
    fn new(region: Region, [fp, fm, gp, gm]: [f64; 4], delta: f64) -> Self {
        match region {
            Region::Minus => PhasePoly { f: [-fm, 0.0], g: [gm, 0.0] },
            Region::Ramp => PhasePoly { f: [-fm, -(fp - fm) / delta], g: [gm, (gp - gm) / delta] },
            Region::Plus => PhasePoly { f: [-fp, 0.0], g: [gp, 0.0] },
        }
    }

    /// `d/du` of the full integrand, as `c0 + c1·u`.
    fn derivative(&self) -> [f64; 2] {
        [self.f[0] + self.g[1], 2.0 * self.f[1]]
    }
}

/// Vertex of a clipped piece: barycentric coordinates in the parent simplex
/// and the value of `u` there.
#[derive(Debug, Clone, Copy)]
struct PieceVertex {
    lam: [f64; 3],
    u: f64,
}

fn intersect(a: PieceVertex, b: PieceVertex, level: f64) -> PieceVertex {
    let t = (level - a.u) / (b.u - a.u);
    let mut lam = [0.0; 3];
    for i in 0..3 {
        lam[i] = a.lam[i] + t * (b.lam[i] - a.lam[i]);
    }
    PieceVertex { lam, u: level }
}

/// Sutherland–Hodgman clip of a convex polygon against `u ≤ level` or `u ≥ level`.
fn clip_polygon(poly: &[PieceVertex], level: f64, keep_below: bool) -> Vec<PieceVertex> {
    let inside = |p: &PieceVertex| if keep_below { p.u <= level } else { p.u >= level };
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let cur = poly[i];
        let prev = poly[(i + n - 1) % n];
        match (inside(&prev), inside(&cur)) {
            (true, true) => out.push(cur),
            (false, true) => {
                out.push(intersect(prev, cur, level));
                out.push(cur);
            }
            (true, false) => out.push(intersect(prev, cur, level)),
            (false, false) => {}
        }
    }
    out
}

fn clip_segment(seg: &[PieceVertex], level: f64, keep_below: bool) -> Vec<PieceVertex> {
    let inside = |p: &PieceVertex| if keep_below { p.u <= level } else { p.u >= level };
    let (a, b) = (seg[0], seg[1]);
    match (inside(&a), inside(&b)) {
        (true, true) => vec![a, b],
        (true, false) => vec![a, intersect(a, b, level)],
        (false, true) => vec![intersect(a, b, level), b],
        (false, false) => Vec::new(),
    }
}

/// Integrals over one region of an element.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    m0: f64,
    m1: f64,
    m2: f64,
    lam: [f64; 3],
    ulam: [f64; 3],
}

impl Moments {
    /// Adds the integrals over a simplex with vertex values `us` and vertex
    /// barycentric coordinates `lams` (exact for the quadratic integrands).
    fn add_simplex(&mut self, measure: f64, us: &[f64], lams: &[[f64; 3]], nv: usize) {
        let k = us.len() as f64; // d + 1
        let c2 = measure / (k * (k + 1.0));
        let su: f64 = us.iter().sum();
        let su2: f64 = us.iter().map(|u| u * u).sum();
        self.m0 += measure;
        self.m1 += measure * su / k;
        self.m2 += c2 * (su2 + su * su);
        for a in 0..nv {
            let sl: f64 = lams.iter().map(|l| l[a]).sum();
            let sul: f64 = us.iter().zip(lams).map(|(u, l)| u * l[a]).sum();
            self.lam[a] += measure * sl / k;
            self.ulam[a] += c2 * (sul + su * sl);
        }
    }
}

fn classify(vals: &[f64], delta: f64) -> Option<Region> {
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo >= delta {
        Some(Region::Plus)
    } else if lo >= 0.0 && hi <= delta {
        Some(Region::Ramp)
    } else if hi <= 0.0 {
        Some(Region::Minus)
    } else {
        None
    }
}

/// Per-region moments of one element.
fn element_moments(measure: f64, vals: &[f64], delta: f64) -> [(Region, Moments); 3] {
    let nv = vals.len();
    let identity: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut out = REGIONS.map(|r| (r, Moments::default()));
    if let Some(region) = classify(vals, delta) {
        let idx = REGIONS.iter().position(|r| *r == region).unwrap();
        out[idx].1.add_simplex(measure, vals, &identity[..nv], nv);
        return out;
    }
    let verts: Vec<PieceVertex> = (0..nv).map(|a| PieceVertex { lam: identity[a], u: vals[a] }).collect();
    let clip: fn(&[PieceVertex], f64, bool) -> Vec<PieceVertex> = if nv == 2 { clip_segment } else { clip_polygon };
    let minus = clip(&verts, 0.0, true);
    let upper = clip(&verts, 0.0, false);
    let ramp = if upper.is_empty() { upper.clone() } else { clip(&upper, delta, true) };
    let plus = if upper.is_empty() { upper.clone() } else { clip(&upper, delta, false) };
    for (slot, piece) in out.iter_mut().zip([minus, ramp, plus]) {
        add_piece(&mut slot.1, measure, &piece, nv);
    }
    out
}

fn add_piece(m: &mut Moments, parent_measure: f64, piece: &[PieceVertex], nv: usize) {
    if nv == 2 {
        if piece.len() == 2 {
            let frac = (piece[1].lam[1] - piece[0].lam[1]).abs();
            let us = [piece[0].u, piece[1].u];
            let lams = [piece[0].lam, piece[1].lam];
            m.add_simplex(parent_measure * frac, &us, &lams, nv);
        }
        return;
    }
    if piece.len() < 3 {
        return;
    }
    let p0 = piece[0];
    for w in piece[1..].windows(2) {
        let (p1, p2) = (w[0], w[1]);
        let det = (p1.lam[1] - p0.lam[1]) * (p2.lam[2] - p0.lam[2]) - (p2.lam[1] - p0.lam[1]) * (p1.lam[2] - p0.lam[2]);
        let us = [p0.u, p1.u, p2.u];
        let lams = [p0.lam, p1.lam, p2.lam];
        m.add_simplex(parent_measure * det.abs(), &us, &lams, nv);
    }
}

/// Exact `(∫ −u f_δ, ∫ γ_δ)` over one element.
fn phase_element(measure: f64, vals: &[f64], coeffs: [f64; 4], delta: f64) -> (f64, f64) {
    let mut f_term = 0.0;
    let mut g_term = 0.0;
    for (region, m) in element_moments(measure, vals, delta) {
        if m.m0 == 0.0 {
            continue;
        }
        let p = PhasePoly::new(region, coeffs, delta);
        f_term += p.f[0] * m.m1 + p.f[1] * m.m2;
        g_term += p.g[0] * m.m0 + p.g[1] * m.m1;
    }
    (f_term, g_term)
}

/// `∂/∂U_a` of the element's phase integral, for each local vertex `a`.
fn phase_element_grad(measure: f64, vals: &[f64], coeffs: [f64; 4], delta: f64) -> [f64; 3] {
    let nv = vals.len();
    let mut g = [0.0; 3];
    for (region, m) in element_moments(measure, vals, delta) {
        if m.m0 == 0.0 {
            continue;
        }
        let [c0, c1] = PhasePoly::new(region, coeffs, delta).derivative();
        for a in 0..nv {
            g[a] += c0 * m.lam[a] + c1 * m.ulam[a];
        }
    }
    g
}

fn map_elements<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    if n >= PAR_THRESHOLD {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// The discrete smoothed functional for one law and ramp width.
#[derive(Debug, Clone)]
pub struct Functional<'a> {
    mesh: &'a Mesh,
    problem: &'a SampledProblem,
    law: EnergyLaw,
    indicator: SmoothedIndicator,
}

impl<'a> Functional<'a> {
    /// Uses `problem.law`.
    pub fn new(mesh: &'a Mesh, problem: &'a SampledProblem, indicator: SmoothedIndicator) -> Result<Self> {
        if problem.psi.len() != mesh.node_count() || problem.element_coeffs.len() != mesh.element_count() {
            return Err(Error::DimensionMismatch { expected: mesh.node_count(), got: problem.psi.len() });
        }
        Ok(Self { mesh, problem, law: problem.law, indicator })
    }

    pub fn with_law(mut self, law: EnergyLaw) -> Self {
        self.law = law;
        self
    }

    pub fn law(&self) -> EnergyLaw {
        self.law
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.mesh.node_count() {
            return Err(Error::DimensionMismatch { expected: self.mesh.node_count(), got: u.len() });
        }
        Ok(())
    }

    /// Energy split into its three summands. An overflowing gradient makes
    /// `phi_term` infinite.
    pub fn breakdown(&self, u: &[f64]) -> Result<Breakdown> {
        self.check(u)?;
        let mesh = self.mesh;
        let delta = self.indicator.delta;
        let parts = map_elements(mesh.element_count(), |e| {
            let el = &mesh.elements()[e];
            let grad = mesh.element_gradient(u, e);
            let phi = match self.law.value_sq(grad[0] * grad[0] + grad[1] * grad[1]) {
                Ok(v) => el.measure * v,
                Err(_) => f64::INFINITY,
            };
            let verts = mesh.element_nodes(e);
            let mut vals = [0.0; 3];
            for (a, &v) in verts.iter().enumerate() {
                vals[a] = u[v];
            }
            let (f, g) = phase_element(el.measure, &vals[..verts.len()], self.problem.element_coeffs[e], delta);
            (phi, f, g)
        });
        let mut b = Breakdown::default();
        for (phi, f, g) in parts {
            b.phi_term += phi;
            b.f_term += f;
            b.gamma_term += g;
        }
        Ok(b)
    }

    /// Total energy; `+∞` when any element gradient exceeds the law's cap.
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let b = self.breakdown(u)?;
        if b.phi_term.is_infinite() {
            return Ok(f64::INFINITY);
        }
        Ok(b.total())
    }

    /// Exact gradient with respect to the nodal values; boundary entries are 0.
    pub fn gradient_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.check(u)?;
        let mesh = self.mesh;
        let delta = self.indicator.delta;
        let local = map_elements(mesh.element_count(), |e| -> Result<[f64; 3]> {
            let el = &mesh.elements()[e];
            let verts = mesh.element_nodes(e);
            let grad = mesh.element_gradient(u, e);
            let flux = self.law.flux(grad)?;
            let mut vals = [0.0; 3];
            for (a, &v) in verts.iter().enumerate() {
                vals[a] = u[v];
            }
            let mut g = phase_element_grad(el.measure, &vals[..verts.len()], self.problem.element_coeffs[e], delta);
            for (a, ga) in g.iter_mut().enumerate().take(verts.len()) {
                let sg = el.shape_grads[a];
                *ga += el.measure * (flux[0] * sg[0] + flux[1] * sg[1]);
            }
            Ok(g)
        });
        out.iter_mut().for_each(|v| *v = 0.0);
        for (e, g) in local.into_iter().enumerate() {
            let g = g?;
            for (a, &v) in mesh.element_nodes(e).iter().enumerate() {
                out[v] += g[a];
            }
        }
        for (o, &b) in out.iter_mut().zip(mesh.boundary_mask()) {
            if b {
                *o = 0.0;
            }
        }
        Ok(())
    }

    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.mesh.node_count()];
        self.gradient_into(u, &mut g)?;
        Ok(g)
    }
}

/// `J_h(U)` with the problem's own law.
pub fn energy(problem: &SampledProblem, mesh: &Mesh, u: &[f64], ind: SmoothedIndicator) -> Result<f64> {
    Functional::new(mesh, problem, ind)?.energy(u)
}

pub fn energy_gradient(problem: &SampledProblem, mesh: &Mesh, u: &[f64], ind: SmoothedIndicator) -> Result<Vec<f64>> {
    Functional::new(mesh, problem, ind)?.gradient(u)
}

pub fn energy_breakdown(problem: &SampledProblem, mesh: &Mesh, u: &[f64], ind: SmoothedIndicator) -> Result<Breakdown> {
    Functional::new(mesh, problem, ind)?.breakdown(u)
}

/// The pure gradient energy `Σ_T |T|·Φ(|∇u_T|)` over a subset of elements,
/// with nodes outside `free` held fixed.
#[derive(Debug, Clone)]
pub struct DirichletEnergy<'a> {
    mesh: &'a Mesh,
    law: EnergyLaw,
    elements: Vec<usize>,
}

impl<'a> DirichletEnergy<'a> {
    pub fn new(mesh: &'a Mesh, law: EnergyLaw, elements: Vec<usize>) -> Self {
        Self { mesh, law, elements }
    }

    pub fn elements(&self) -> &[usize] {
        &self.elements
    }

    /// Sum in the stored element order; `+∞` on overflow.
    pub fn value(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for &e in &self.elements {
            let g = self.mesh.element_gradient(u, e);
            match self.law.value_sq(g[0] * g[0] + g[1] * g[1]) {
                Ok(v) => total += self.mesh.elements()[e].measure * v,
                Err(_) => return f64::INFINITY,
            }
        }
        total
    }

    /// Full nodal gradient (no masking).
    pub fn gradient_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &e in &self.elements {
            let el = &self.mesh.elements()[e];
            let flux = self.law.flux(self.mesh.element_gradient(u, e))?;
            for (a, &v) in self.mesh.element_nodes(e).iter().enumerate() {
                let sg = el.shape_grads[a];
                out[v] += el.measure * (flux[0] * sg[0] + flux[1] * sg[1]);
            }
        }
        Ok(())
    }
}
