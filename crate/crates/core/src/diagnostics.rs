//! Measured counterparts of the regularity statements for computed minimizers.
//!
//! Nothing here asserts a theoretical constant. Each function returns the
//! measured quantity so that it can be tracked across refinements.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::DirichletEnergy;
use crate::error::{Error, Result};
use crate::grid::{Domain, Mesh};
use crate::nfunction::{EnergyLaw, Order};
use crate::output::fmt17;
use crate::problem::{Coefficient, CoefficientKind, ProblemSpec};
use crate::solver::{ball_support, phi_harmonic_replacement, Ball};

/// `rhs` values at or below this are treated as zero and get no ratio.
pub const RHS_FLOOR: f64 = 1e-10;

/// `(‖U‖_∞ over all nodes, sup |ψ| over boundary nodes)`.
pub fn linf_report(mesh: &Mesh, u: &[f64], psi: &[f64]) -> (f64, f64) {
    let linf = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bsup = psi.iter().zip(mesh.boundary_mask()).filter(|(_, &b)| b).fold(0.0f64, |m, (v, _)| m.max(v.abs()));
    (linf, bsup)
}

/// `(max U − max_∂ψ, min_∂ψ − min U)`; both are `≤ 0` when `U` obeys the
/// comparison bounds set by its boundary data.
pub fn comparison_gaps(mesh: &Mesh, u: &[f64], psi: &[f64]) -> (f64, f64) {
    let (mut bmax, mut bmin) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, &b) in mesh.boundary_mask().iter().enumerate() {
        if b {
            bmax = bmax.max(psi[i]);
            bmin = bmin.min(psi[i]);
        }
    }
    let umax = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let umin = u.iter().copied().fold(f64::INFINITY, f64::min);
    (umax - bmax, bmin - umin)
}

/// The bounding box of `mesh` shrunk by `margin` on every side.
fn inner_box(mesh: &Mesh, margin: f64) -> Result<[f64; 4]> {
    let [x0, x1, y0, y1] = mesh.domain().bbox();
    let b = if mesh.dim() == 1 {
        [x0 + margin, x1 - margin, y0, y1]
    } else {
        [x0 + margin, x1 - margin, y0 + margin, y1 - margin]
    };
    if !(margin > 0.0) || b[0] >= b[1] || (mesh.dim() == 2 && b[2] >= b[3]) {
        return Err(Error::Domain(format!("inner margin {margin} leaves no interior region")));
    }
    Ok(b)
}

/// Largest sampled `|U(x)−U(y)| / (|x−y|·|ln|x−y||)` over `pair_count` seeded
/// pairs in the inner region with `|x−y| ≤ r0`.
pub fn log_lipschitz_modulus(
    mesh: &Mesh,
    u: &[f64],
    inner_margin: f64,
    r0: f64,
    pair_count: usize,
    seed: u64,
) -> Result<f64> {
    if !(r0 > 0.0 && r0 < (-1.0f64).exp()) {
        return Err(Error::Domain(format!("r0 must lie in (0, 1/e), got {r0}")));
    }
    let [x0, x1, y0, y1] = inner_box(mesh, inner_margin)?;
    let flat = mesh.dim() == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut found = 0;
    let mut attempts = 0;
    while found < pair_count && attempts < 100 * pair_count.max(1) {
        attempts += 1;
        let x = [rng.gen_range(x0..=x1), if flat { 0.0 } else { rng.gen_range(y0..=y1) }];
        let r = r0 * (1.0 - rng.gen::<f64>());
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let dir = if flat { [theta.cos().signum(), 0.0] } else { [theta.cos(), theta.sin()] };
        let y = [x[0] + r * dir[0], x[1] + r * dir[1]];
        let outside = y[0] < x0 || y[0] > x1 || (!flat && (y[1] < y0 || y[1] > y1));
        let d = (y[0] - x[0]).hypot(y[1] - x[1]);
        if outside || d < 1e-12 {
            continue;
        }
        found += 1;
        let du = (mesh.interpolate(u, x)? - mesh.interpolate(u, y)?).abs();
        best = best.max(du / (d * d.ln().abs()));
    }
    Ok(best)
}

/// Largest area-weighted mean oscillation `⨍_B |∇u_T − (∇u)_B|` over balls of
/// the given radii. Centres form a lattice of spacing `r/2` in the inner
/// region; a ball collects the elements whose centroid it contains.
pub fn bmo_seminorm_gradient(mesh: &Mesh, u: &[f64], inner_margin: f64, radii: &[f64]) -> Result<f64> {
    let [x0, x1, y0, y1] = inner_box(mesh, inner_margin)?;
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::Domain(format!("radii must be positive, got {r}")));
    }
    let grads: Vec<[f64; 2]> = (0..mesh.element_count()).map(|e| mesh.element_gradient(u, e)).collect();
    let centroids: Vec<[f64; 2]> = (0..mesh.element_count()).map(|e| mesh.centroid(e)).collect();
    let lattice = |lo: f64, hi: f64, step: f64| -> Vec<f64> {
        let n = ((hi - lo) / step).floor() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    };
    let mut best = 0.0f64;
    for &r in radii {
        let xs = lattice(x0, x1, r / 2.0);
        let ys = if mesh.dim() == 1 { vec![0.0] } else { lattice(y0, y1, r / 2.0) };
        for &cy in &ys {
            for &cx in &xs {
                let members: Vec<usize> = (0..mesh.element_count())
                    .filter(|&e| (centroids[e][0] - cx).hypot(centroids[e][1] - cy) <= r)
                    .collect();
                let area: f64 = members.iter().map(|&e| mesh.elements()[e].measure).sum();
                if area == 0.0 {
                    continue;
                }
                let mut mean = [0.0; 2];
                for &e in &members {
                    let m = mesh.elements()[e].measure;
                    mean[0] += m * grads[e][0] / area;
                    mean[1] += m * grads[e][1] / area;
                }
                let osc: f64 = members
                    .iter()
                    .map(|&e| mesh.elements()[e].measure * (grads[e][0] - mean[0]).hypot(grads[e][1] - mean[1]))
                    .sum::<f64>()
                    / area;
                best = best.max(osc);
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseResidual {
    pub max: f64,
    pub mean: f64,
    /// Number of admissible test nodes.
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ResidualStats {
    pub plus: Option<PhaseResidual>,
    pub minus: Option<PhaseResidual>,
}

impl ResidualStats {
    pub fn is_empty(&self) -> bool {
        self.plus.is_none() && self.minus.is_none()
    }
}

// Degree-5 seven-point rule on the reference triangle (barycentric points, weights summing to 1).
const TRI_A: f64 = 0.059_715_871_789_770;
const TRI_B: f64 = 0.470_142_064_105_115;
const TRI_C: f64 = 0.797_426_985_353_087;
const TRI_D: f64 = 0.101_286_507_323_456;
const TRI_W1: f64 = 0.132_394_152_788_506;
const TRI_W2: f64 = 0.125_939_180_544_827;

fn triangle_rule() -> [([f64; 3], f64); 7] {
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([TRI_A, TRI_B, TRI_B], TRI_W1),
        ([TRI_B, TRI_A, TRI_B], TRI_W1),
        ([TRI_B, TRI_B, TRI_A], TRI_W1),
        ([TRI_C, TRI_D, TRI_D], TRI_W2),
        ([TRI_D, TRI_C, TRI_D], TRI_W2),
        ([TRI_D, TRI_D, TRI_C], TRI_W2),
    ]
}

fn segment_rule() -> [([f64; 3], f64); 3] {
    let g = 0.5 * (0.6f64).sqrt();
    [([0.5 + g, 0.5 - g, 0.0], 5.0 / 18.0), ([0.5, 0.5, 0.0], 8.0 / 18.0), ([0.5 - g, 0.5 + g, 0.0], 5.0 / 18.0)]
}

/// `∫_T f·λ_a` for the local vertex `a`: quadrature of the analytic
/// coefficient where available, otherwise the exact moment of its interpolant.
fn load_moment(mesh: &Mesh, coeff: &Coefficient, nodal: &[f64], e: usize, a: usize) -> f64 {
    let verts = mesh.element_nodes(e);
    let measure = mesh.elements()[e].measure;
    if coeff.kind != CoefficientKind::GridSampled {
        let rule: Vec<([f64; 3], f64)> =
            if mesh.dim() == 1 { segment_rule().to_vec() } else { triangle_rule().to_vec() };
        let mut sum = 0.0;
        for (lam, w) in rule {
            let mut p = [0.0; 2];
            for (j, &v) in verts.iter().enumerate() {
                p[0] += lam[j] * mesh.nodes()[v][0];
                p[1] += lam[j] * mesh.nodes()[v][1];
            }
            sum += w * lam[a] * coeff.eval(p).expect("analytic coefficient");
        }
        return measure * sum;
    }
    let d = verts.len() as f64;
    let total: f64 = verts.iter().map(|&v| nodal[v]).sum();
    measure / (d * (d + 1.0)) * (nodal[verts[a]] + total)
}

/// Weak Euler–Lagrange residuals per phase:
/// `R_i = Σ_T |T|·flux(∇u_T)·∇λ_i − ∫ f_± λ_i`, divided by `‖∇λ_i‖_{L²}`.
///
/// A node is tested when it is interior and every vertex of its patch has
/// `u > ε` (plus phase) or `u < −ε` (minus phase).
pub fn weak_residual(spec: &ProblemSpec, mesh: &Mesh, u: &[f64], band_epsilon: f64) -> Result<ResidualStats> {
    if !(band_epsilon >= 0.0) {
        return Err(Error::Domain(format!("band_epsilon must be >= 0, got {band_epsilon}")));
    }
    let law = spec.law;
    let f_plus = spec.f_plus.sample(mesh)?;
    let f_minus = spec.f_minus.sample(mesh)?;
    let patches = mesh.node_elements();
    let mut fluxes = Vec::with_capacity(mesh.element_count());
    for e in 0..mesh.element_count() {
        fluxes.push(law.flux(mesh.element_gradient(u, e))?);
    }
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (i, patch) in patches.iter().enumerate() {
        if mesh.boundary_mask()[i] {
            continue;
        }
        let vertices = || patch.iter().flat_map(|&e| mesh.element_nodes(e).iter().copied());
        let phase_plus = vertices().all(|v| u[v] > band_epsilon);
        let phase_minus = vertices().all(|v| u[v] < -band_epsilon);
        if !phase_plus && !phase_minus {
            continue;
        }
        let (coeff, nodal) = if phase_plus { (&spec.f_plus, &f_plus) } else { (&spec.f_minus, &f_minus) };
        let mut r = 0.0;
        let mut h1 = 0.0;
        for &e in patch {
            let el = &mesh.elements()[e];
            let a = mesh.element_nodes(e).iter().position(|&v| v == i).unwrap();
            let g = el.shape_grads[a];
            r += el.measure * (fluxes[e][0] * g[0] + fluxes[e][1] * g[1]);
            r -= load_moment(mesh, coeff, nodal, e, a);
            h1 += el.measure * (g[0] * g[0] + g[1] * g[1]);
        }
        let value = r.abs() / h1.sqrt();
        if phase_plus {
            plus.push(value);
        } else {
            minus.push(value);
        }
    }
    let stats = |v: Vec<f64>| {
        (!v.is_empty()).then(|| PhaseResidual {
            max: v.iter().copied().fold(0.0, f64::max),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            nodes: v.len(),
        })
    };
    Ok(ResidualStats { plus: stats(plus), minus: stats(minus) })
}

/// `max |A − B|` over the interior nodes of the coarsest `n×n` grid of `domain`,
/// for each resolution `n`: `A = div(2e^{|∇u|²}∇u)` by centred differences of
/// the analytic flux with step `1/n` of the domain width, and
/// `B = 2e^{|∇u|²}(Δu + 2Δ∞u)` from the analytic derivatives.
pub fn operator_identity_check(u: &Coefficient, domain: &Domain, resolutions: &[usize]) -> Result<Vec<f64>> {
    let Domain::Rectangle { bounds: [x0, x1, y0, y1] } = *domain else {
        return Err(Error::Domain("the operator identity is checked on rectangles".into()));
    };
    if u.hessian([x0, y0]).is_none() || u.gradient([x0, y0]).is_none() {
        return Err(Error::Domain(format!("{:?} has no closed-form second derivatives", u.kind)));
    }
    let Some(&coarse) = resolutions.iter().min() else {
        return Ok(Vec::new());
    };
    if coarse < 2 {
        return Err(Error::Domain("resolutions must be >= 2".into()));
    }
    let flux = |p: [f64; 2]| -> [f64; 2] {
        let g = u.gradient(p).expect("checked");
        let s = 2.0 * (g[0] * g[0] + g[1] * g[1]).exp();
        [s * g[0], s * g[1]]
    };
    let points: Vec<[f64; 2]> = (1..coarse)
        .flat_map(|j| {
            (1..coarse)
                .map(move |i| [x0 + (x1 - x0) * i as f64 / coarse as f64, y0 + (y1 - y0) * j as f64 / coarse as f64])
        })
        .collect();
    Ok(resolutions
        .iter()
        .map(|&n| {
            let hx = (x1 - x0) / n as f64;
            let hy = (y1 - y0) / n as f64;
            points
                .iter()
                .map(|&p| {
                    let a = (flux([p[0] + hx, p[1]])[0] - flux([p[0] - hx, p[1]])[0]) / (2.0 * hx)
                        + (flux([p[0], p[1] + hy])[1] - flux([p[0], p[1] - hy])[1]) / (2.0 * hy);
                    let g = u.gradient(p).expect("checked");
                    let h = u.hessian(p).expect("checked");
                    let lap = h[0][0] + h[1][1];
                    let inf_lap = g[0] * g[0] * h[0][0] + 2.0 * g[0] * g[1] * h[0][1] + g[1] * g[1] * h[1][1];
                    let b = 2.0 * (g[0] * g[0] + g[1] * g[1]).exp() * (lap + 2.0 * inf_lap);
                    (a - b).abs()
                })
                .fold(0.0, f64::max)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MwRow {
    pub ball: Ball,
    /// `∫_B Φ_k(|∇u − ∇v|)`
    pub lhs: f64,
    /// `∫_B Φ_k(|∇u|) − Φ_k(|∇v|)`
    pub rhs: f64,
    /// `lhs/(k·rhs)`, absent when `rhs ≤ RHS_FLOOR`.
    pub ratio: Option<f64>,
}

/// Compares `u` with its `Φ_k`-harmonic replacement `v` on each ball. The
/// integrals run over the elements touching the replaced nodes.
pub fn mw_inequality_check(law: EnergyLaw, mesh: &Mesh, u: &[f64], balls: &[Ball]) -> Result<Vec<MwRow>> {
    let Order::Finite(k) = law.order else {
        return Err(Error::Domain("the replacement inequality needs a finite order".into()));
    };
    balls
        .iter()
        .map(|ball| {
            let v = phi_harmonic_replacement(law, mesh, u, ball)?;
            let (_, elements) = ball_support(mesh, ball);
            let mut lhs = 0.0;
            for &e in &elements {
                let gu = mesh.element_gradient(u, e);
                let gv = mesh.element_gradient(&v, e);
                lhs += mesh.elements()[e].measure * law.value((gu[0] - gv[0]).hypot(gu[1] - gv[1]))?;
            }
            let dirichlet = DirichletEnergy::new(mesh, law, elements);
            let rhs = dirichlet.value(u) - dirichlet.value(&v);
            let ratio = (rhs > RHS_FLOOR).then(|| lhs / (k as f64 * rhs));
            Ok(MwRow { ball: *ball, lhs, rhs, ratio })
        })
        .collect()
}

/// `count` seeded balls with radii in `[r_min, r_max]` contained in the domain.
pub fn random_balls(mesh: &Mesh, count: usize, seed: u64, r_min: f64, r_max: f64) -> Result<Vec<Ball>> {
    if !(r_min > 0.0 && r_min <= r_max) {
        return Err(Error::Domain(format!("invalid radius range [{r_min}, {r_max}]")));
    }
    let [x0, x1, y0, y1] = mesh.domain().bbox();
    let flat = mesh.dim() == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut balls = Vec::with_capacity(count);
    for _ in 0..count {
        let r = if r_min == r_max { r_min } else { rng.gen_range(r_min..=r_max) };
        if 2.0 * r > x1 - x0 || (!flat && 2.0 * r > y1 - y0) {
            return Err(Error::Domain(format!("radius {r} does not fit in the domain")));
        }
        let cx = rng.gen_range(x0 + r..=x1 - r);
        let cy = if flat { 0.0 } else { rng.gen_range(y0 + r..=y1 - r) };
        balls.push(Ball { center: [cx, cy], radius: r });
    }
    Ok(balls)
}

/// Settings for [`diagnose`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagnoseOptions {
    pub inner_margin: f64,
    pub r0: f64,
    pub pair_count: usize,
    pub bmo_radii: Vec<f64>,
    pub band_epsilon: f64,
    pub ball_count: usize,
    /// Truncation order used for the replacement check.
    pub mw_order: u32,
    pub seed: u64,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            inner_margin: 0.1,
            r0: 0.3,
            pair_count: 4000,
            bmo_radii: vec![0.05, 0.1, 0.2],
            band_epsilon: 0.05,
            ball_count: 4,
            mw_order: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub linf: f64,
    pub boundary_sup: f64,
    pub loglip_modulus: f64,
    pub bmo_seminorm: f64,
    pub residual_stats: ResidualStats,
    pub mw_checks: Vec<MwRow>,
    pub identity_error: f64,
    pub notes: Vec<String>,
}

impl DiagnosticsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs every diagnostic on a solution `u` of `spec`.
pub fn diagnose(spec: &ProblemSpec, mesh: &Mesh, u: &[f64], opts: &DiagnoseOptions) -> Result<DiagnosticsReport> {
    let mut notes = Vec::new();
    let psi = spec.psi.sample(mesh)?;
    let (linf, boundary_sup) = linf_report(mesh, u, &psi);
    let loglip_modulus = log_lipschitz_modulus(mesh, u, opts.inner_margin, opts.r0, opts.pair_count, opts.seed)?;
    let bmo_seminorm = bmo_seminorm_gradient(mesh, u, opts.inner_margin, &opts.bmo_radii)?;
    let residual_stats = weak_residual(spec, mesh, u, opts.band_epsilon)?;
    if residual_stats.is_empty() {
        notes.push(format!("no admissible residual nodes outside the band |u| <= {}", opts.band_epsilon));
    }
    let [x0, x1, y0, y1] = mesh.domain().bbox();
    let r_max = 0.25 * if mesh.dim() == 1 { x1 - x0 } else { (x1 - x0).min(y1 - y0) };
    let balls = random_balls(mesh, opts.ball_count, opts.seed, 0.5 * r_max, r_max)?;
    let mw_law = spec.law.with_order(Order::Finite(opts.mw_order));
    let mw_checks = mw_inequality_check(mw_law, mesh, u, &balls)?;
    notes.push(format!("replacement check uses truncation order {}", opts.mw_order));
    let n = *mesh.resolution().iter().max().expect("nonempty resolution");
    let identity_error = match mesh.domain() {
        Domain::Rectangle { .. } if spec.psi.hessian([x0, y0]).is_some() => {
            notes.push("operator identity evaluated on the boundary datum psi".into());
            operator_identity_check(&spec.psi, mesh.domain(), &[n])?[0]
        }
        Domain::Rectangle { .. } => {
            notes.push("operator identity evaluated on sin(pi x) sin(pi y); psi has no closed-form Hessian".into());
            let reference = Coefficient::sinusoidal(0.0, 1.0, 1.0, 1.0);
            operator_identity_check(&reference, &Domain::unit_square(), &[n])?[0]
        }
        Domain::Interval { .. } => {
            notes.push("operator identity not evaluated in 1D".into());
            0.0
        }
    };
    Ok(DiagnosticsReport {
        linf,
        boundary_sup,
        loglip_modulus,
        bmo_seminorm,
        residual_stats,
        mw_checks,
        identity_error,
        notes,
    })
}

/// One row of a refinement ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub resolution: usize,
    pub h: f64,
    pub residual_max: f64,
    pub residual_mean: f64,
}

/// `resolution,h,residual_max,residual_mean`
pub fn write_ladder_csv<W: Write>(rows: &[LadderRow], mut out: W) -> Result<()> {
    writeln!(out, "resolution,h,residual_max,residual_mean")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.resolution, fmt17(r.h), fmt17(r.residual_max), fmt17(r.residual_mean))?;
    }
    Ok(())
}
