//! Problem data: coefficient presets, the JSON configuration format and
//! nodal sampling of a problem onto a mesh.
//!
//! The configuration is a single JSON document:
//!
//! ```json
//! {
//!   "domain": {"kind": "interval", "bounds": [0.0, 1.0]},
//!   "grid": {"resolution": [64]},
//!   "law": {"k": "inf"},
//!   "coefficients": {
//!     "f_plus": {"kind": "constant", "params": [0.0]},
//!     "f_minus": {"kind": "constant", "params": [0.0]},
//!     "gamma_plus": {"kind": "constant", "params": [1.0]},
//!     "gamma_minus": {"kind": "constant", "params": [1.0]},
//!     "psi": {"kind": "affine", "params": [-1.0, 2.0]}
//!   },
//!   "c_gamma": 0.0,
//!   "solver": {"k_schedule": [1, 2, 4, 8, "inf"], "delta_schedule": [0.01, 0.001]},
//!   "output_dir": "out/affine"
//! }
//! ```
//!
//! Unknown keys are rejected at every level.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_mesh, Domain, Mesh};
use crate::nfunction::{EnergyLaw, Order, DEFAULT_EXP_CAP};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    /// `[c]`
    Constant,
    /// `[c, bx]` or `[c, bx, by]`: `c + bx·x + by·y`
    Affine,
    /// `[c, bx, by, axx, ayy, axy]`: `c + bx·x + by·y + axx·x² + ayy·y² + axy·x·y`
    Quadratic,
    /// `[offset, amp, fx, fy]`: `offset + amp·sin(π·fx·x)·sin(π·fy·y)`; a zero
    /// frequency drops that factor.
    Sinusoidal,
    /// `[cx, cy, r]` or `[cx, cy, r, slope]`: `slope·(|x − c| − r)`
    Radial,
    /// `[cx, cy, amp, width]`: `amp·exp(−|x − c|²/width²)`
    RadialSmooth,
    /// One value per mesh node.
    GridSampled,
}

/// A scalar coefficient on the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficient {
    pub kind: CoefficientKind,
    pub params: Vec<f64>,
}

impl Coefficient {
    pub fn constant(c: f64) -> Self {
        Self { kind: CoefficientKind::Constant, params: vec![c] }
    }

    pub fn affine(c: f64, bx: f64, by: f64) -> Self {
        Self { kind: CoefficientKind::Affine, params: vec![c, bx, by] }
    }

    pub fn quadratic(c: f64, bx: f64, by: f64, axx: f64, ayy: f64, axy: f64) -> Self {
        Self { kind: CoefficientKind::Quadratic, params: vec![c, bx, by, axx, ayy, axy] }
    }

    pub fn sinusoidal(offset: f64, amp: f64, fx: f64, fy: f64) -> Self {
        Self { kind: CoefficientKind::Sinusoidal, params: vec![offset, amp, fx, fy] }
    }

    pub fn radial(cx: f64, cy: f64, r: f64) -> Self {
        Self { kind: CoefficientKind::Radial, params: vec![cx, cy, r, 1.0] }
    }

    pub fn radial_smooth(cx: f64, cy: f64, amp: f64, width: f64) -> Self {
        Self { kind: CoefficientKind::RadialSmooth, params: vec![cx, cy, amp, width] }
    }

    pub fn grid_sampled(values: Vec<f64>) -> Self {
        Self { kind: CoefficientKind::GridSampled, params: values }
    }

    pub fn validate(&self) -> Result<()> {
        use CoefficientKind::*;
        let n = self.params.len();
        let ok = match self.kind {
            Constant => n == 1,
            Affine => n == 2 || n == 3,
            Quadratic => n == 6,
            Sinusoidal => n == 4,
            Radial => n == 3 || n == 4,
            RadialSmooth => n == 4 && self.params[3] != 0.0,
            GridSampled => n > 0,
        };
        if !ok {
            return Err(Error::Validation(format!(
                "coefficient {:?} has an invalid parameter list of length {n}",
                self.kind
            )));
        }
        if self.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("coefficient {:?} has non-finite parameters", self.kind)));
        }
        Ok(())
    }

    fn param(&self, i: usize) -> f64 {
        self.params.get(i).copied().unwrap_or(0.0)
    }

    /// Value at `p`; `None` for grid-sampled tables.
    pub fn eval(&self, p: [f64; 2]) -> Option<f64> {
        use CoefficientKind::*;
        let [x, y] = p;
        let q = |i| self.param(i);
        Some(match self.kind {
            Constant => q(0),
            Affine => q(0) + q(1) * x + q(2) * y,
            Quadratic => q(0) + q(1) * x + q(2) * y + q(3) * x * x + q(4) * y * y + q(5) * x * y,
            Sinusoidal => {
                let (sx, sy) = sin_factors(q(2), q(3), x, y);
                q(0) + q(1) * sx * sy
            }
            Radial => {
                let slope = if self.params.len() == 4 { q(3) } else { 1.0 };
                slope * ((x - q(0)).hypot(y - q(1)) - q(2))
            }
            RadialSmooth => {
                let r2 = (x - q(0)).powi(2) + (y - q(1)).powi(2);
                q(2) * (-r2 / (q(3) * q(3))).exp()
            }
            GridSampled => return None,
        })
    }

    /// Closed-form gradient, when the preset has one at `p`.
    pub fn gradient(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        use CoefficientKind::*;
        let [x, y] = p;
        let q = |i| self.param(i);
        Some(match self.kind {
            Constant => [0.0, 0.0],
            Affine => [q(1), q(2)],
            Quadratic => [q(1) + 2.0 * q(3) * x + q(5) * y, q(2) + 2.0 * q(4) * y + q(5) * x],
            Sinusoidal => {
                let (sx, sy) = sin_factors(q(2), q(3), x, y);
                let (cx, cy) = cos_factors(q(2), q(3), x, y);
                [q(1) * cx * sy, q(1) * sx * cy]
            }
            Radial => {
                let (dx, dy) = (x - q(0), y - q(1));
                let r = dx.hypot(dy);
                if r == 0.0 {
                    return None;
                }
                let slope = if self.params.len() == 4 { q(3) } else { 1.0 };
                [slope * dx / r, slope * dy / r]
            }
            RadialSmooth => {
                let (dx, dy) = (x - q(0), y - q(1));
                let w2 = q(3) * q(3);
                let e = q(2) * (-(dx * dx + dy * dy) / w2).exp();
                [-2.0 * dx / w2 * e, -2.0 * dy / w2 * e]
            }
            GridSampled => return None,
        })
    }

    /// Closed-form Hessian `[[u_xx, u_xy], [u_xy, u_yy]]`. Radial cones and
    /// grid tables have none.
    pub fn hessian(&self, p: [f64; 2]) -> Option<[[f64; 2]; 2]> {
        use CoefficientKind::*;
        let [x, y] = p;
        let q = |i| self.param(i);
        Some(match self.kind {
            Constant | Affine => [[0.0; 2]; 2],
            Quadratic => [[2.0 * q(3), q(5)], [q(5), 2.0 * q(4)]],
            Sinusoidal => {
                let (fx, fy) = (PI * q(2), PI * q(3));
                let (sx, sy) = sin_factors(q(2), q(3), x, y);
                let (cx, cy) = cos_factors(q(2), q(3), x, y);
                let a = q(1);
                [[-a * fx * fx * sx * sy, a * cx * cy], [a * cx * cy, -a * fy * fy * sx * sy]]
            }
            RadialSmooth => {
                let (dx, dy) = (x - q(0), y - q(1));
                let w2 = q(3) * q(3);
                let e = q(2) * (-(dx * dx + dy * dy) / w2).exp();
                let c = 2.0 / w2;
                [[e * (c * c * dx * dx - c), e * c * c * dx * dy], [e * c * c * dx * dy, e * (c * c * dy * dy - c)]]
            }
            Radial | GridSampled => return None,
        })
    }

    /// Nodal samples on `mesh`.
    pub fn sample(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        self.validate()?;
        if self.kind == CoefficientKind::GridSampled {
            if self.params.len() != mesh.node_count() {
                return Err(Error::Validation(format!(
                    "grid_sampled table has {} values but the mesh has {} nodes",
                    self.params.len(),
                    mesh.node_count()
                )));
            }
            return Ok(self.params.clone());
        }
        Ok(mesh.nodes().iter().map(|&p| self.eval(p).expect("analytic")).collect())
    }
}

// sin(π f x) factors, with a zero frequency meaning "no factor".
fn sin_factors(fx: f64, fy: f64, x: f64, y: f64) -> (f64, f64) {
    let s = |f: f64, v: f64| if f == 0.0 { 1.0 } else { (PI * f * v).sin() };
    (s(fx, x), s(fy, y))
}

// Derivatives of the factors from `sin_factors`.
fn cos_factors(fx: f64, fy: f64, x: f64, y: f64) -> (f64, f64) {
    let c = |f: f64, v: f64| if f == 0.0 { 0.0 } else { PI * f * (PI * f * v).cos() };
    (c(fx, x), c(fy, y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub resolution: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawConfig {
    pub k: Order,
    #[serde(default = "default_exp_cap")]
    pub exp_cap: f64,
}

fn default_exp_cap() -> f64 {
    DEFAULT_EXP_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub f_plus: Coefficient,
    pub f_minus: Coefficient,
    pub gamma_plus: Coefficient,
    pub gamma_minus: Coefficient,
    pub psi: Coefficient,
}

/// The on-disk configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub domain: Domain,
    pub grid: GridConfig,
    pub law: LawConfig,
    pub coefficients: Coefficients,
    #[serde(default)]
    pub c_gamma: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn problem(&self) -> ProblemSpec {
        ProblemSpec {
            domain: self.domain,
            resolution: self.grid.resolution.clone(),
            law: EnergyLaw { order: self.law.k, exp_cap: self.law.exp_cap },
            f_plus: self.coefficients.f_plus.clone(),
            f_minus: self.coefficients.f_minus.clone(),
            gamma_plus: self.coefficients.gamma_plus.clone(),
            gamma_minus: self.coefficients.gamma_minus.clone(),
            psi: self.coefficients.psi.clone(),
            c_gamma: self.c_gamma,
            smoothing_delta: self.solver.delta_schedule.last().copied().unwrap_or(1e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.solver.k_schedule.last() != Some(&self.law.k) {
            return Err(Error::Validation(format!("k_schedule must end at the law order {}", self.law.k)));
        }
        self.problem().validate()
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    let text = std::fs::read_to_string(path)?;
    Config::from_json(&text)
}

/// A two-phase problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub domain: Domain,
    pub resolution: Vec<usize>,
    pub law: EnergyLaw,
    pub f_plus: Coefficient,
    pub f_minus: Coefficient,
    pub gamma_plus: Coefficient,
    pub gamma_minus: Coefficient,
    pub psi: Coefficient,
    pub c_gamma: f64,
    pub smoothing_delta: f64,
}

impl ProblemSpec {
    /// A problem with constant `f±`, `γ±`, `c_γ = 0` and the given boundary datum.
    pub fn constant(
        domain: Domain,
        resolution: &[usize],
        law: EnergyLaw,
        [f_plus, f_minus]: [f64; 2],
        [gamma_plus, gamma_minus]: [f64; 2],
        psi: Coefficient,
    ) -> Self {
        Self {
            domain,
            resolution: resolution.to_vec(),
            law,
            f_plus: Coefficient::constant(f_plus),
            f_minus: Coefficient::constant(f_minus),
            gamma_plus: Coefficient::constant(gamma_plus),
            gamma_minus: Coefficient::constant(gamma_minus),
            psi,
            c_gamma: 0.0,
            smoothing_delta: 1e-3,
        }
    }

    pub fn mesh(&self) -> Result<Mesh> {
        build_mesh(self.domain, &self.resolution)
    }

    pub fn validate(&self) -> Result<()> {
        let mesh = self.mesh()?;
        EnergyLaw::new(self.law.order, self.law.exp_cap)?;
        if !(self.c_gamma >= 0.0 && self.c_gamma.is_finite()) {
            return Err(Error::Validation(format!("c_gamma must be >= 0, got {}", self.c_gamma)));
        }
        if !(self.smoothing_delta > 0.0) {
            return Err(Error::Validation("smoothing delta must be positive".into()));
        }
        SampledProblem::new(self, &mesh).map(|_| ())
    }
}

/// Which summand [`two_phase_value`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseTerm {
    /// `f(x,u)·u`
    F,
    /// `γ(x,u)`
    Gamma,
}

/// A problem sampled onto a mesh: nodal coefficient values and their element
/// averages.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProblem {
    pub law: EnergyLaw,
    pub c_gamma: f64,
    pub f_plus: Vec<f64>,
    pub f_minus: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
    pub psi: Vec<f64>,
    /// Per-element means of the nodal samples, `[f+, f−, γ+, γ−]`.
    pub element_coeffs: Vec<[f64; 4]>,
}

impl SampledProblem {
    pub fn new(spec: &ProblemSpec, mesh: &Mesh) -> Result<Self> {
        let sp = Self::from_nodal(
            mesh,
            spec.law,
            spec.c_gamma,
            [
                spec.f_plus.sample(mesh)?,
                spec.f_minus.sample(mesh)?,
                spec.gamma_plus.sample(mesh)?,
                spec.gamma_minus.sample(mesh)?,
            ],
            spec.psi.sample(mesh)?,
        )?;
        if sp.c_gamma > 0.0 {
            let worst = sp.gamma_plus.iter().chain(&sp.gamma_minus).copied().fold(f64::INFINITY, f64::min);
            if worst < sp.c_gamma {
                return Err(Error::Validation(format!(
                    "gamma drops to {worst} below the declared lower bound c_gamma = {}",
                    sp.c_gamma
                )));
            }
        }
        Ok(sp)
    }

    pub fn from_nodal(
        mesh: &Mesh,
        law: EnergyLaw,
        c_gamma: f64,
        [f_plus, f_minus, gamma_plus, gamma_minus]: [Vec<f64>; 4],
        psi: Vec<f64>,
    ) -> Result<Self> {
        let n = mesh.node_count();
        for v in [&f_plus, &f_minus, &gamma_plus, &gamma_minus, &psi] {
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        let element_coeffs = (0..mesh.element_count())
            .map(|e| {
                let verts = mesh.element_nodes(e);
                let inv = 1.0 / verts.len() as f64;
                let mut c = [0.0; 4];
                for &v in verts {
                    c[0] += f_plus[v];
                    c[1] += f_minus[v];
                    c[2] += gamma_plus[v];
                    c[3] += gamma_minus[v];
                }
                c.map(|s| s * inv)
            })
            .collect();
        Ok(Self { law, c_gamma, f_plus, f_minus, gamma_plus, gamma_minus, psi, element_coeffs })
    }

    /// Same data with `f± ≡ 0` and `γ± ≡ 0`.
    pub fn without_phase_terms(&self) -> Self {
        let zero = vec![0.0; self.psi.len()];
        Self {
            f_plus: zero.clone(),
            f_minus: zero.clone(),
            gamma_plus: zero.clone(),
            gamma_minus: zero,
            element_coeffs: vec![[0.0; 4]; self.element_coeffs.len()],
            ..self.clone()
        }
    }

    pub fn with_law(&self, law: EnergyLaw) -> Self {
        Self { law, ..self.clone() }
    }

    /// Field equal to `ψ` on boundary nodes and `interior` elsewhere.
    pub fn apply_dirichlet(&self, mesh: &Mesh, field: &mut [f64]) {
        for (i, &b) in mesh.boundary_mask().iter().enumerate() {
            if b {
                field[i] = self.psi[i];
            }
        }
    }
}

/// Unsmoothed two-phase value at node `node`: `f(x,u)·u` or `γ(x,u)`.
///
/// `u = 0` belongs to the minus phase, except that `γ(x, 0) = 0` when a
/// positive `c_γ` is declared.
pub fn two_phase_value(problem: &SampledProblem, node: usize, u: f64, which: PhaseTerm) -> f64 {
    let plus = u > 0.0;
    match which {
        PhaseTerm::F => {
            let f = if plus { problem.f_plus[node] } else { problem.f_minus[node] };
            f * u
        }
        PhaseTerm::Gamma => {
            if u == 0.0 && problem.c_gamma > 0.0 {
                0.0
            } else if plus {
                problem.gamma_plus[node]
            } else {
                problem.gamma_minus[node]
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_1d() -> &'static str {
        r#"{
            "domain": {"kind": "interval", "bounds": [0.0, 1.0]},
            "grid": {"resolution": [8]},
            "law": {"k": "inf"},
            "coefficients": {
                "f_plus": {"kind": "constant", "params": [0.0]},
                "f_minus": {"kind": "constant", "params": [0.0]},
                "gamma_plus": {"kind": "constant", "params": [1.0]},
                "gamma_minus": {"kind": "constant", "params": [1.0]},
                "psi": {"kind": "affine", "params": [-1.0, 2.0]}
            },
            "c_gamma": 0.0,
            "solver": {"max_iters": 100, "grad_tol": 1e-9, "armijo_c": 1e-4, "backtrack": 0.5,
                       "k_schedule": [1, 2, "inf"], "delta_schedule": [0.01, 0.001], "seed": 7},
            "output_dir": "out/minimal"
        }"#
    }

    #[test]
    fn parses_minimal_config() {
        let cfg = Config::from_json(minimal_1d()).unwrap();
        assert_eq!(cfg.law.k, Order::Infinite);
        assert_eq!(cfg.grid.resolution, vec![8]);
        assert_eq!(cfg.solver.k_schedule, vec![Order::Finite(1), Order::Finite(2), Order::Infinite]);
        assert_eq!(cfg.output_dir.as_deref(), Some("out/minimal"));
        let spec = cfg.problem();
        assert_eq!(spec.law.order, Order::Infinite);
        assert_eq!(spec.smoothing_delta, 0.001);
        let again = Config::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_gamma_below_c_gamma() {
        let text = minimal_1d().replace("\"c_gamma\": 0.0", "\"c_gamma\": 2.0");
        assert!(matches!(Config::from_json(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let text = minimal_1d().replace("\"c_gamma\"", "\"c_gama\"");
        assert!(matches!(Config::from_json(&text), Err(Error::Parse(_))));
        assert!(matches!(Config::from_json("{ not json"), Err(Error::Parse(_))));
        let text = minimal_1d().replace("\"inf\"}", "\"inf\", \"extra\": 1}");
        assert!(matches!(Config::from_json(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_bad_coefficients() {
        let text = minimal_1d().replace("\"params\": [-1.0, 2.0]", "\"params\": []");
        assert!(matches!(Config::from_json(&text), Err(Error::Validation(_))));
        let text = minimal_1d().replace(
            r#""psi": {"kind": "affine", "params": [-1.0, 2.0]}"#,
            r#""psi": {"kind": "grid_sampled", "params": [1.0, 2.0]}"#,
        );
        assert!(matches!(Config::from_json(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn sample_examples() {
        let mesh = build_mesh(Domain::unit_square(), &[3, 3]).unwrap();
        assert!(Coefficient::constant(3.0).sample(&mesh).unwrap().iter().all(|&v| v == 3.0));
        let aff = Coefficient::affine(1.0, 2.0, -1.0).sample(&mesh).unwrap();
        for (v, p) in aff.iter().zip(mesh.nodes()) {
            assert_eq!(*v, 1.0 + 2.0 * p[0] - p[1]);
        }
        let table: Vec<f64> = (0..16).map(|i| i as f64 * 0.5).collect();
        assert_eq!(Coefficient::grid_sampled(table.clone()).sample(&mesh).unwrap(), table);
    }

    #[test]
    fn closed_form_derivatives_match_differences() {
        let h = 1e-5;
        let p = [0.31, 0.62];
        for c in [
            Coefficient::quadratic(0.5, 1.0, -2.0, 1.0, 3.0, -0.5),
            Coefficient::sinusoidal(0.1, 2.0, 1.0, 2.0),
            Coefficient::radial_smooth(0.4, 0.5, 1.5, 0.3),
            Coefficient::radial(0.5, 0.5, 0.25),
        ] {
            let g = c.gradient(p).unwrap();
            for a in 0..2 {
                let mut pp = p;
                let mut pm = p;
                pp[a] += h;
                pm[a] -= h;
                let fd = (c.eval(pp).unwrap() - c.eval(pm).unwrap()) / (2.0 * h);
                assert!((fd - g[a]).abs() < 1e-7, "{c:?} axis {a}");
                if let Some(hess) = c.hessian(p) {
                    for b in 0..2 {
                        let fd = (c.gradient(pp).unwrap()[b] - c.gradient(pm).unwrap()[b]) / (2.0 * h);
                        assert!((fd - hess[a][b]).abs() < 1e-6, "{c:?} hess {a}{b}");
                    }
                }
            }
        }
        assert!(Coefficient::radial(0.5, 0.5, 0.25).hessian(p).is_none());
    }

    #[test]
    fn two_phase_value_examples() {
        let mesh = build_mesh(Domain::interval(0.0, 1.0), &[2]).unwrap();
        let n = mesh.node_count();
        let mk = |c_gamma| {
            SampledProblem::from_nodal(
                &mesh,
                EnergyLaw::exponential(),
                c_gamma,
                [vec![2.0; n], vec![5.0; n], vec![7.0; n], vec![4.0; n]],
                vec![0.0; n],
            )
            .unwrap()
        };
        let p = mk(0.0);
        assert_eq!(two_phase_value(&p, 1, 3.0, PhaseTerm::F), 6.0);
        assert_eq!(two_phase_value(&p, 1, -1.0, PhaseTerm::Gamma), 4.0);
        assert_eq!(two_phase_value(&p, 1, 0.0, PhaseTerm::Gamma), 4.0);
        assert_eq!(two_phase_value(&mk(1.0), 1, 0.0, PhaseTerm::Gamma), 0.0);
        // u·f(x,u) has vanishing one-sided limits at u = 0
        for u in [1e-12, -1e-12] {
            assert!(two_phase_value(&p, 0, u, PhaseTerm::F).abs() < 1e-11);
        }
    }
}
