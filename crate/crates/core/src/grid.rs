//! Structured simplicial meshes of an interval or a rectangle, with
//! piecewise-linear nodal fields.
//!
//! Rectangles are cut into square-ish cells, and every cell is split along
//! its `(i, j) → (i+1, j+1)` diagonal into two right triangles. Node indices
//! are row-major: node `(i, j)` has index `j·(nx+1) + i`. Elements are listed
//! cell by cell in the same order (lower triangle first).

use std::io::Write;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::fmt17;

/// Computational domain: a box in one or two dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Domain {
    Interval { bounds: [f64; 2] },
    Rectangle { bounds: [f64; 4] },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain::Interval { bounds: [a, b] }
    }

    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Domain::Rectangle { bounds: [x0, x1, y0, y1] }
    }

    pub fn unit_square() -> Self {
        Self::rectangle(0.0, 1.0, 0.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Interval { bounds: [a, b] } => a.is_finite() && b.is_finite() && a < b,
            Domain::Rectangle { bounds: [x0, x1, y0, y1] } => {
                [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x0 < x1 && y0 < y1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("degenerate domain bounds {self:?}")))
        }
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Interval { bounds: [a, b] } => b - a,
            Domain::Rectangle { bounds: [x0, x1, y0, y1] } => (x1 - x0) * (y1 - y0),
        }
    }

    /// `[x0, x1, y0, y1]`, with a zero-width y-range in 1D.
    pub fn bbox(&self) -> [f64; 4] {
        match *self {
            Domain::Interval { bounds: [a, b] } => [a, b, 0.0, 0.0],
            Domain::Rectangle { bounds } => bounds,
        }
    }

    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let [x0, x1, y0, y1] = self.bbox();
        let inside_x = p[0] >= x0 - tol && p[0] <= x1 + tol;
        match self {
            Domain::Interval { .. } => inside_x,
            Domain::Rectangle { .. } => inside_x && p[1] >= y0 - tol && p[1] <= y1 + tol,
        }
    }
}

/// A segment (1D) or triangle (2D) with precomputed geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    /// Vertex node indices; only the first `dim + 1` are meaningful.
    pub vertices: [usize; 3],
    pub measure: f64,
    /// Gradients of the barycentric (hat) functions, constant on the element.
    pub shape_grads: [[f64; 2]; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    domain: Domain,
    resolution: Vec<usize>,
    nodes: Vec<[f64; 2]>,
    elements: Vec<Element>,
    boundary: Vec<bool>,
    lumped: Vec<f64>,
    spacing: [f64; 2],
}

/// Builds the structured mesh of `domain` with `resolution[axis]` cells per axis.
pub fn build_mesh(domain: Domain, resolution: &[usize]) -> Result<Mesh> {
    domain.validate()?;
    if resolution.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: resolution.len() });
    }
    if let Some(&n) = resolution.iter().find(|&&n| n < 2) {
        return Err(Error::Domain(format!("resolution must be >= 2 per axis, got {n}")));
    }
    match domain {
        Domain::Interval { bounds: [a, b] } => Ok(build_interval(domain, a, b, resolution[0])),
        Domain::Rectangle { bounds } => Ok(build_rectangle(domain, bounds, resolution[0], resolution[1])),
    }
}

fn build_interval(domain: Domain, a: f64, b: f64, n: usize) -> Mesh {
    let hx = (b - a) / n as f64;
    let nodes: Vec<[f64; 2]> = (0..=n).map(|i| [if i == n { b } else { a + i as f64 * hx }, 0.0]).collect();
    let elements = (0..n)
        .map(|i| {
            let len = nodes[i + 1][0] - nodes[i][0];
            Element {
                vertices: [i, i + 1, usize::MAX],
                measure: len,
                shape_grads: [[-1.0 / len, 0.0], [1.0 / len, 0.0], [0.0, 0.0]],
            }
        })
        .collect();
    let boundary = (0..=n).map(|i| i == 0 || i == n).collect();
    Mesh::assemble(domain, vec![n], nodes, elements, boundary, [hx, 0.0])
}

fn build_rectangle(domain: Domain, [x0, x1, y0, y1]: [f64; 4], nx: usize, ny: usize) -> Mesh {
    let hx = (x1 - x0) / nx as f64;
    let hy = (y1 - y0) / ny as f64;
    let coord = |lo: f64, hi: f64, h: f64, i: usize, n: usize| if i == n { hi } else { lo + i as f64 * h };
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([coord(x0, x1, hx, i, nx), coord(y0, y1, hy, j, ny)]);
            boundary.push(i == 0 || i == nx || j == 0 || j == ny);
        }
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (n00, n10, n01, n11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            elements.push(triangle(&nodes, [n00, n10, n11]));
            elements.push(triangle(&nodes, [n00, n11, n01]));
        }
    }
    Mesh::assemble(domain, vec![nx, ny], nodes, elements, boundary, [hx, hy])
}

fn triangle(nodes: &[[f64; 2]], v: [usize; 3]) -> Element {
    let p = v.map(|i| nodes[i]);
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut shape_grads = [[0.0; 2]; 3];
    for a in 0..3 {
        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
        shape_grads[a] = [(p[b][1] - p[c][1]) / area2, (p[c][0] - p[b][0]) / area2];
    }
    Element { vertices: v, measure: 0.5 * area2.abs(), shape_grads }
}

impl Mesh {
    fn assemble(
        domain: Domain,
        resolution: Vec<usize>,
        nodes: Vec<[f64; 2]>,
        elements: Vec<Element>,
        boundary: Vec<bool>,
        spacing: [f64; 2],
    ) -> Mesh {
        let nv = domain.dim() + 1;
        let mut lumped = vec![0.0; nodes.len()];
        for el in &elements {
            for &v in &el.vertices[..nv] {
                lumped[v] += el.measure / nv as f64;
            }
        }
        Mesh { domain, resolution, nodes, elements, boundary, lumped, spacing }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    /// Vertex indices of element `e`.
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        &self.elements[e].vertices[..self.dim() + 1]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    /// Mass-lumped nodal weights `w_i = Σ_{T∋i} |T|/(d+1)`.
    pub fn lumped_weights(&self) -> &[f64] {
        &self.lumped
    }

    /// Mesh size `h` (largest cell side).
    pub fn h(&self) -> f64 {
        self.spacing[0].max(self.spacing[1])
    }

    pub fn cell_size(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let verts = self.element_nodes(e);
        let n = verts.len() as f64;
        let mut c = [0.0; 2];
        for &v in verts {
            c[0] += self.nodes[v][0] / n;
            c[1] += self.nodes[v][1] / n;
        }
        c
    }

    /// The constant gradient of the interpolant of `field` on element `e`.
    pub fn element_gradient(&self, field: &[f64], e: usize) -> [f64; 2] {
        let el = &self.elements[e];
        let mut g = [0.0; 2];
        for (a, &v) in self.element_nodes(e).iter().enumerate() {
            g[0] += field[v] * el.shape_grads[a][0];
            g[1] += field[v] * el.shape_grads[a][1];
        }
        g
    }

    /// `Σ_T |T|·value(T)`, summed in element order.
    pub fn integrate(&self, element_values: &[f64]) -> Result<f64> {
        if element_values.len() != self.elements.len() {
            return Err(Error::DimensionMismatch { expected: self.elements.len(), got: element_values.len() });
        }
        Ok(self.elements.iter().zip(element_values).map(|(el, v)| el.measure * v).sum())
    }

    /// Element containing `p` and the barycentric coordinates of `p` in it.
    pub fn locate(&self, p: [f64; 2]) -> Result<(usize, [f64; 3])> {
        let [x0, x1, y0, y1] = self.domain.bbox();
        let tol = 1e-12 * (x1 - x0).max(y1 - y0);
        if !self.domain.contains(p, tol) {
            return Err(Error::OutOfDomain { x: p[0], y: p[1] });
        }
        let cell = |v: f64, lo: f64, h: f64, n: usize| -> (usize, f64) {
            let i = (((v - lo) / h).floor().max(0.0) as usize).min(n - 1);
            let local = ((v - lo) / h - i as f64).clamp(0.0, 1.0);
            (i, local)
        };
        match self.domain {
            Domain::Interval { .. } => {
                let (i, xi) = cell(p[0], x0, self.spacing[0], self.resolution[0]);
                Ok((i, [1.0 - xi, xi, 0.0]))
            }
            Domain::Rectangle { .. } => {
                let nx = self.resolution[0];
                let (i, xi) = cell(p[0], x0, self.spacing[0], nx);
                let (j, eta) = cell(p[1], y0, self.spacing[1], self.resolution[1]);
                let base = 2 * (j * nx + i);
                if xi >= eta {
                    // (n00, n10, n11)
                    Ok((base, [1.0 - xi, xi - eta, eta]))
                } else {
                    // (n00, n11, n01)
                    Ok((base + 1, [1.0 - eta, xi, eta - xi]))
                }
            }
        }
    }

    /// Piecewise-linear interpolation of `field` at `p`.
    pub fn interpolate(&self, field: &[f64], p: [f64; 2]) -> Result<f64> {
        let (e, lambda) = self.locate(p)?;
        // Offsets from the first vertex keep constant fields exact.
        let verts = self.element_nodes(e);
        let base = field[verts[0]];
        Ok(base + verts[1..].iter().zip(&lambda[1..]).map(|(&v, l)| l * (field[v] - base)).sum::<f64>())
    }

    /// Uniform refinement (cells halved per axis). Returns the fine mesh and,
    /// for each coarse node, its index in the fine mesh.
    pub fn refine(&self) -> Result<(Mesh, Vec<usize>)> {
        let res: Vec<usize> = self.resolution.iter().map(|n| 2 * n).collect();
        let fine = build_mesh(self.domain, &res)?;
        let map = match self.domain {
            Domain::Interval { .. } => (0..self.node_count()).map(|i| 2 * i).collect(),
            Domain::Rectangle { .. } => {
                let nx = self.resolution[0];
                (0..self.node_count())
                    .map(|k| {
                        let (i, j) = (k % (nx + 1), k / (nx + 1));
                        2 * j * (2 * nx + 1) + 2 * i
                    })
                    .collect()
            }
        };
        Ok((fine, map))
    }

    /// For each node, the elements containing it (in element order).
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.node_count()];
        for e in 0..self.element_count() {
            for &v in self.element_nodes(e) {
                out[v].push(e);
            }
        }
        out
    }

    /// Nodal values of `f` evaluated at the node coordinates.
    pub fn sample_fn(&self, f: impl Fn([f64; 2]) -> f64) -> ScalarField {
        ScalarField(self.nodes.iter().map(|&p| f(p)).collect())
    }

    /// Writes `x,y,u` (or `x,u` in 1D), one row per node, 17 significant digits.
    pub fn write_field_csv<W: Write>(&self, field: &[f64], mut out: W) -> Result<()> {
        if field.len() != self.node_count() {
            return Err(Error::DimensionMismatch { expected: self.node_count(), got: field.len() });
        }
        if self.dim() == 1 {
            writeln!(out, "x,u")?;
            for (p, u) in self.nodes.iter().zip(field) {
                writeln!(out, "{},{}", fmt17(p[0]), fmt17(*u))?;
            }
        } else {
            writeln!(out, "x,y,u")?;
            for (p, u) in self.nodes.iter().zip(field) {
                writeln!(out, "{},{},{}", fmt17(p[0]), fmt17(p[1]), fmt17(*u))?;
            }
        }
        Ok(())
    }
}

/// Reads the `u` column of a field CSV written by [`Mesh::write_field_csv`].
pub fn read_field_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let ucol = cols
        .iter()
        .position(|c| *c == "u")
        .ok_or_else(|| Error::Parse(format!("no `u` column in header {header:?}")))?;
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(row, line)| {
            line.split(',')
                .nth(ucol)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("bad value on data row {row}")))
        })
        .collect()
}

/// One real per mesh node.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField(pub Vec<f64>);

impl ScalarField {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::DimensionMismatch { expected: mesh.node_count(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("field contains non-finite values".into()));
        }
        Ok(ScalarField(values))
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        ScalarField(vec![0.0; mesh.node_count()])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ScalarField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ScalarField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ScalarField {
    fn from(v: Vec<f64>) -> Self {
        ScalarField(v)
    }
}
