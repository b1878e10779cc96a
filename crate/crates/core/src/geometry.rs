//! Free-boundary extraction and measurement on piecewise-linear fields.
//!
//! Band measures are exact for the linear interpolant: on a triangle with
//! sorted nodal values `v0 ≤ v1 ≤ v2` the fraction of area where `u < s` is
//! `(s−v0)²/((v2−v0)(v1−v0))` below `v1` and `1 − (v2−s)²/((v2−v0)(v2−v1))`
//! above it.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Mesh;
use crate::output::fmt17;

pub type Polyline = Vec<[f64; 2]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

/// Output of [`level_set`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevelSet {
    pub level: f64,
    pub polylines: Vec<Polyline>,
    /// Elements on which the field is identically equal to the level.
    pub plateau_elements: Vec<usize>,
}

impl LevelSet {
    pub fn length(&self) -> f64 {
        self.polylines.iter().map(|p| polyline_length(p)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundarySet {
    pub polylines: Vec<Polyline>,
    pub level: f64,
    pub side: Side,
    pub length_marching: f64,
    pub perimeter_coarea: f64,
    pub epsilon: f64,
    pub plateau_elements: Vec<usize>,
}

pub fn polyline_length(p: &[[f64; 2]]) -> f64 {
    p.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
}

/// Where a level-set vertex sits: on a mesh node or inside an edge `(a, b)`, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Key {
    Node(usize),
    Edge(usize, usize),
}

struct Segment {
    ends: [(Key, [f64; 2]); 2],
}

fn crossing(mesh: &Mesh, u: &[f64], t: f64, a: usize, b: usize) -> (Key, [f64; 2]) {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    let pa = mesh.nodes()[a];
    let pb = mesh.nodes()[b];
    let s = (t - u[a]) / (u[b] - u[a]);
    if s <= 0.0 {
        return (Key::Node(a), pa);
    }
    if s >= 1.0 {
        return (Key::Node(b), pb);
    }
    (Key::Edge(a, b), [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])])
}

fn node_point(mesh: &Mesh, v: usize) -> (Key, [f64; 2]) {
    (Key::Node(v), mesh.nodes()[v])
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Chains segments into polylines through shared endpoint keys. Open chains
/// are traced first from their lowest free end; closed loops repeat their
/// first vertex.
fn chain(segments: Vec<Segment>) -> Vec<Polyline> {
    let mut incident: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (i, s) in segments.iter().enumerate() {
        incident.entry(s.ends[0].0).or_default().push(i);
        incident.entry(s.ends[1].0).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let trace = |start: Key, first: usize, used: &mut [bool]| -> Polyline {
        let mut key = start;
        let mut seg = first;
        let s0 = &segments[seg];
        let mut line = vec![if s0.ends[0].0 == start { s0.ends[0].1 } else { s0.ends[1].1 }];
        loop {
            used[seg] = true;
            let s = &segments[seg];
            let next = if s.ends[0].0 == key { s.ends[1] } else { s.ends[0] };
            line.push(next.1);
            key = next.0;
            match incident[&key].iter().find(|&&j| !used[j]) {
                Some(&j) => seg = j,
                None => break,
            }
        }
        line
    };
    let ends: Vec<(Key, usize)> =
        incident.iter().filter(|(_, segs)| segs.len() % 2 == 1).map(|(k, segs)| (*k, segs[0])).collect();
    for (k, _) in ends {
        if let Some(&first) = incident[&k].iter().find(|&&j| !used[j]) {
            out.push(trace(k, first, &mut used));
        }
    }
    for i in 0..segments.len() {
        if !used[i] {
            out.push(trace(segments[i].ends[0].0, i, &mut used));
        }
    }
    out
}

fn points_1d(mesh: &Mesh, u: &[f64], t: f64, inside: impl Fn(f64) -> bool) -> Vec<Polyline> {
    let mut keys: BTreeMap<Key, [f64; 2]> = BTreeMap::new();
    for e in 0..mesh.element_count() {
        let v = mesh.element_nodes(e);
        let (a, b) = (v[0], v[1]);
        if inside(u[a]) != inside(u[b]) {
            let (k, p) = crossing(mesh, u, t, a, b);
            keys.insert(k, p);
        }
    }
    let mut pts: Vec<[f64; 2]> = keys.into_values().collect();
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]));
    pts.dedup();
    pts.into_iter().map(|p| vec![p]).collect()
}

/// Marching-triangles extraction of `{u_h = t}`. Edges lying in the level set
/// are emitted once; triangles with all three values equal to `t` are
/// reported in `plateau_elements` and contribute only through their
/// non-plateau neighbours. In 1D each crossing is a one-point polyline.
pub fn level_set(mesh: &Mesh, u: &[f64], t: f64) -> LevelSet {
    let mut plateau_elements = Vec::new();
    if mesh.dim() == 1 {
        for e in 0..mesh.element_count() {
            if mesh.element_nodes(e).iter().all(|&v| u[v] == t) {
                plateau_elements.push(e);
            }
        }
        // A node exactly at t with a nonzero neighbour, or a sign change.
        let s = |x: f64| sign(x - t);
        let mut keys: BTreeMap<Key, [f64; 2]> = BTreeMap::new();
        for e in 0..mesh.element_count() {
            let v = mesh.element_nodes(e);
            let (a, b) = (v[0], v[1]);
            match (s(u[a]), s(u[b])) {
                (0, 0) => {}
                (0, _) => {
                    keys.insert(Key::Node(a), mesh.nodes()[a]);
                }
                (_, 0) => {
                    keys.insert(Key::Node(b), mesh.nodes()[b]);
                }
                (x, y) if x != y => {
                    let (k, p) = crossing(mesh, u, t, a, b);
                    keys.insert(k, p);
                }
                _ => {}
            }
        }
        let polylines = keys.into_values().map(|p| vec![p]).collect();
        return LevelSet { level: t, polylines, plateau_elements };
    }
    let mut segments = Vec::new();
    let mut full_edges = BTreeSet::new();
    for e in 0..mesh.element_count() {
        let v = mesh.element_nodes(e);
        let s = [sign(u[v[0]] - t), sign(u[v[1]] - t), sign(u[v[2]] - t)];
        let zeros: Vec<usize> = (0..3).filter(|&i| s[i] == 0).collect();
        match zeros.len() {
            3 => plateau_elements.push(e),
            2 => {
                let (a, b) = (v[zeros[0]], v[zeros[1]]);
                let edge = (a.min(b), a.max(b));
                if full_edges.insert(edge) {
                    segments.push(Segment { ends: [node_point(mesh, edge.0), node_point(mesh, edge.1)] });
                }
            }
            1 => {
                let z = zeros[0];
                let (b, c) = (v[(z + 1) % 3], v[(z + 2) % 3]);
                if s[(z + 1) % 3] != s[(z + 2) % 3] {
                    segments.push(Segment { ends: [node_point(mesh, v[z]), crossing(mesh, u, t, b, c)] });
                }
            }
            _ => {
                if s[0] == s[1] && s[1] == s[2] {
                    continue;
                }
                // The vertex whose sign differs from the other two.
                let lone = (0..3).find(|&i| s[i] != s[(i + 1) % 3] && s[i] != s[(i + 2) % 3]).unwrap();
                let a = v[lone];
                segments.push(Segment {
                    ends: [crossing(mesh, u, t, a, v[(lone + 1) % 3]), crossing(mesh, u, t, a, v[(lone + 2) % 3])],
                });
            }
        }
    }
    LevelSet { level: t, polylines: chain(segments), plateau_elements }
}

/// Boundary of the phase `{u > 0}` (plus) or `{u < 0}` (minus) of the
/// interpolant. Unlike [`level_set`] at 0, a plateau of zeros is attributed
/// to the complement of the phase, so dead cores separate the two sides.
pub fn phase_boundary(mesh: &Mesh, u: &[f64], side: Side) -> LevelSet {
    let inside = |x: f64| match side {
        Side::Plus => x > 0.0,
        Side::Minus => x < 0.0,
    };
    let mut plateau_elements = Vec::new();
    for e in 0..mesh.element_count() {
        if mesh.element_nodes(e).iter().all(|&v| u[v] == 0.0) {
            plateau_elements.push(e);
        }
    }
    if mesh.dim() == 1 {
        return LevelSet { level: 0.0, polylines: points_1d(mesh, u, 0.0, inside), plateau_elements };
    }
    let mut segments = Vec::new();
    let mut node_edges = BTreeSet::new();
    for e in 0..mesh.element_count() {
        let v = mesh.element_nodes(e);
        let ins = [inside(u[v[0]]), inside(u[v[1]]), inside(u[v[2]])];
        let n_in = ins.iter().filter(|&&b| b).count();
        if n_in == 0 || n_in == 3 {
            continue;
        }
        let lone = (0..3).find(|&i| ins[i] != ins[(i + 1) % 3] && ins[i] != ins[(i + 2) % 3]).unwrap();
        let a = v[lone];
        let p = crossing(mesh, u, 0.0, a, v[(lone + 1) % 3]);
        let q = crossing(mesh, u, 0.0, a, v[(lone + 2) % 3]);
        if p.0 == q.0 {
            continue;
        }
        if let (Key::Node(x), Key::Node(y)) = (p.0, q.0) {
            if !node_edges.insert((x.min(y), x.max(y))) {
                continue;
            }
        }
        segments.push(Segment { ends: [p, q] });
    }
    LevelSet { level: 0.0, polylines: chain(segments), plateau_elements }
}

fn sorted_values(mesh: &Mesh, u: &[f64], e: usize) -> Vec<f64> {
    let mut v: Vec<f64> = mesh.element_nodes(e).iter().map(|&i| u[i]).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Fraction of the element where `u < s` (`strict`) or `u ≤ s`.
fn cdf(v: &[f64], s: f64, strict: bool) -> f64 {
    let lo = v[0];
    let hi = v[v.len() - 1];
    if lo == hi {
        let hit = if strict { lo < s } else { lo <= s };
        return if hit { 1.0 } else { 0.0 };
    }
    if s <= lo {
        return 0.0;
    }
    if s >= hi {
        return 1.0;
    }
    if v.len() == 2 {
        return (s - lo) / (hi - lo);
    }
    let mid = v[1];
    if s <= mid {
        (s - lo) * (s - lo) / ((hi - lo) * (mid - lo))
    } else {
        1.0 - (hi - s) * (hi - s) / ((hi - lo) * (hi - mid))
    }
}

/// Measure of `{a < u < b}` on element `e`.
fn open_band(mesh: &Mesh, u: &[f64], e: usize, a: f64, b: f64) -> f64 {
    let v = sorted_values(mesh, u, e);
    mesh.elements()[e].measure * (cdf(&v, b, true) - cdf(&v, a, false)).max(0.0)
}

/// Measure of `{a ≤ u ≤ b}` on element `e`.
fn closed_band(mesh: &Mesh, u: &[f64], e: usize, a: f64, b: f64) -> f64 {
    let v = sorted_values(mesh, u, e);
    mesh.elements()[e].measure * (cdf(&v, b, false) - cdf(&v, a, true)).max(0.0)
}

fn grad_norm(mesh: &Mesh, u: &[f64], e: usize) -> f64 {
    let g = mesh.element_gradient(u, e);
    g[0].hypot(g[1])
}

/// `(1/ε)·∫_{band} |∇u|` with band `{0 < u < ε}` (plus) or `{−ε < u < 0}` (minus).
pub fn coarea_perimeter(mesh: &Mesh, u: &[f64], epsilon: f64, side: Side) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let (a, b) = match side {
        Side::Plus => (0.0, epsilon),
        Side::Minus => (-epsilon, 0.0),
    };
    let total: f64 = (0..mesh.element_count()).map(|e| open_band(mesh, u, e, a, b) * grad_norm(mesh, u, e)).sum();
    Ok(total / epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub epsilon: f64,
    /// Measure of `{|u| ≤ ε}`.
    pub band_measure: f64,
    /// `∫_{|u| ≤ ε} |∇u|²`.
    pub band_dirichlet: f64,
}

/// Thin-band table sorted by ascending `ε`.
pub fn thin_band_stats(mesh: &Mesh, u: &[f64], epsilons: &[f64]) -> Result<Vec<BandRow>> {
    if let Some(e) = epsilons.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::Domain(format!("band widths must be nonnegative, got {e}")));
    }
    let mut eps = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    Ok(eps
        .into_iter()
        .map(|epsilon| {
            let (mut measure, mut dirichlet) = (0.0, 0.0);
            for e in 0..mesh.element_count() {
                let m = closed_band(mesh, u, e, -epsilon, epsilon);
                let g = grad_norm(mesh, u, e);
                measure += m;
                dirichlet += m * g * g;
            }
            BandRow { epsilon, band_measure: measure, band_dirichlet: dirichlet }
        })
        .collect())
}

/// Least-squares line `y = c·x` through the origin; returns `(c, R²)` with
/// `R² = 1 − SS_res/SS_tot` about the mean of `y`.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    (
        c,
        if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else if ss_res == 0.0 {
            1.0
        } else {
            0.0
        },
    )
}

/// Least-squares line `y = a + b·x`; returns `(b, R²)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Box-counting estimate: the slope of `ln N(s)` against `ln(1/s)`, where
/// `N(s)` counts occupied cells of a grid of size `s` anchored at the lower
/// corner of the bounding box. Segments are sampled at spacing `s/8`.
pub fn box_counting_dimension(polylines: &[Polyline], scales: &[f64]) -> Result<(f64, f64)> {
    let points: Vec<[f64; 2]> = polylines.iter().flatten().copied().collect();
    if points.is_empty() {
        return Err(Error::DegenerateInput("no polyline vertices".into()));
    }
    if scales.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 scales, got {}", scales.len())));
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::Domain(format!("scales must be positive, got {s}")));
    }
    let x0 = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let y0 = points.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
    let mut xs = Vec::with_capacity(scales.len());
    let mut ys = Vec::with_capacity(scales.len());
    for &s in scales {
        let cell = |v: f64| (((v / s).ceil() - 1.0).max(0.0)) as i64;
        let mut occupied = HashSet::new();
        let mut mark = |p: [f64; 2]| {
            occupied.insert((cell(p[0] - x0), cell(p[1] - y0)));
        };
        for line in polylines {
            if let Some(&p) = line.first() {
                mark(p);
            }
            for w in line.windows(2) {
                let len = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
                let steps = (8.0 * len / s).ceil().max(1.0) as usize;
                for i in 1..=steps {
                    let r = i as f64 / steps as f64;
                    mark([w[0][0] + r * (w[1][0] - w[0][0]), w[0][1] + r * (w[1][1] - w[0][1])]);
                }
            }
        }
        xs.push((1.0 / s).ln());
        ys.push((occupied.len() as f64).ln());
    }
    Ok(fit_line(&xs, &ys))
}

/// Phase boundary of `side` with its marching length and coarea perimeter at `epsilon`.
pub fn free_boundary(mesh: &Mesh, u: &[f64], side: Side, epsilon: f64) -> Result<FreeBoundarySet> {
    let set = phase_boundary(mesh, u, side);
    Ok(FreeBoundarySet {
        length_marching: set.length(),
        perimeter_coarea: coarea_perimeter(mesh, u, epsilon, side)?,
        polylines: set.polylines,
        level: 0.0,
        side,
        epsilon,
        plateau_elements: set.plateau_elements,
    })
}

/// `polyline_id,vertex_index,x,y`
pub fn write_polylines_csv<W: Write>(polylines: &[Polyline], mut out: W) -> Result<()> {
    writeln!(out, "polyline_id,vertex_index,x,y")?;
    for (id, line) in polylines.iter().enumerate() {
        for (i, p) in line.iter().enumerate() {
            writeln!(out, "{id},{i},{},{}", fmt17(p[0]), fmt17(p[1]))?;
        }
    }
    Ok(())
}

/// `epsilon,band_measure,band_dirichlet,perimeter_plus,perimeter_minus`
pub fn write_band_stats_csv<W: Write>(mesh: &Mesh, u: &[f64], epsilons: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "epsilon,band_measure,band_dirichlet,perimeter_plus,perimeter_minus")?;
    for row in thin_band_stats(mesh, u, epsilons)? {
        let (plus, minus) = if row.epsilon > 0.0 {
            (coarea_perimeter(mesh, u, row.epsilon, Side::Plus)?, coarea_perimeter(mesh, u, row.epsilon, Side::Minus)?)
        } else {
            (f64::NAN, f64::NAN)
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt17(row.epsilon),
            fmt17(row.band_measure),
            fmt17(row.band_dirichlet),
            fmt17(plus),
            fmt17(minus)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mesh, Domain};
    use std::f64::consts::PI;

    fn square(n: usize) -> Mesh {
        build_mesh(Domain::unit_square(), &[n, n]).unwrap()
    }

    #[test]
    fn vertical_line_level_set() {
        for n in [8, 9] {
            let mesh = square(n);
            let u = mesh.sample_fn(|p| p[0] - 0.5);
            let ls = level_set(&mesh, &u, 0.0);
            assert_eq!(ls.polylines.len(), 1, "n={n}");
            assert!((ls.length() - 1.0).abs() < 1e-12);
            assert!(ls.polylines[0].iter().all(|p| (p[0] - 0.5).abs() < 1e-12));
        }
    }

    #[test]
    fn circle_closes_and_approaches_its_length() {
        let mesh = square(128);
        let u = mesh.sample_fn(|p| (p[0] - 0.5).hypot(p[1] - 0.5) - 0.25);
        let ls = level_set(&mesh, &u, 0.0);
        assert_eq!(ls.polylines.len(), 1);
        let line = &ls.polylines[0];
        assert_eq!(line.first(), line.last());
        assert!((ls.length() - PI / 2.0).abs() / (PI / 2.0) < 2e-3);
    }

    #[test]
    fn constant_field_above_level_is_empty() {
        let mesh = square(4);
        let u = vec![1.0; mesh.node_count()];
        assert!(level_set(&mesh, &u, 2.0).is_empty());
        let ls = level_set(&mesh, &u, 1.0);
        assert!(ls.is_empty());
        assert_eq!(ls.plateau_elements.len(), mesh.element_count());
    }

    #[test]
    fn dead_core_separates_sides() {
        let mesh = square(8);
        let u = mesh.sample_fn(|p| {
            if p[0] < 0.25 {
                p[0] - 0.25
            } else if p[0] > 0.75 {
                p[0] - 0.75
            } else {
                0.0
            }
        });
        let plus = phase_boundary(&mesh, &u, Side::Plus);
        let minus = phase_boundary(&mesh, &u, Side::Minus);
        assert!(plus.polylines.iter().flatten().all(|p| p[0] == 0.75));
        assert!(minus.polylines.iter().flatten().all(|p| p[0] == 0.25));
        assert!((plus.length() - 1.0).abs() < 1e-12 && (minus.length() - 1.0).abs() < 1e-12);
        assert_eq!(plus.plateau_elements.len(), 2 * 4 * 8);
        assert_eq!(level_set(&mesh, &u, 0.0).plateau_elements.len(), 2 * 4 * 8);
    }

    #[test]
    fn coarea_is_exact_for_affine_fields() {
        let mesh = square(16);
        let u = mesh.sample_fn(|p| p[0] - 0.5);
        for eps in [0.25, 0.1, 0.013] {
            assert!((coarea_perimeter(&mesh, &u, eps, Side::Plus).unwrap() - 1.0).abs() < 1e-12);
            assert!((coarea_perimeter(&mesh, &u, eps, Side::Minus).unwrap() - 1.0).abs() < 1e-12);
        }
        let neg = vec![-1.0; mesh.node_count()];
        assert_eq!(coarea_perimeter(&mesh, &neg, 0.1, Side::Plus).unwrap(), 0.0);
        assert!(coarea_perimeter(&mesh, &u, 0.0, Side::Plus).is_err());
    }

    #[test]
    fn thin_band_of_a_slab() {
        let mesh = square(16);
        let u = mesh.sample_fn(|p| p[0] - 0.5);
        let rows = thin_band_stats(&mesh, &u, &[0.1, 0.05]).unwrap();
        assert_eq!(rows[0].epsilon, 0.05);
        assert!((rows[1].band_measure - 0.2).abs() < 1e-12);
        assert!((rows[1].band_dirichlet - 0.2).abs() < 1e-12);
        let one = vec![1.0; mesh.node_count()];
        let rows = thin_band_stats(&mesh, &one, &[0.5]).unwrap();
        assert_eq!((rows[0].band_measure, rows[0].band_dirichlet), (0.0, 0.0));
    }

    #[test]
    fn band_measure_matches_sampling_on_one_triangle() {
        let mesh = build_mesh(Domain::unit_square(), &[2, 2]).unwrap();
        let u = mesh.sample_fn(|p| 0.3 * p[0] + 0.9 * p[1] - 0.4 + 0.2 * p[0] * p[1]);
        let e = 3;
        let exact = open_band(&mesh, &u, e, -0.1, 0.05);
        let v = mesh.element_nodes(e);
        let m = 400;
        let mut hits = 0usize;
        let mut total = 0usize;
        for i in 0..m {
            for j in 0..m - i {
                let (a, b) = ((i as f64 + 1.0 / 3.0) / m as f64, (j as f64 + 1.0 / 3.0) / m as f64);
                let val = (1.0 - a - b) * u[v[0]] + a * u[v[1]] + b * u[v[2]];
                total += 1;
                if val > -0.1 && val < 0.05 {
                    hits += 1;
                }
            }
        }
        let sampled = mesh.elements()[e].measure * hits as f64 / total as f64;
        assert!((exact - sampled).abs() < 5e-4, "{exact} vs {sampled}");
    }

    #[test]
    fn box_counting_of_a_segment_a_point_and_a_circle() {
        let scales = [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
        let (d, r2) = box_counting_dimension(&[vec![[0.0, 0.0], [1.0, 0.0]]], &scales).unwrap();
        assert!((d - 1.0).abs() < 0.05 && r2 > 0.99);
        let (d, _) = box_counting_dimension(&[vec![[0.3, 0.4]]], &scales).unwrap();
        assert!(d.abs() < 0.05);
        let circle: Polyline = (0..=400)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 400.0;
                [0.5 + 0.25 * a.cos(), 0.5 + 0.25 * a.sin()]
            })
            .collect();
        let fine = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
        let (d, _) = box_counting_dimension(&[circle], &fine).unwrap();
        assert!((d - 1.0).abs() < 0.1, "{d}");
        assert!(matches!(box_counting_dimension(&[], &scales), Err(Error::DegenerateInput(_))));
        assert!(box_counting_dimension(&[vec![[0.0, 0.0]]], &scales[..2]).is_err());
    }

    #[test]
    fn one_dimensional_level_points() {
        let mesh = build_mesh(Domain::interval(0.0, 1.0), &[10]).unwrap();
        let u = mesh.sample_fn(|p| p[0] - 0.35);
        let ls = level_set(&mesh, &u, 0.0);
        assert_eq!(ls.polylines.len(), 1);
        assert!((ls.polylines[0][0][0] - 0.35).abs() < 1e-12);
        assert!((coarea_perimeter(&mesh, &u, 0.05, Side::Plus).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn csv_writers() {
        let mut buf = Vec::new();
        write_polylines_csv(&[vec![[0.0, 1.0], [0.5, 1.0]]], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("polyline_id,vertex_index,x,y\n0,0,"));
        let mesh = square(4);
        let u = mesh.sample_fn(|p| p[0] - 0.5);
        let mut buf = Vec::new();
        write_band_stats_csv(&mesh, &u, &[0.1, 0.2], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
    }
}
