//! Conforming P1 triangulations of the annular region between two curves
//! (or of the region inside one curve), uniform red refinement with
//! boundary-midpoint projection onto the exact curves, and trace maps for
//! the boundary degrees of freedom.
//!
//! The annulus mesher blends matched boundary samplings ring by ring; the
//! disc mesher uses scaled copies of the boundary curve zipped together with
//! a center fan. Both finish with guarded Laplacian smoothing (interior
//! vertices only, moves rejected if they would invert an element) and a full
//! invariant verification, so a returned mesh is always valid.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::curves::{check_enclosure, CurveError, ParametricCurve};
use crate::{dot, norm, sub, Point2};

/// Quality floor in degrees, tolerant of the stretched boundary-layer
/// elements the annular blend produces.
pub const MIN_ANGLE_DEG: f64 = 15.0;
/// Boundary vertices must satisfy the curve equation to this tolerance.
pub const BOUNDARY_TOL: f64 = 1e-12;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryId {
    Gamma,
    Gamma0,
}

/// A mesh vertex lying on a parametric boundary, with its curve parameter.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryVertex {
    pub vertex: usize,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<Point2>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Ordered loop on the inner curve; empty for disc meshes.
    pub boundary_gamma: Vec<BoundaryVertex>,
    /// Ordered loop on the outer curve.
    pub boundary_gamma0: Vec<BoundaryVertex>,
    /// Longest triangle edge.
    pub h: f64,
}

/// Restriction data for one boundary: the ordered vertex loop with curve
/// parameters; panel i joins entry i to entry i+1 (cyclically).
#[derive(Debug, Clone)]
pub struct TraceMap {
    pub boundary: BoundaryId,
    pub vertices: Vec<usize>,
    pub thetas: Vec<f64>,
}

impl TraceMap {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Parameter spans of the panels, each with end > start (the wrap panel
    /// extends past 2 pi).
    pub fn panel_spans(&self) -> Vec<(f64, f64)> {
        let n = self.thetas.len();
        (0..n)
            .map(|i| {
                let t0 = self.thetas[i];
                let mut t1 = self.thetas[(i + 1) % n];
                if t1 <= t0 {
                    t1 += TAU;
                }
                (t0, t1)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MeshReport {
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub h: f64,
    pub min_angle_deg: f64,
    pub euler_characteristic: i64,
    pub total_area: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("target mesh size must be positive and finite, got {target_h}")]
    InvalidTargetH { target_h: f64 },
    #[error("triangle {index} has non-positive area {area:.3e}")]
    InvertedTriangle { index: usize, area: f64 },
    #[error("minimum angle {found:.2} deg below the {required} deg floor")]
    QualityViolated { found: f64, required: f64 },
    #[error("mesh is not conforming: {detail}")]
    NotConforming { detail: String },
    #[error("Euler characteristic {got}, expected {expected}")]
    EulerMismatch { got: i64, expected: i64 },
    #[error("boundary vertex {vertex} off its curve by {distance:.3e}")]
    BoundaryOffCurve { vertex: usize, distance: f64 },
    #[error("mesh size {h:.4} exceeds the target {target_h:.4}")]
    TargetExceeded { h: f64, target_h: f64 },
    #[error("malformed mesh text: {detail}")]
    ParseError { detail: String },
}

impl Mesh {
    pub fn trace_map(&self, boundary: BoundaryId) -> TraceMap {
        let list = match boundary {
            BoundaryId::Gamma => &self.boundary_gamma,
            BoundaryId::Gamma0 => &self.boundary_gamma0,
        };
        TraceMap {
            boundary,
            vertices: list.iter().map(|b| b.vertex).collect(),
            thetas: list.iter().map(|b| b.theta).collect(),
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    fn is_disc(&self) -> bool {
        self.boundary_gamma.is_empty()
    }
}

fn signed_area(vertices: &[Point2], tri: [usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| vertices[i]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn longest_edge(vertices: &[Point2], tri: [usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| vertices[i]);
    norm(sub(b, a)).max(norm(sub(c, b))).max(norm(sub(a, c)))
}

fn min_angle_deg(vertices: &[Point2], tri: [usize; 3]) -> f64 {
    let p = tri.map(|i| vertices[i]);
    let mut worst = f64::INFINITY;
    for i in 0..3 {
        let u = sub(p[(i + 1) % 3], p[i]);
        let v = sub(p[(i + 2) % 3], p[i]);
        let cosine = dot(u, v) / (norm(u) * norm(v));
        worst = worst.min(cosine.clamp(-1.0, 1.0).acos());
    }
    worst.to_degrees()
}

/// Triangulates the region between `gamma` (inner) and `gamma0` (outer) with
/// max triangle diameter at most `target_h`.
pub fn generate_annulus(
    gamma: &ParametricCurve,
    gamma0: &ParametricCurve,
    target_h: f64,
) -> Result<Mesh, MeshError> {
    check_target(target_h)?;
    check_enclosure(gamma, gamma0, 0.1)?;
    // Element edges at ~h/1.5 leave headroom so diagonals and smoothing keep
    // diameters under the target.
    let side = target_h / 1.5;
    let center = gamma.center;
    let map_in = polar_map(gamma, center);
    let map_out = polar_map(gamma0, center);
    let anchor = map_in.phis[0];

    // Nodes sit on common rays, so the blend lines are radial and never
    // cross; ray angles equidistribute chord length and curvature turning,
    // and the count grows until every chord fits.
    let density = ray_density(&[(gamma, &map_in), (gamma0, &map_out)], center, anchor, side);
    let mut n_theta = density.suggested_count();
    let (t_in, t_out, inner, outer) = loop {
        let phis = density.rays(n_theta);
        let t_in = params_at_phis(gamma, center, &map_in, &phis);
        let t_out = params_at_phis(gamma0, center, &map_out, &phis);
        let inner: Vec<Point2> = t_in.iter().map(|&t| gamma.eval(t)).collect();
        let outer: Vec<Point2> = t_out.iter().map(|&t| gamma0.eval(t)).collect();
        if max_chord(&inner).max(max_chord(&outer)) <= side || n_theta > 100_000 {
            break (t_in, t_out, inner, outer);
        }
        n_theta = (n_theta * 13 + 9) / 10;
    };
    // The outer curve usually needs denser rays than the inner one, leaving
    // inner chords much shorter than `side`; grade the layer spacing per ray
    // so the first layer matches the local inner chord.
    let local_chord = |pts: &[Point2], i: usize| -> f64 {
        let n = pts.len();
        norm(sub(pts[(i + 1) % n], pts[i])).max(norm(sub(pts[i], pts[(i + n - 1) % n])))
    };
    let deltas_in: Vec<f64> = (0..n_theta)
        .map(|i| local_chord(&inner, i).clamp(0.1 * side, side))
        .collect();
    let deltas_out: Vec<f64> = (0..n_theta)
        .map(|i| local_chord(&outer, i).clamp(0.1 * side, side))
        .collect();
    let gaps: Vec<f64> = (0..n_theta).map(|i| norm(sub(outer[i], inner[i]))).collect();
    let n_layers = (0..n_theta)
        .map(|i| layers_needed(deltas_in[i], deltas_out[i], gaps[i], side))
        .max()
        .unwrap()
        .max(2);

    let mut vertices = Vec::with_capacity(n_theta * (n_layers + 1));
    vertices.resize(n_theta * (n_layers + 1), [0.0, 0.0]);
    for i in 0..n_theta {
        let fractions = layer_fractions(deltas_in[i], deltas_out[i], gaps[i], side, n_layers);
        let (a, b) = (inner[i], outer[i]);
        for (layer, &s) in fractions.iter().enumerate() {
            vertices[layer * n_theta + i] =
                [(1.0 - s) * a[0] + s * b[0], (1.0 - s) * a[1] + s * b[1]];
        }
    }
    let mut triangles = Vec::with_capacity(2 * n_theta * n_layers);
    for layer in 0..n_layers {
        for i in 0..n_theta {
            let j = (i + 1) % n_theta;
            let (r0, r1) = (layer * n_theta, (layer + 1) * n_theta);
            // Split each quad along whichever diagonal gives the better
            // worst angle.
            let quality = |t: [usize; 3]| min_angle_deg(&vertices, t);
            let split_a = ([r0 + i, r1 + i, r1 + j], [r0 + i, r1 + j, r0 + j]);
            let split_b = ([r0 + i, r1 + i, r0 + j], [r1 + i, r1 + j, r0 + j]);
            let qa = quality(split_a.0).min(quality(split_a.1));
            let qb = quality(split_b.0).min(quality(split_b.1));
            let chosen = if qa >= qb { split_a } else { split_b };
            triangles.push(chosen.0);
            triangles.push(chosen.1);
        }
    }
    orient_ccw(&vertices, &mut triangles);

    let boundary_gamma = (0..n_theta)
        .map(|i| BoundaryVertex { vertex: i, theta: t_in[i] })
        .collect();
    let boundary_gamma0 = (0..n_theta)
        .map(|i| BoundaryVertex { vertex: n_layers * n_theta + i, theta: t_out[i] })
        .collect();

    let mut mesh = Mesh {
        vertices,
        triangles,
        boundary_gamma,
        boundary_gamma0,
        h: 0.0,
    };
    smooth(&mut mesh, 60, 1.45 * side);
    finalize(&mut mesh, Some(gamma), gamma0, Some(target_h))?;
    Ok(mesh)
}

/// Triangulates the interior of `gamma0` with max triangle diameter at most
/// `target_h`; the result has an empty inner boundary.
pub fn generate_disc(gamma0: &ParametricCurve, target_h: f64) -> Result<Mesh, MeshError> {
    check_target(target_h)?;
    let side = target_h / 1.5;
    let center = gamma0.center;
    let map = polar_map(gamma0, center);
    let anchor = map.phis[0];
    let density = ray_density(&[(gamma0, &map)], center, anchor, side);
    let mut n_outer = density.suggested_count();
    let outer_params = loop {
        let params = params_at_phis(gamma0, center, &map, &density.rays(n_outer));
        let points: Vec<Point2> = params.iter().map(|&t| gamma0.eval(t)).collect();
        if max_chord(&points) <= side || n_outer > 100_000 {
            break params;
        }
        n_outer = (n_outer * 13 + 9) / 10;
    };
    let r_max = (0..512)
        .map(|i| norm(sub(gamma0.eval(i as f64 / 512.0 * TAU), center)))
        .fold(0.0, f64::max);
    let n_rings = ((r_max / side).ceil() as usize).max(2);

    // Vertex 0 is the center; rings go inside out, each a scaled copy of the
    // boundary curve with vertex count proportional to its radius. All rings
    // share the boundary's polar angles, so ring nodes line up radially.
    // Neighbor counts stay within the growth bound to keep zipper edges
    // short.
    let mut counts = vec![0usize; n_rings + 1];
    counts[n_rings] = n_outer;
    for ring in (1..n_rings).rev() {
        let ideal = ((n_outer * ring + n_rings - 1) / n_rings).max(6);
        let floor_ratio = (counts[ring + 1] as f64 / LAYER_GROWTH).ceil() as usize;
        counts[ring] = ideal.max(floor_ratio).min(counts[ring + 1]);
    }
    let mut vertices = vec![center];
    let mut ring_start = Vec::with_capacity(n_rings);
    let mut ring_count = Vec::with_capacity(n_rings);
    let mut outer_thetas = Vec::new();
    for ring in 1..=n_rings {
        let count = counts[ring];
        let params = if ring == n_rings {
            outer_params.clone()
        } else {
            params_at_phis(gamma0, center, &map, &density.rays(count))
        };
        let scale = ring as f64 / n_rings as f64;
        ring_start.push(vertices.len());
        ring_count.push(count);
        for &t in &params {
            let p = gamma0.eval(t);
            vertices.push([
                center[0] + scale * (p[0] - center[0]),
                center[1] + scale * (p[1] - center[1]),
            ]);
        }
        if ring == n_rings {
            outer_thetas = params;
        }
    }

    let mut triangles = Vec::new();
    // Center fan to the first ring.
    for i in 0..ring_count[0] {
        let j = (i + 1) % ring_count[0];
        triangles.push([0, ring_start[0] + i, ring_start[0] + j]);
    }
    // Zip consecutive rings by merging their angle sequences.
    for ring in 1..n_rings {
        let (is, ic) = (ring_start[ring - 1], ring_count[ring - 1]);
        let (os, oc) = (ring_start[ring], ring_count[ring]);
        let (mut a, mut b) = (0usize, 0usize);
        while a < oc || b < ic {
            let next_outer = (a + 1) as f64 / oc as f64;
            let next_inner = (b + 1) as f64 / ic as f64;
            if b == ic || (a < oc && next_outer <= next_inner) {
                triangles.push([os + a % oc, is + b % ic, os + (a + 1) % oc]);
                a += 1;
            } else {
                triangles.push([os + a % oc, is + b % ic, is + (b + 1) % ic]);
                b += 1;
            }
        }
    }
    orient_ccw(&vertices, &mut triangles);

    let outer = n_rings - 1;
    let boundary_gamma0 = (0..ring_count[outer])
        .map(|i| BoundaryVertex {
            vertex: ring_start[outer] + i,
            theta: outer_thetas[i],
        })
        .collect();

    let mut mesh = Mesh {
        vertices,
        triangles,
        boundary_gamma: Vec::new(),
        boundary_gamma0,
        h: 0.0,
    };
    smooth(&mut mesh, 60, 1.45 * side);
    finalize(&mut mesh, None, gamma0, Some(target_h))?;
    Ok(mesh)
}

/// Red refinement: every triangle splits into four by edge midpoints, with
/// boundary-edge midpoints projected onto their exact curve.
pub fn refine_uniform(
    mesh: &Mesh,
    gamma: Option<&ParametricCurve>,
    gamma0: &ParametricCurve,
) -> Result<Mesh, MeshError> {
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();

    // Boundary edges keyed by endpoints, valued by (curve id, theta span).
    let mut boundary_edges: HashMap<(usize, usize), (BoundaryId, f64, f64)> = HashMap::new();
    for (id, list) in [
        (BoundaryId::Gamma, &mesh.boundary_gamma),
        (BoundaryId::Gamma0, &mesh.boundary_gamma0),
    ] {
        let n = list.len();
        for i in 0..n {
            let a = list[i];
            let b = list[(i + 1) % n];
            let mut tb = b.theta;
            if tb <= a.theta {
                tb += TAU;
            }
            boundary_edges.insert(edge_key(a.vertex, b.vertex), (id, a.theta, tb));
        }
    }

    let mut new_boundary_theta: HashMap<usize, (BoundaryId, f64)> = HashMap::new();
    let mut split = |vertices: &mut Vec<Point2>,
                     new_boundary_theta: &mut HashMap<usize, (BoundaryId, f64)>,
                     a: usize,
                     b: usize|
     -> usize {
        let key = edge_key(a, b);
        if let Some(&m) = midpoint.get(&key) {
            return m;
        }
        let pa = vertices[a];
        let pb = vertices[b];
        let mut p = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if let Some(&(id, t0, t1)) = boundary_edges.get(&key) {
            let curve = match id {
                BoundaryId::Gamma => gamma.expect("inner boundary edge requires inner curve"),
                BoundaryId::Gamma0 => gamma0,
            };
            let theta = curve.nearest_parameter(p, 0.5 * (t0 + t1));
            p = curve.eval(theta);
            new_boundary_theta.insert(vertices.len(), (id, theta.rem_euclid(TAU)));
        }
        let idx = vertices.len();
        vertices.push(p);
        midpoint.insert(key, idx);
        idx
    };

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = split(&mut vertices, &mut new_boundary_theta, a, b);
        let bc = split(&mut vertices, &mut new_boundary_theta, b, c);
        let ca = split(&mut vertices, &mut new_boundary_theta, c, a);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }

    let refine_loop = |list: &[BoundaryVertex]| -> Vec<BoundaryVertex> {
        let n = list.len();
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let a = list[i];
            let b = list[(i + 1) % n];
            out.push(a);
            let m = midpoint[&edge_key(a.vertex, b.vertex)];
            let theta = new_boundary_theta[&m].1;
            out.push(BoundaryVertex { vertex: m, theta });
        }
        out
    };
    let boundary_gamma = if mesh.boundary_gamma.is_empty() {
        Vec::new()
    } else {
        refine_loop(&mesh.boundary_gamma)
    };
    let boundary_gamma0 = refine_loop(&mesh.boundary_gamma0);

    let mut out = Mesh {
        vertices,
        triangles,
        boundary_gamma,
        boundary_gamma0,
        h: 0.0,
    };
    finalize(&mut out, gamma, gamma0, None)?;
    Ok(out)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Dense table of the polar angle about `center` as a function of the curve
/// parameter, unwrapped to increase by 2 pi over one loop.
struct PolarMap {
    ts: Vec<f64>,
    phis: Vec<f64>,
}

fn polar_map(curve: &ParametricCurve, center: Point2) -> PolarMap {
    let m = 4096;
    let mut ts = Vec::with_capacity(m + 1);
    let mut phis = Vec::with_capacity(m + 1);
    let mut prev = 0.0;
    for j in 0..=m {
        let t = j as f64 / m as f64 * TAU;
        let p = sub(curve.eval(t), center);
        let mut phi = p[1].atan2(p[0]);
        if j > 0 {
            while phi < prev - std::f64::consts::PI {
                phi += TAU;
            }
            while phi > prev + std::f64::consts::PI {
                phi -= TAU;
            }
        }
        prev = phi;
        ts.push(t);
        phis.push(phi);
    }
    PolarMap { ts, phis }
}

/// Signed angle from the ray at angle `phi` to the point `curve(t) - center`.
fn ray_error(curve: &ParametricCurve, center: Point2, phi: f64, t: f64) -> f64 {
    let p = sub(curve.eval(t), center);
    let d = [phi.cos(), phi.sin()];
    (d[0] * p[1] - d[1] * p[0]).atan2(d[0] * p[0] + d[1] * p[1])
}

/// Curve parameter where the curve crosses the ray at polar angle `phi`
/// (first crossing; the curves used here are star-shaped about `center`).
fn param_on_ray(curve: &ParametricCurve, center: Point2, map: &PolarMap, phi: f64) -> f64 {
    let phi0 = map.phis[0];
    let target = phi0 + (phi - phi0).rem_euclid(TAU);
    if (target - phi0).abs() < 1e-14 || (target - phi0 - TAU).abs() < 1e-14 {
        return map.ts[0];
    }
    let j = map.phis.partition_point(|&p| p < target).min(map.ts.len() - 1);
    let (mut lo, mut hi) = (map.ts[j.saturating_sub(1)], map.ts[j]);
    let mut elo = ray_error(curve, center, target, lo);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let emid = ray_error(curve, center, target, mid);
        if (emid > 0.0) == (elo > 0.0) {
            lo = mid;
            elo = emid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Parameters of the nodes where each curve meets the given rays.
fn params_at_phis(
    curve: &ParametricCurve,
    center: Point2,
    map: &PolarMap,
    phis: &[f64],
) -> Vec<f64> {
    phis.iter().map(|&phi| param_on_ray(curve, center, map, phi)).collect()
}

/// Chords may turn by at most this many radians of boundary curvature, so
/// refinement midpoint projections stay small next to the element size.
const MAX_CHORD_TURN: f64 = 0.25;

/// Angular ray density equidistributed over the polar angle: chords stay
/// under `side` and under the curvature bound on every listed curve.
struct RayDensity {
    anchor: f64,
    cum: Vec<f64>,
}

fn ray_density(
    curves: &[(&ParametricCurve, &PolarMap)],
    center: Point2,
    anchor: f64,
    side: f64,
) -> RayDensity {
    let m = 2048;
    let dphi = TAU / m as f64;
    let mut density = vec![0.0f64; m + 1];
    for &(curve, map) in curves {
        for (j, slot) in density.iter_mut().enumerate() {
            let phi = anchor + j as f64 * dphi;
            let t = param_on_ray(curve, center, map, phi);
            let d1 = curve.derivative(t);
            let speed = norm(d1);
            let d2 = curve.second_derivative(t);
            let kappa = (d1[0] * d2[1] - d1[1] * d2[0]).abs() / speed.powi(3);
            let p = sub(curve.eval(t), center);
            let dphi_dt = ((p[0] * d1[1] - p[1] * d1[0]) / dot(p, p)).max(1e-9);
            let speed_phi = speed / dphi_dt;
            let w = (speed_phi / side).max(speed_phi * kappa / MAX_CHORD_TURN);
            *slot = slot.max(w);
        }
    }
    let mut cum = vec![0.0; m + 1];
    for j in 1..=m {
        cum[j] = cum[j - 1] + 0.5 * (density[j - 1] + density[j]) * dphi;
    }
    RayDensity { anchor, cum }
}

impl RayDensity {
    fn suggested_count(&self) -> usize {
        (self.cum[self.cum.len() - 1].ceil() as usize).max(16)
    }

    /// `n` ray angles splitting the accumulated density evenly.
    fn rays(&self, n: usize) -> Vec<f64> {
        let m = self.cum.len() - 1;
        let dphi = TAU / m as f64;
        let total = self.cum[m];
        let mut phis = Vec::with_capacity(n);
        let mut j = 0;
        for i in 0..n {
            let target = i as f64 / n as f64 * total;
            while j + 1 < m && self.cum[j + 1] < target {
                j += 1;
            }
            let span = self.cum[j + 1] - self.cum[j];
            let frac = if span > 0.0 { (target - self.cum[j]) / span } else { 0.0 };
            phis.push(self.anchor + (j as f64 + frac) * dphi);
        }
        phis
    }
}

fn max_chord(points: &[Point2]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| norm(sub(points[(i + 1) % n], points[i])))
        .fold(0.0, f64::max)
}

/// Largest per-layer growth of the graded layer spacing.
const LAYER_GROWTH: f64 = 1.3;

/// Boundary-layer spacing profile: grows geometrically from `delta_in` at
/// one end and `delta_out` at the other, capped at `cap` in the middle.
fn layer_profile(delta_in: f64, delta_out: f64, cap: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let from_in = delta_in * LAYER_GROWTH.powi(j as i32);
            let from_out = delta_out * LAYER_GROWTH.powi((n - 1 - j) as i32);
            from_in.min(from_out).min(cap)
        })
        .collect()
}

/// Minimal layer count whose profile covers `gap`.
fn layers_needed(delta_in: f64, delta_out: f64, gap: f64, side: f64) -> usize {
    for n in 1..10_000 {
        if layer_profile(delta_in, delta_out, side, n).iter().sum::<f64>() >= gap {
            return n;
        }
    }
    10_000
}

/// Cumulative layer fractions in [0, 1] (length `n + 1`) that cover the gap
/// with boundary spacings matched to the local chords: the middle cap is
/// solved by bisection so the profile sums to `gap`.
fn layer_fractions(delta_in: f64, delta_out: f64, gap: f64, side: f64, n: usize) -> Vec<f64> {
    let sum_for = |cap: f64| layer_profile(delta_in, delta_out, cap, n).iter().sum::<f64>();
    let cap = if sum_for(side) <= gap {
        side
    } else {
        let (mut lo, mut hi) = (1e-12 * side, side);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if sum_for(mid) < gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let spacings = layer_profile(delta_in, delta_out, cap, n);
    let total: f64 = spacings.iter().sum();
    let mut fractions = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    fractions.push(0.0);
    for s in &spacings {
        acc += s / total;
        fractions.push(acc);
    }
    fractions[n] = 1.0;
    fractions
}

fn check_target(target_h: f64) -> Result<(), MeshError> {
    if target_h > 0.0 && target_h.is_finite() {
        Ok(())
    } else {
        Err(MeshError::InvalidTargetH { target_h })
    }
}

fn orient_ccw(vertices: &[Point2], triangles: &mut [[usize; 3]]) {
    for tri in triangles.iter_mut() {
        if signed_area(vertices, *tri) < 0.0 {
            tri.swap(1, 2);
        }
    }
}

/// Greedy quality smoothing of interior vertices: each vertex tries centroid
/// pulls and compass probes and keeps the move that best improves a local
/// score combining the worst incident angle with a penalty on edges longer
/// than `max_edge`. Monotone per vertex, so graded layers survive and
/// inversions never appear.
fn smooth(mesh: &mut Mesh, sweeps: usize, max_edge: f64) {
    let n = mesh.vertices.len();
    let mut fixed = vec![false; n];
    for b in mesh.boundary_gamma.iter().chain(&mesh.boundary_gamma0) {
        fixed[b.vertex] = true;
    }
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for i in 0..3 {
            incident[tri[i]].push(t);
            for j in 0..3 {
                if i != j && !neighbors[tri[i]].contains(&tri[j]) {
                    neighbors[tri[i]].push(tri[j]);
                }
            }
        }
    }
    let score = |vertices: &[Point2], tris: &[usize], all: &[[usize; 3]]| -> f64 {
        let mut angle = f64::INFINITY;
        let mut longest = 0.0f64;
        for &t in tris {
            if signed_area(vertices, all[t]) <= 1e-14 {
                return -1e9;
            }
            angle = angle.min(min_angle_deg(vertices, all[t]));
            longest = longest.max(longest_edge(vertices, all[t]));
        }
        angle - 60.0 * (longest / max_edge - 1.0).max(0.0)
    };
    const COMPASS: [[f64; 2]; 8] = [
        [1.0, 0.0],
        [-1.0, 0.0],
        [0.0, 1.0],
        [0.0, -1.0],
        [0.701, 0.701],
        [0.701, -0.701],
        [-0.701, 0.701],
        [-0.701, -0.701],
    ];
    for _ in 0..sweeps {
        let mut improved = false;
        for v in 0..n {
            if fixed[v] || neighbors[v].is_empty() {
                continue;
            }
            let old = mesh.vertices[v];
            let mut centroid = [0.0, 0.0];
            let mut mean_edge = 0.0;
            for &w in &neighbors[v] {
                centroid[0] += mesh.vertices[w][0];
                centroid[1] += mesh.vertices[w][1];
                mean_edge += norm(sub(mesh.vertices[w], old));
            }
            let count = neighbors[v].len() as f64;
            centroid = [centroid[0] / count, centroid[1] / count];
            mean_edge /= count;
            let before = score(&mesh.vertices, &incident[v], &mesh.triangles);
            let mut best = (before, old);
            let pull = sub(centroid, old);
            let mut candidates: Vec<Point2> = vec![
                [old[0] + 0.5 * pull[0], old[1] + 0.5 * pull[1]],
                [old[0] + 0.25 * pull[0], old[1] + 0.25 * pull[1]],
            ];
            for dir in COMPASS {
                for step in [0.25, 0.1] {
                    candidates.push([
                        old[0] + step * mean_edge * dir[0],
                        old[1] + step * mean_edge * dir[1],
                    ]);
                }
            }
            for cand in candidates {
                mesh.vertices[v] = cand;
                let s = score(&mesh.vertices, &incident[v], &mesh.triangles);
                if s > best.0 + 1e-12 {
                    best = (s, cand);
                }
            }
            if best.1 != old {
                improved = true;
            }
            mesh.vertices[v] = best.1;
        }
        if !improved {
            break;
        }
    }
}

/// Computes `h`, then verifies every mesh invariant; returns an error (and
/// leaves the mesh unusable) when any fails.
fn finalize(
    mesh: &mut Mesh,
    gamma: Option<&ParametricCurve>,
    gamma0: &ParametricCurve,
    target_h: Option<f64>,
) -> Result<MeshReport, MeshError> {
    mesh.h = mesh
        .triangles
        .iter()
        .map(|&t| longest_edge(&mesh.vertices, t))
        .fold(0.0, f64::max);
    if let Some(target) = target_h {
        if mesh.h > target {
            return Err(MeshError::TargetExceeded { h: mesh.h, target_h: target });
        }
    }
    verify(mesh, gamma, gamma0)
}

/// Full invariant check: positive areas, quality floor, conformity, Euler
/// characteristic, and boundary vertices on their exact curves.
pub fn verify(
    mesh: &Mesh,
    gamma: Option<&ParametricCurve>,
    gamma0: &ParametricCurve,
) -> Result<MeshReport, MeshError> {
    let mut min_angle = f64::INFINITY;
    for (t, &tri) in mesh.triangles.iter().enumerate() {
        let area = signed_area(&mesh.vertices, tri);
        if area <= 0.0 {
            return Err(MeshError::InvertedTriangle { index: t, area });
        }
        min_angle = min_angle.min(min_angle_deg(&mesh.vertices, tri));
    }
    if min_angle < MIN_ANGLE_DEG {
        return Err(MeshError::QualityViolated {
            found: min_angle,
            required: MIN_ANGLE_DEG,
        });
    }

    // Edge counts: interior edges twice, boundary edges once, and the
    // once-edges must be exactly the boundary-loop edges.
    let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
    for &tri in &mesh.triangles {
        for i in 0..3 {
            *edge_count.entry(edge_key(tri[i], tri[(i + 1) % 3])).or_insert(0) += 1;
        }
    }
    let mut loop_edges: Vec<(usize, usize)> = Vec::new();
    for list in [&mesh.boundary_gamma, &mesh.boundary_gamma0] {
        let n = list.len();
        for i in 0..n {
            if n > 0 {
                loop_edges.push(edge_key(list[i].vertex, list[(i + 1) % n].vertex));
            }
        }
    }
    let mut once = 0usize;
    for (&key, &count) in &edge_count {
        match count {
            1 => {
                once += 1;
                if !loop_edges.contains(&key) {
                    return Err(MeshError::NotConforming {
                        detail: format!("boundary edge {key:?} not in any boundary loop"),
                    });
                }
            }
            2 => {}
            d => {
                return Err(MeshError::NotConforming {
                    detail: format!("edge {key:?} shared by {d} triangles"),
                })
            }
        }
    }
    if once != loop_edges.len() {
        return Err(MeshError::NotConforming {
            detail: format!("{once} boundary edges vs {} loop edges", loop_edges.len()),
        });
    }

    let euler = mesh.vertices.len() as i64 - edge_count.len() as i64 + mesh.triangles.len() as i64;
    let expected = if mesh.is_disc() { 1 } else { 0 };
    if euler != expected {
        return Err(MeshError::EulerMismatch { got: euler, expected });
    }

    for (list, curve) in [
        (&mesh.boundary_gamma, gamma),
        (&mesh.boundary_gamma0, Some(gamma0)),
    ] {
        let Some(curve) = curve else { continue };
        for b in list.iter() {
            let distance = norm(sub(mesh.vertices[b.vertex], curve.eval(b.theta)));
            if distance > BOUNDARY_TOL {
                return Err(MeshError::BoundaryOffCurve { vertex: b.vertex, distance });
            }
        }
    }

    Ok(MeshReport {
        n_vertices: mesh.vertices.len(),
        n_triangles: mesh.triangles.len(),
        h: mesh.h,
        min_angle_deg: min_angle,
        euler_characteristic: euler,
        total_area: mesh.total_area(),
    })
}

/// Plain-text serialization; `import_text` inverts it byte-identically
/// (floats print in Rust's shortest round-trip form).
pub fn export_text(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "vertices {} triangles {}", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{} {}", v[0], v[1]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    for (name, list) in [("gamma", &mesh.boundary_gamma), ("gamma0", &mesh.boundary_gamma0)] {
        let _ = writeln!(s, "boundary {} {}", name, list.len());
        for b in list.iter() {
            let _ = writeln!(s, "{} {}", b.vertex, b.theta);
        }
    }
    let _ = writeln!(s, "h {}", mesh.h);
    s
}

pub fn import_text(text: &str) -> Result<Mesh, MeshError> {
    let parse_err = |detail: &str| MeshError::ParseError { detail: detail.to_string() };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err("empty input"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "vertices" || parts[2] != "triangles" {
        return Err(parse_err("expected 'vertices N triangles M' header"));
    }
    let nv: usize = parts[1].parse().map_err(|_| parse_err("bad vertex count"))?;
    let nt: usize = parts[3].parse().map_err(|_| parse_err("bad triangle count"))?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| parse_err("missing vertex line"))?;
        let mut it = line.split_whitespace();
        let x: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad vertex"))?;
        let y: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad vertex"))?;
        vertices.push([x, y]);
    }
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = lines.next().ok_or_else(|| parse_err("missing triangle line"))?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err("bad triangle"))?;
        if idx.len() != 3 || idx.iter().any(|&i| i >= nv) {
            return Err(parse_err("bad triangle indices"));
        }
        triangles.push([idx[0], idx[1], idx[2]]);
    }
    let read_boundary = |expect: &str, lines: &mut std::str::Lines| -> Result<Vec<BoundaryVertex>, MeshError> {
        let line = lines.next().ok_or_else(|| parse_err("missing boundary header"))?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "boundary" || parts[1] != expect {
            return Err(parse_err("bad boundary header"));
        }
        let n: usize = parts[2].parse().map_err(|_| parse_err("bad boundary count"))?;
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let line = lines.next().ok_or_else(|| parse_err("missing boundary line"))?;
            let mut it = line.split_whitespace();
            let vertex: usize =
                it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad boundary vertex"))?;
            let theta: f64 =
                it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad boundary theta"))?;
            if vertex >= nv {
                return Err(parse_err("boundary vertex out of range"));
            }
            out.push(BoundaryVertex { vertex, theta });
        }
        Ok(out)
    };
    let boundary_gamma = read_boundary("gamma", &mut lines)?;
    let boundary_gamma0 = read_boundary("gamma0", &mut lines)?;
    let line = lines.next().ok_or_else(|| parse_err("missing h line"))?;
    let mut it = line.split_whitespace();
    if it.next() != Some("h") {
        return Err(parse_err("bad h line"));
    }
    let h: f64 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("bad h value"))?;
    Ok(Mesh {
        vertices,
        triangles,
        boundary_gamma,
        boundary_gamma0,
        h,
    })
}
