//! P1 Galerkin assembly: the interior bilinear form, the dense coupling block
//! that realizes the layer-potential Robin condition on the outer boundary,
//! boundary loads, the refraction volume coupling, and nullspace constraints
//! for the static operators.
//!
//! All boundary integrals are evaluated on the exact parametric curves with
//! panels aligned to mesh boundary edges; P1 traces are linear in the curve
//! parameter on each panel. Dense blocks are accumulated row-group by
//! row-group (one group per outer-boundary vertex), which makes the result
//! bit-identical whether rows are filled sequentially or in parallel.

use rayon::prelude::*;
use thiserror::Error;

use crate::curves::{self, BoundaryQuadrature, CurveError, ParametricCurve};
use crate::kernels::{KernelError, KernelSet, DEFAULT_C0};
use crate::mesh::{BoundaryId, Mesh};
use crate::quadrature::triangle_rule;
use crate::{dot, Complex64, FieldValue, Point2};

/// Default Robin impedance for the wave operators.
pub const DEFAULT_ALPHA: f64 = 2.0;

/// Default Gauss order per boundary panel.
pub const DEFAULT_BOUNDARY_GAUSS: usize = 4;

/// Default polynomial degree for triangle quadrature of volume couplings.
pub const DEFAULT_VOLUME_DEGREE: usize = 2;

/// Sparse matrix entry `(row, col, value)` in global DOF numbering.
pub type Triplet = (usize, usize, Complex64);

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(
        "impedance alpha = {alpha} is invalid: wave operators need a nonzero finite real value"
    )]
    InvalidWaveAlpha { alpha: f64 },
    #[error("impedance alpha = {alpha} is invalid: static operators require alpha = 0")]
    InvalidStaticAlpha { alpha: f64 },
    #[error("boundary Gauss order {gauss_order} outside 1..=32")]
    InvalidGaussOrder { gauss_order: usize },
    #[error("panel split factor {splits} outside 1..=16")]
    InvalidPanelSplits { splits: usize },
    #[error("the mesh has no {0:?} boundary loop")]
    EmptyBoundary(BoundaryId),
    #[error("refraction coefficients apply to the Helmholtz operator only")]
    RefractionRequiresHelmholtz,
    #[error(
        "refraction support touches the outer boundary (vertex {vertex}); \
         enlarge the domain so the inhomogeneity is strictly interior"
    )]
    VolumeSupportTouchesBoundary { vertex: usize },
    #[error("nullspace constraints apply to the static operators only")]
    ConstraintsForWave,
    #[error("load vector length {got} does not match {expected} degrees of freedom")]
    LoadLengthMismatch { got: usize, expected: usize },
}

/// Discretization parameters for one problem instance.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub kernel: KernelSet,
    /// Robin impedance; zero for static operators, nonzero real for wave.
    pub alpha: f64,
    /// Gauss points per boundary quadrature panel.
    pub boundary_gauss: usize,
    /// Quadrature subdivisions per boundary panel (basis stays per-panel).
    pub panel_splits: usize,
    /// Triangle-rule degree for mass and volume-coupling integrals.
    pub volume_degree: usize,
    /// Required minimal separation between the two boundary curves.
    pub separation: f64,
    /// Force sequential accumulation (results are bit-identical either way).
    pub deterministic: bool,
}

impl ProblemSpec {
    pub fn new(kernel: KernelSet) -> Self {
        let alpha = if kernel.is_static() { 0.0 } else { DEFAULT_ALPHA };
        Self {
            kernel,
            alpha,
            boundary_gauss: DEFAULT_BOUNDARY_GAUSS,
            panel_splits: 1,
            volume_degree: DEFAULT_VOLUME_DEGREE,
            separation: DEFAULT_C0,
            deterministic: false,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self, AssemblyError> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        if self.kernel.is_static() {
            if self.alpha != 0.0 {
                return Err(AssemblyError::InvalidStaticAlpha { alpha: self.alpha });
            }
        } else if !(self.alpha.is_finite() && self.alpha != 0.0) {
            return Err(AssemblyError::InvalidWaveAlpha { alpha: self.alpha });
        }
        if !(1..=32).contains(&self.boundary_gauss) {
            return Err(AssemblyError::InvalidGaussOrder {
                gauss_order: self.boundary_gauss,
            });
        }
        if !(1..=16).contains(&self.panel_splits) {
            return Err(AssemblyError::InvalidPanelSplits {
                splits: self.panel_splits,
            });
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        self.kernel.components()
    }

    fn i_alpha(&self) -> Complex64 {
        Complex64::new(0.0, self.alpha)
    }
}

/// Global DOF index of `comp` at `vertex` (component-interleaved layout).
pub fn dof(vertex: usize, comp: usize, ncomp: usize) -> usize {
    vertex * ncomp + comp
}

// ---------------------------------------------------------------------------
// Interior form
// ---------------------------------------------------------------------------

fn p1_gradients(p: [Point2; 3]) -> ([Point2; 3], f64) {
    let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
    let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    let g1 = [e2[1] / det, -e2[0] / det];
    let g2 = [-e1[1] / det, e1[0] / det];
    let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
    ([g0, g1, g2], 0.5 * det)
}

/// Assembles the interior bilinear form: stiffness for all operators, minus
/// `k^2 (n u, v)` for Helmholtz (optionally refracted) and minus
/// `rho omega^2 (u, v)` for the time-harmonic elastic operator.
pub fn assemble_interior(
    mesh: &Mesh,
    spec: &ProblemSpec,
    refraction: Option<&(dyn Fn(Point2) -> f64 + Sync)>,
) -> Result<Vec<Triplet>, AssemblyError> {
    spec.validate()?;
    if refraction.is_some() && !matches!(spec.kernel, KernelSet::Helmholtz { .. }) {
        return Err(AssemblyError::RefractionRequiresHelmholtz);
    }
    let ncomp = spec.components();
    let mass_coeff: Complex64 = match spec.kernel {
        KernelSet::Laplace | KernelSet::Lame { .. } => Complex64::ZERO,
        KernelSet::Helmholtz { k } => Complex64::new(-k * k, 0.0),
        KernelSet::Navier(p) => Complex64::new(-p.rho * p.omega * p.omega, 0.0),
    };
    let rule = triangle_rule(spec.volume_degree);
    let mut triplets = Vec::new();
    for tri in &mesh.triangles {
        let p = [
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ];
        let (g, area) = p1_gradients(p);

        let mut mass = [[0.0f64; 3]; 3];
        if mass_coeff != Complex64::ZERO {
            for q in &rule {
                let lam = [1.0 - q.r - q.s, q.r, q.s];
                let y = [
                    p[0][0] + q.r * (p[1][0] - p[0][0]) + q.s * (p[2][0] - p[0][0]),
                    p[0][1] + q.r * (p[1][1] - p[0][1]) + q.s * (p[2][1] - p[0][1]),
                ];
                let n = refraction.map_or(1.0, |f| f(y));
                let w = q.w * area * n;
                for i in 0..3 {
                    for j in 0..3 {
                        mass[i][j] += w * lam[i] * lam[j];
                    }
                }
            }
        }

        match ncomp {
            1 => {
                for i in 0..3 {
                    for j in 0..3 {
                        let mut v = Complex64::new(area * dot(g[i], g[j]), 0.0);
                        v += mass_coeff * mass[i][j];
                        triplets.push((tri[i], tri[j], v));
                    }
                }
            }
            _ => {
                let (lambda, mu) = self_lame(&spec.kernel);
                for i in 0..3 {
                    for j in 0..3 {
                        for a in 0..2 {
                            for b in 0..2 {
                                let mut e = mu * g[i][b] * g[j][a] + lambda * g[i][a] * g[j][b];
                                if a == b {
                                    e += mu * dot(g[i], g[j]);
                                }
                                let mut v = Complex64::new(area * e, 0.0);
                                if a == b {
                                    v += mass_coeff * mass[i][j];
                                }
                                triplets.push((dof(tri[i], a, 2), dof(tri[j], b, 2), v));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(triplets)
}

fn self_lame(kernel: &KernelSet) -> (f64, f64) {
    kernel.lame_constants().expect("elastic kernel")
}

// ---------------------------------------------------------------------------
// Boundary trace data
// ---------------------------------------------------------------------------

struct BoundaryData {
    quad: BoundaryQuadrature,
    /// Mesh boundary-edge (basis panel) index per quadrature node.
    node_panel: Vec<usize>,
    /// P1 trace values at the node for the panel's (left, right) vertices.
    node_basis: Vec<[f64; 2]>,
    /// Mesh vertex per boundary loop position.
    vertices: Vec<usize>,
}

impl BoundaryData {
    fn n_loop(&self) -> usize {
        self.vertices.len()
    }
}

fn boundary_data(
    mesh: &Mesh,
    curve: &ParametricCurve,
    boundary: BoundaryId,
    spec: &ProblemSpec,
) -> Result<BoundaryData, AssemblyError> {
    let map = mesh.trace_map(boundary);
    if map.len() == 0 {
        return Err(AssemblyError::EmptyBoundary(boundary));
    }
    let spans = map.panel_spans();
    let splits = spec.panel_splits;
    let mut sub_spans = Vec::with_capacity(spans.len() * splits);
    for &(t0, t1) in &spans {
        for s in 0..splits {
            let a = t0 + (t1 - t0) * s as f64 / splits as f64;
            let b = t0 + (t1 - t0) * (s + 1) as f64 / splits as f64;
            sub_spans.push((a, b));
        }
    }
    let quad = curves::build_quadrature_on_spans(curve, &sub_spans, spec.boundary_gauss)?;
    let mut node_panel = vec![0usize; quad.nodes.len()];
    let mut node_basis = vec![[0.0f64; 2]; quad.nodes.len()];
    for (sp, panel) in quad.panels.iter().enumerate() {
        let parent = sp / splits;
        let (t0, t1) = spans[parent];
        for n in panel.first_node..panel.first_node + panel.n_nodes {
            let u = (quad.nodes[n].theta - t0) / (t1 - t0);
            node_panel[n] = parent;
            node_basis[n] = [1.0 - u, u];
        }
    }
    Ok(BoundaryData {
        quad,
        node_panel,
        node_basis,
        vertices: map.vertices,
    })
}

/// Node index range covering one basis panel (all its quadrature sub-panels).
fn panel_nodes(data: &BoundaryData, panel: usize, splits: usize) -> std::ops::Range<usize> {
    let first = data.quad.panels[panel * splits].first_node;
    let last_panel = &data.quad.panels[(panel + 1) * splits - 1];
    first..last_panel.first_node + last_panel.n_nodes
}

/// Runs `work(group, out_slice)` over row groups of a dense row-major matrix,
/// sequentially or in parallel; each group owns `group_len` consecutive rows.
fn for_each_row_group<E: Send>(
    dense: &mut [Complex64],
    group_len: usize,
    deterministic: bool,
    work: impl Fn(usize, &mut [Complex64]) -> Result<(), E> + Sync,
) -> Result<(), E> {
    if deterministic {
        for (g, chunk) in dense.chunks_mut(group_len).enumerate() {
            work(g, chunk)?;
        }
        Ok(())
    } else {
        dense
            .par_chunks_mut(group_len)
            .enumerate()
            .map(|(g, chunk)| work(g, chunk))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Artificial-boundary coupling block
// ---------------------------------------------------------------------------

/// Dense coupling of the outer-boundary trace to the obstacle trace, plus the
/// `-i alpha (u, v)` mass on the outer boundary.
#[derive(Debug, Clone)]
pub struct AbcBlock {
    /// Global DOFs of the rows (outer-boundary loop order, component-major).
    pub rows: Vec<usize>,
    /// Global DOFs of the columns (obstacle loop order, component-major).
    pub cols: Vec<usize>,
    /// Row-major dense entries, `rows.len() * cols.len()`.
    pub dense: Vec<Complex64>,
    /// Sparse `-i alpha` mass on the outer boundary (empty when `alpha = 0`).
    pub mass: Vec<Triplet>,
}

impl AbcBlock {
    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.dense[r * self.cols.len() + c]
    }

    /// Scatters the dense block and appends the boundary mass.
    pub fn triplets(&self) -> Vec<Triplet> {
        let mut out = Vec::with_capacity(self.dense.len() + self.mass.len());
        for (r, &row_dof) in self.rows.iter().enumerate() {
            for (c, &col_dof) in self.cols.iter().enumerate() {
                out.push((row_dof, col_dof, self.entry(r, c)));
            }
        }
        out.extend_from_slice(&self.mass);
        out
    }
}

/// `-i alpha` times the exact-curve mass matrix of the outer boundary trace.
pub fn assemble_robin_mass(
    mesh: &Mesh,
    spec: &ProblemSpec,
    gamma0: &ParametricCurve,
) -> Result<Vec<Triplet>, AssemblyError> {
    spec.validate()?;
    if spec.alpha == 0.0 {
        return Ok(Vec::new());
    }
    let data = boundary_data(mesh, gamma0, BoundaryId::Gamma0, spec)?;
    let ncomp = spec.components();
    let n = data.n_loop();
    let scale = -spec.i_alpha();
    let mut out = Vec::with_capacity(n * 4 * ncomp);
    for p in 0..n {
        let mut local = [[0.0f64; 2]; 2];
        for nn in panel_nodes(&data, p, spec.panel_splits) {
            let w = data.quad.nodes[nn].weight;
            let phi = data.node_basis[nn];
            for u in 0..2 {
                for v in 0..2 {
                    local[u][v] += w * phi[u] * phi[v];
                }
            }
        }
        let ends = [data.vertices[p], data.vertices[(p + 1) % n]];
        for u in 0..2 {
            for v in 0..2 {
                for c in 0..ncomp {
                    out.push((
                        dof(ends[u], c, ncomp),
                        dof(ends[v], c, ncomp),
                        scale * local[u][v],
                    ));
                }
            }
        }
    }
    Ok(out)
}

/// Assembles the Robin-condition coupling: for trial trace `u` on the obstacle
/// boundary and test trace `v` on the outer boundary, the dense block carries
/// `-(T_x D(u) - i alpha D(u), v)` and `mass` carries `-i alpha (u, v)`.
pub fn assemble_abc_block(
    mesh: &Mesh,
    spec: &ProblemSpec,
    gamma: &ParametricCurve,
    gamma0: &ParametricCurve,
) -> Result<AbcBlock, AssemblyError> {
    spec.validate()?;
    curves::check_enclosure(gamma, gamma0, spec.separation)?;
    let bx = boundary_data(mesh, gamma0, BoundaryId::Gamma0, spec)?;
    let by = boundary_data(mesh, gamma, BoundaryId::Gamma, spec)?;
    let ncomp = spec.components();
    let (n_x, n_y) = (bx.n_loop(), by.n_loop());
    let n_cols = n_y * ncomp;
    let mut dense = vec![Complex64::ZERO; n_x * ncomp * n_cols];
    let i_alpha = spec.i_alpha();
    let kernel = &spec.kernel;
    let sep = spec.separation;
    let splits = spec.panel_splits;

    for_each_row_group(
        &mut dense,
        ncomp * n_cols,
        spec.deterministic,
        |i, rows| -> Result<(), AssemblyError> {
            // Vertex i supports the right end of panel i-1 and the left end
            // of panel i.
            for (panel, side) in [((i + n_x - 1) % n_x, 1), (i, 0)] {
                for nx in panel_nodes(&bx, panel, splits) {
                    let xn = &bx.quad.nodes[nx];
                    let phi_i = data_basis(&bx, nx, side);
                    if phi_i == 0.0 {
                        continue;
                    }
                    let wx = xn.weight * phi_i;
                    for ny in 0..by.quad.nodes.len() {
                        let yn = &by.quad.nodes[ny];
                        let nkm = kernel.traction_xy(xn.point, yn.point, xn.normal, yn.normal, sep)?;
                        let mkm = kernel.traction_y(xn.point, yn.point, yn.normal)?;
                        let q = by.node_panel[ny];
                        let wy = yn.weight;
                        let phis = by.node_basis[ny];
                        let ends = [q, (q + 1) % n_y];
                        for a in 0..ncomp {
                            let row = &mut rows[a * n_cols..(a + 1) * n_cols];
                            for b in 0..ncomp {
                                let val = nkm[a][b] - i_alpha * mkm[b][a];
                                let f = wx * wy * val;
                                for e in 0..2 {
                                    row[ends[e] * ncomp + b] -= f * phis[e];
                                }
                            }
                        }
                    }
                }
            }
            Ok(())
        },
    )?;

    let rows = bx
        .vertices
        .iter()
        .flat_map(|&v| (0..ncomp).map(move |c| dof(v, c, ncomp)))
        .collect();
    let cols = by
        .vertices
        .iter()
        .flat_map(|&v| (0..ncomp).map(move |c| dof(v, c, ncomp)))
        .collect();
    let mass = assemble_robin_mass(mesh, spec, gamma0)?;
    Ok(AbcBlock {
        rows,
        cols,
        dense,
        mass,
    })
}

fn data_basis(data: &BoundaryData, node: usize, side: usize) -> f64 {
    data.node_basis[node][side]
}

// ---------------------------------------------------------------------------
// Loads
// ---------------------------------------------------------------------------

/// Assembles the Neumann-data load: `-(g, v)` on the obstacle boundary minus
/// `(T_x S(g) - i alpha S(g), v)` on the outer boundary. `g(point, normal)`
/// returns the boundary data at an obstacle quadrature node.
pub fn assemble_load(
    mesh: &Mesh,
    spec: &ProblemSpec,
    gamma: &ParametricCurve,
    gamma0: &ParametricCurve,
    g: &(dyn Fn(Point2, Point2) -> FieldValue + Sync),
) -> Result<Vec<Complex64>, AssemblyError> {
    spec.validate()?;
    curves::check_enclosure(gamma, gamma0, spec.separation)?;
    let bx = boundary_data(mesh, gamma0, BoundaryId::Gamma0, spec)?;
    let by = boundary_data(mesh, gamma, BoundaryId::Gamma, spec)?;
    let ncomp = spec.components();
    let n_y = by.n_loop();
    let mut rhs = vec![Complex64::ZERO; mesh.vertices.len() * ncomp];

    let g_vals: Vec<FieldValue> = by
        .quad
        .nodes
        .iter()
        .map(|n| g(n.point, n.normal))
        .collect();

    // Obstacle part: -(g, v).
    for (ny, yn) in by.quad.nodes.iter().enumerate() {
        let q = by.node_panel[ny];
        let phis = by.node_basis[ny];
        let ends = [by.vertices[q], by.vertices[(q + 1) % n_y]];
        for c in 0..ncomp {
            let gv = yn.weight * g_vals[ny][c];
            for e in 0..2 {
                rhs[dof(ends[e], c, ncomp)] -= phis[e] * gv;
            }
        }
    }

    // Robin trace of the single layer at every outer-boundary node.
    let i_alpha = spec.i_alpha();
    let kernel = &spec.kernel;
    let eval = |nx: usize| -> Result<FieldValue, AssemblyError> {
        let xn = &bx.quad.nodes[nx];
        let mut s = [Complex64::ZERO; 2];
        for (ny, yn) in by.quad.nodes.iter().enumerate() {
            let tkm = kernel.traction_x(xn.point, yn.point, xn.normal)?;
            let ukm = kernel.fundamental(xn.point, yn.point)?;
            for c in 0..ncomp {
                for b in 0..ncomp {
                    s[c] += yn.weight * (tkm[c][b] - i_alpha * ukm[c][b]) * g_vals[ny][b];
                }
            }
        }
        Ok(s)
    };
    let traces: Vec<FieldValue> = if spec.deterministic {
        (0..bx.quad.nodes.len())
            .map(eval)
            .collect::<Result<_, _>>()?
    } else {
        (0..bx.quad.nodes.len())
            .into_par_iter()
            .map(eval)
            .collect::<Result<_, _>>()?
    };

    let n_x = bx.n_loop();
    for (nx, xn) in bx.quad.nodes.iter().enumerate() {
        let p = bx.node_panel[nx];
        let phis = bx.node_basis[nx];
        let ends = [bx.vertices[p], bx.vertices[(p + 1) % n_x]];
        for c in 0..ncomp {
            let sv = xn.weight * traces[nx][c];
            for e in 0..2 {
                rhs[dof(ends[e], c, ncomp)] -= phis[e] * sv;
            }
        }
    }
    Ok(rhs)
}

/// Assembles the incident-field load `+(trace, v)` on the outer boundary,
/// where `trace(point, normal)` is the Robin trace of the incident field.
pub fn assemble_load_incident(
    mesh: &Mesh,
    spec: &ProblemSpec,
    gamma0: &ParametricCurve,
    trace: &(dyn Fn(Point2, Point2) -> FieldValue + Sync),
) -> Result<Vec<Complex64>, AssemblyError> {
    spec.validate()?;
    let bx = boundary_data(mesh, gamma0, BoundaryId::Gamma0, spec)?;
    let ncomp = spec.components();
    let n_x = bx.n_loop();
    let mut rhs = vec![Complex64::ZERO; mesh.vertices.len() * ncomp];
    for (nx, xn) in bx.quad.nodes.iter().enumerate() {
        let tv = trace(xn.point, xn.normal);
        let p = bx.node_panel[nx];
        let phis = bx.node_basis[nx];
        let ends = [bx.vertices[p], bx.vertices[(p + 1) % n_x]];
        for c in 0..ncomp {
            let sv = xn.weight * tv[c];
            for e in 0..2 {
                rhs[dof(ends[e], c, ncomp)] += phis[e] * sv;
            }
        }
    }
    Ok(rhs)
}

// ---------------------------------------------------------------------------
// Refraction volume coupling
// ---------------------------------------------------------------------------

/// Dense coupling of interior DOFs in the support of `1 - n` to the
/// outer-boundary trace through the Robin trace of the volume potential.
#[derive(Debug, Clone)]
pub struct VolumeBlock {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub dense: Vec<Complex64>,
}

impl VolumeBlock {
    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn triplets(&self) -> Vec<Triplet> {
        let mut out = Vec::with_capacity(self.dense.len());
        for (r, &row_dof) in self.rows.iter().enumerate() {
            for (c, &col_dof) in self.cols.iter().enumerate() {
                out.push((row_dof, col_dof, self.dense[r * self.cols.len() + c]));
            }
        }
        out
    }
}

/// Assembles `+k^2 (T_x V((1-n) u) - i alpha V((1-n) u), v)` on the outer
/// boundary. Support is detected per triangle from `|n(centroid) - 1|`;
/// an inhomogeneity touching the outer boundary is rejected.
pub fn assemble_volume_block(
    mesh: &Mesh,
    spec: &ProblemSpec,
    gamma0: &ParametricCurve,
    refraction: &(dyn Fn(Point2) -> f64 + Sync),
) -> Result<VolumeBlock, AssemblyError> {
    spec.validate()?;
    let k = match spec.kernel {
        KernelSet::Helmholtz { k } => k,
        _ => return Err(AssemblyError::RefractionRequiresHelmholtz),
    };
    let bx = boundary_data(mesh, gamma0, BoundaryId::Gamma0, spec)?;
    let support: Vec<usize> = (0..mesh.triangles.len())
        .filter(|&t| {
            let tr = mesh.triangles[t];
            let c = [
                (mesh.vertices[tr[0]][0] + mesh.vertices[tr[1]][0] + mesh.vertices[tr[2]][0]) / 3.0,
                (mesh.vertices[tr[0]][1] + mesh.vertices[tr[1]][1] + mesh.vertices[tr[2]][1]) / 3.0,
            ];
            (refraction(c) - 1.0).abs() > 1e-12
        })
        .collect();

    let rows: Vec<usize> = bx.vertices.clone();
    if support.is_empty() {
        return Ok(VolumeBlock {
            rows,
            cols: Vec::new(),
            dense: Vec::new(),
        });
    }

    let mut col_vertices: Vec<usize> = support
        .iter()
        .flat_map(|&t| mesh.triangles[t])
        .collect();
    col_vertices.sort_unstable();
    col_vertices.dedup();
    let on_gamma0: std::collections::HashSet<usize> = bx.vertices.iter().copied().collect();
    if let Some(&v) = col_vertices.iter().find(|v| on_gamma0.contains(v)) {
        return Err(AssemblyError::VolumeSupportTouchesBoundary { vertex: v });
    }
    let col_of: std::collections::HashMap<usize, usize> = col_vertices
        .iter()
        .enumerate()
        .map(|(c, &v)| (v, c))
        .collect();

    // Precompute volume quadrature: points, weights including (1 - n), and
    // the three vertex column indices with barycentric values.
    struct VolPoint {
        y: Point2,
        w: f64,
        cols: [usize; 3],
        lam: [f64; 3],
    }
    let rule = triangle_rule(spec.volume_degree);
    let mut vol_points = Vec::with_capacity(support.len() * rule.len());
    for &t in &support {
        let tr = mesh.triangles[t];
        let p = [
            mesh.vertices[tr[0]],
            mesh.vertices[tr[1]],
            mesh.vertices[tr[2]],
        ];
        let area = mesh.triangle_area(t);
        let cols = [col_of[&tr[0]], col_of[&tr[1]], col_of[&tr[2]]];
        for q in &rule {
            let y = [
                p[0][0] + q.r * (p[1][0] - p[0][0]) + q.s * (p[2][0] - p[0][0]),
                p[0][1] + q.r * (p[1][1] - p[0][1]) + q.s * (p[2][1] - p[0][1]),
            ];
            vol_points.push(VolPoint {
                y,
                w: q.w * area * (1.0 - refraction(y)),
                cols,
                lam: [1.0 - q.r - q.s, q.r, q.s],
            });
        }
    }

    let n_x = bx.n_loop();
    let n_cols = col_vertices.len();
    let mut dense = vec![Complex64::ZERO; n_x * n_cols];
    let i_alpha = spec.i_alpha();
    let k2 = Complex64::new(k * k, 0.0);
    let kernel = &spec.kernel;
    let splits = spec.panel_splits;

    for_each_row_group(
        &mut dense,
        n_cols,
        spec.deterministic,
        |i, row| -> Result<(), AssemblyError> {
            for (panel, side) in [((i + n_x - 1) % n_x, 1), (i, 0)] {
                for nx in panel_nodes(&bx, panel, splits) {
                    let xn = &bx.quad.nodes[nx];
                    let phi_i = data_basis(&bx, nx, side);
                    if phi_i == 0.0 {
                        continue;
                    }
                    let wx = xn.weight * phi_i;
                    for vp in &vol_points {
                        let tkm = kernel.traction_x(xn.point, vp.y, xn.normal)?;
                        let ukm = kernel.fundamental(xn.point, vp.y)?;
                        let val = k2 * (tkm[0][0] - i_alpha * ukm[0][0]);
                        let f = wx * vp.w * val;
                        for e in 0..3 {
                            row[vp.cols[e]] += f * vp.lam[e];
                        }
                    }
                }
            }
            Ok(())
        },
    )?;

    Ok(VolumeBlock {
        rows,
        cols: col_vertices,
        dense,
    })
}

// ---------------------------------------------------------------------------
// Nullspace constraints
// ---------------------------------------------------------------------------

/// Lumped-mass mean-value constraints for the static operators: one row for
/// Laplace (zero weighted mean), three for the elastostatic operator (two
/// translations and the in-plane rotation).
pub fn assemble_constraints(
    mesh: &Mesh,
    spec: &ProblemSpec,
) -> Result<Vec<Vec<(usize, f64)>>, AssemblyError> {
    spec.validate()?;
    if !spec.kernel.is_static() {
        return Err(AssemblyError::ConstraintsForWave);
    }
    let nv = mesh.vertices.len();
    let mut lumped = vec![0.0f64; nv];
    for t in 0..mesh.triangles.len() {
        let third = mesh.triangle_area(t) / 3.0;
        for &v in &mesh.triangles[t] {
            lumped[v] += third;
        }
    }
    match spec.components() {
        1 => Ok(vec![(0..nv).map(|v| (v, lumped[v])).collect()]),
        _ => {
            let tx = (0..nv).map(|v| (dof(v, 0, 2), lumped[v])).collect();
            let ty = (0..nv).map(|v| (dof(v, 1, 2), lumped[v])).collect();
            let rot = (0..nv)
                .flat_map(|v| {
                    [
                        (dof(v, 0, 2), -mesh.vertices[v][1] * lumped[v]),
                        (dof(v, 1, 2), mesh.vertices[v][0] * lumped[v]),
                    ]
                })
                .collect();
            Ok(vec![tx, ty, rot])
        }
    }
}

// ---------------------------------------------------------------------------
// System combination
// ---------------------------------------------------------------------------

/// The combined linear system in triplet form, with constraint rows bordered
/// below/right of the `n_dof` field unknowns.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub n_dof: usize,
    pub n_multipliers: usize,
    /// Static operators carry a nullspace; the solver refuses to factorize
    /// such a system unless constraint rows are bordered in.
    pub requires_constraints: bool,
    pub triplets: Vec<Triplet>,
    pub rhs: Vec<Complex64>,
}

impl AssembledSystem {
    pub fn size(&self) -> usize {
        self.n_dof + self.n_multipliers
    }
}

/// Combines assembled pieces into one bordered system.
pub fn build_system(
    mesh: &Mesh,
    spec: &ProblemSpec,
    interior: Vec<Triplet>,
    abc: Option<&AbcBlock>,
    volume: Option<&VolumeBlock>,
    constraints: Option<&[Vec<(usize, f64)>]>,
    rhs: Vec<Complex64>,
) -> Result<AssembledSystem, AssemblyError> {
    let n_dof = mesh.vertices.len() * spec.components();
    if rhs.len() != n_dof {
        return Err(AssemblyError::LoadLengthMismatch {
            got: rhs.len(),
            expected: n_dof,
        });
    }
    let mut triplets = interior;
    if let Some(block) = abc {
        triplets.extend(block.triplets());
    }
    if let Some(block) = volume {
        triplets.extend(block.triplets());
    }
    let rows = constraints.unwrap_or(&[]);
    let n_multipliers = rows.len();
    let mut rhs = rhs;
    rhs.resize(n_dof + n_multipliers, Complex64::ZERO);
    for (r, row) in rows.iter().enumerate() {
        for &(j, w) in row {
            let w = Complex64::new(w, 0.0);
            triplets.push((n_dof + r, j, w));
            triplets.push((j, n_dof + r, w));
        }
    }
    Ok(AssembledSystem {
        n_dof,
        n_multipliers,
        requires_constraints: spec.kernel.is_static(),
        triplets,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_annulus;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    fn circle(r: f64) -> ParametricCurve {
        ParametricCurve::circle(r, [0.0, 0.0]).unwrap()
    }

    fn unit_triangle_mesh() -> Mesh {
        Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_gamma: Vec::new(),
            boundary_gamma0: Vec::new(),
            h: 1.0,
        }
    }

    fn annulus(h: f64) -> Mesh {
        generate_annulus(&circle(1.0), &circle(3.0), h).unwrap()
    }

    fn collect_dense(triplets: &[Triplet], n: usize) -> Vec<Complex64> {
        let mut m = vec![Complex64::ZERO; n * n];
        for &(i, j, v) in triplets {
            m[i * n + j] += v;
        }
        m
    }

    fn apply(triplets: &[Triplet], u: &[Complex64], n_rows: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::ZERO; n_rows];
        for &(i, j, v) in triplets {
            out[i] += v * u[j];
        }
        out
    }

    #[test]
    fn unit_triangle_stiffness_matches_reference() {
        let spec = ProblemSpec::new(KernelSet::laplace());
        let t = assemble_interior(&unit_triangle_mesh(), &spec, None).unwrap();
        let m = collect_dense(&t, 3);
        let expect = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m[i * 3 + j].re, expect[i][j], epsilon = 1e-14);
                assert_eq!(m[i * 3 + j].im, 0.0);
            }
        }
    }

    #[test]
    fn helmholtz_mass_totals_domain_area() {
        let mesh = annulus(0.5);
        let k = 1.3;
        let wave = ProblemSpec::new(KernelSet::helmholtz(k).unwrap());
        let stat = ProblemSpec::new(KernelSet::laplace());
        let tw = assemble_interior(&mesh, &wave, None).unwrap();
        let ts = assemble_interior(&mesh, &stat, None).unwrap();
        let total: Complex64 = tw.iter().map(|t| t.2).sum::<Complex64>()
            - ts.iter().map(|t| t.2).sum::<Complex64>();
        assert_relative_eq!(total.re, -k * k * mesh.total_area(), max_relative = 1e-12);
        assert_relative_eq!(total.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn elastic_stiffness_is_symmetric_and_kills_rigid_motions() {
        let mesh = annulus(0.6);
        let spec = ProblemSpec::new(KernelSet::lame(3.0, 2.0).unwrap());
        let t = assemble_interior(&mesh, &spec, None).unwrap();

        let mut sums: HashMap<(usize, usize), Complex64> = HashMap::new();
        for &(i, j, v) in &t {
            *sums.entry((i, j)).or_insert(Complex64::ZERO) += v;
        }
        let mut checked = 0;
        for (&(i, j), &v) in &sums {
            if let Some(&w) = sums.get(&(j, i)) {
                assert!((v - w).norm() <= 1e-12 * (1.0 + v.norm()));
                checked += 1;
            }
        }
        assert!(checked > 100);

        let nv = mesh.vertices.len();
        let motions: [Box<dyn Fn(Point2) -> [f64; 2]>; 3] = [
            Box::new(|_| [1.0, 0.0]),
            Box::new(|_| [0.0, 1.0]),
            Box::new(|p| [-p[1], p[0]]),
        ];
        for motion in &motions {
            let u: Vec<Complex64> = (0..nv)
                .flat_map(|v| {
                    let m = motion(mesh.vertices[v]);
                    [Complex64::new(m[0], 0.0), Complex64::new(m[1], 0.0)]
                })
                .collect();
            let r = apply(&t, &u, 2 * nv);
            let worst = r.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            assert!(worst <= 1e-12, "rigid-motion residual {worst}");
        }
    }

    #[test]
    fn inertia_term_totals_density_times_area() {
        let mesh = annulus(0.6);
        let (rho, omega) = (0.5, 3.0);
        let wave = ProblemSpec::new(KernelSet::navier(rho, omega, 0.5, 2.0).unwrap());
        let stat = ProblemSpec::new(KernelSet::lame(0.5, 2.0).unwrap());
        let tw = assemble_interior(&mesh, &wave, None).unwrap();
        let ts = assemble_interior(&mesh, &stat, None).unwrap();
        let total: Complex64 = tw.iter().map(|t| t.2).sum::<Complex64>()
            - ts.iter().map(|t| t.2).sum::<Complex64>();
        // Two displacement components each carry the full mass.
        assert_relative_eq!(
            total.re,
            -rho * omega * omega * 2.0 * mesh.total_area(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn refraction_rejected_off_helmholtz() {
        let mesh = annulus(0.8);
        let spec = ProblemSpec::new(KernelSet::laplace());
        let n = |_: Point2| 2.0;
        assert!(matches!(
            assemble_interior(&mesh, &spec, Some(&n)),
            Err(AssemblyError::RefractionRequiresHelmholtz)
        ));
    }

    #[test]
    fn robin_mass_totals_circumference() {
        let mesh = annulus(0.4);
        let spec = ProblemSpec::new(KernelSet::helmholtz(1.0).unwrap());
        let mass = assemble_robin_mass(&mesh, &spec, &circle(3.0)).unwrap();
        let total: Complex64 = mass.iter().map(|t| t.2).sum();
        let expect = -Complex64::new(0.0, 2.0) * std::f64::consts::TAU * 3.0;
        assert!((total - expect).norm() <= 1e-9 * expect.norm());
    }

    #[test]
    fn static_dense_block_annihilates_constant_trace() {
        let mesh = annulus(0.5);
        let spec = ProblemSpec::new(KernelSet::laplace());
        let block = assemble_abc_block(&mesh, &spec, &circle(1.0), &circle(3.0)).unwrap();
        assert!(block.mass.is_empty());
        let ones = vec![Complex64::ONE; block.cols.len()];
        for r in 0..block.rows.len() {
            let mut acc = Complex64::ZERO;
            for c in 0..block.cols.len() {
                acc += block.entry(r, c) * ones[c];
            }
            assert!(acc.norm() <= 1e-7, "row {r} residual {}", acc.norm());
        }
    }

    #[test]
    fn dense_block_is_affine_in_alpha() {
        let mesh = annulus(0.8);
        let kernel = KernelSet::helmholtz(1.0).unwrap();
        let blocks: Vec<AbcBlock> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&a| {
                let spec = ProblemSpec::new(kernel.clone()).with_alpha(a).unwrap();
                assemble_abc_block(&mesh, &spec, &circle(1.0), &circle(3.0)).unwrap()
            })
            .collect();
        let mut scale = 0.0f64;
        for v in &blocks[1].dense {
            scale = scale.max(v.norm());
        }
        for idx in 0..blocks[0].dense.len() {
            let d1 = blocks[1].dense[idx] - blocks[0].dense[idx];
            let d2 = blocks[2].dense[idx] - blocks[1].dense[idx];
            assert!((d1 - d2).norm() <= 1e-12 * scale);
        }
    }

    #[test]
    fn dense_block_stable_under_quadrature_refinement() {
        let mesh = annulus(0.7);
        let kernel = KernelSet::helmholtz(1.0).unwrap();
        let coarse = ProblemSpec::new(kernel.clone());
        let mut fine = ProblemSpec::new(kernel);
        fine.boundary_gauss = 8;
        fine.panel_splits = 2;
        let b0 = assemble_abc_block(&mesh, &coarse, &circle(1.0), &circle(3.0)).unwrap();
        let b1 = assemble_abc_block(&mesh, &fine, &circle(1.0), &circle(3.0)).unwrap();
        let mut worst = 0.0f64;
        for idx in 0..b0.dense.len() {
            worst = worst.max((b0.dense[idx] - b1.dense[idx]).norm());
        }
        assert!(worst <= 1e-8, "max entry drift {worst}");
    }

    #[test]
    fn parallel_and_sequential_blocks_are_bit_identical() {
        let mesh = annulus(0.8);
        let kernel = KernelSet::helmholtz(2.0).unwrap();
        let par = ProblemSpec::new(kernel.clone());
        let mut seq = ProblemSpec::new(kernel);
        seq.deterministic = true;
        let bp = assemble_abc_block(&mesh, &par, &circle(1.0), &circle(3.0)).unwrap();
        let bs = assemble_abc_block(&mesh, &seq, &circle(1.0), &circle(3.0)).unwrap();
        assert_eq!(bp.dense.len(), bs.dense.len());
        for idx in 0..bp.dense.len() {
            assert_eq!(bp.dense[idx], bs.dense[idx]);
        }
    }

    #[test]
    fn zero_data_gives_zero_load_and_loads_scale_linearly() {
        let mesh = annulus(0.7);
        let spec = ProblemSpec::new(KernelSet::helmholtz(1.0).unwrap());
        let zero = |_: Point2, _: Point2| [Complex64::ZERO; 2];
        let rhs = assemble_load(&mesh, &spec, &circle(1.0), &circle(3.0), &zero).unwrap();
        assert!(rhs.iter().all(|z| *z == Complex64::ZERO));

        let g = |p: Point2, n: Point2| {
            [
                Complex64::new(p[0] + n[1], p[1]),
                Complex64::ZERO,
            ]
        };
        let g2 = |p: Point2, n: Point2| {
            let v = g(p, n);
            [v[0] * 2.0, v[1] * 2.0]
        };
        let r1 = assemble_load(&mesh, &spec, &circle(1.0), &circle(3.0), &g).unwrap();
        let r2 = assemble_load(&mesh, &spec, &circle(1.0), &circle(3.0), &g2).unwrap();
        for idx in 0..r1.len() {
            assert_eq!(r1[idx] * 2.0, r2[idx]);
        }
    }

    // Independent evaluation of the load functional for a P1 test vector:
    // direct quadrature loops written without the assembly machinery.
    fn direct_load_pairing(
        mesh: &Mesh,
        spec: &ProblemSpec,
        gamma: &ParametricCurve,
        gamma0: &ParametricCurve,
        g: &dyn Fn(Point2, Point2) -> FieldValue,
        v: &[f64],
        gauss: usize,
        splits: usize,
    ) -> Complex64 {
        let ncomp = spec.components();
        let trace = |curve: &ParametricCurve, id: BoundaryId| {
            let map = mesh.trace_map(id);
            let spans = map.panel_spans();
            let mut subs = Vec::new();
            let mut parents = Vec::new();
            for (p, &(t0, t1)) in spans.iter().enumerate() {
                for s in 0..splits {
                    subs.push((
                        t0 + (t1 - t0) * s as f64 / splits as f64,
                        t0 + (t1 - t0) * (s + 1) as f64 / splits as f64,
                    ));
                    parents.push(p);
                }
            }
            let quad = curves::build_quadrature_on_spans(curve, &subs, gauss).unwrap();
            (map, spans, parents, quad)
        };

        let (map_y, spans_y, par_y, quad_y) = trace(gamma, BoundaryId::Gamma);
        let (map_x, spans_x, par_x, quad_x) = trace(gamma0, BoundaryId::Gamma0);
        let v_trace = |map: &crate::mesh::TraceMap,
                       spans: &[(f64, f64)],
                       parents: &[usize],
                       quad: &BoundaryQuadrature,
                       sp: usize,
                       node: usize,
                       c: usize| {
            let p = parents[sp];
            let (t0, t1) = spans[p];
            let u = (quad.nodes[node].theta - t0) / (t1 - t0);
            let n = map.vertices.len();
            let (l, r) = (map.vertices[p], map.vertices[(p + 1) % n]);
            (1.0 - u) * v[dof(l, c, ncomp)] + u * v[dof(r, c, ncomp)]
        };

        let mut total = Complex64::ZERO;
        // -(g, v) on the obstacle boundary.
        for (sp, panel) in quad_y.panels.iter().enumerate() {
            for node in panel.first_node..panel.first_node + panel.n_nodes {
                let qn = &quad_y.nodes[node];
                let gv = g(qn.point, qn.normal);
                for c in 0..ncomp {
                    let vt = v_trace(&map_y, &spans_y, &par_y, &quad_y, sp, node, c);
                    total -= qn.weight * gv[c] * vt;
                }
            }
        }
        // -(T_x S(g) - i alpha S(g), v) on the outer boundary.
        let i_alpha = Complex64::new(0.0, spec.alpha);
        for (sp, panel) in quad_x.panels.iter().enumerate() {
            for node in panel.first_node..panel.first_node + panel.n_nodes {
                let xn = &quad_x.nodes[node];
                let mut s = [Complex64::ZERO; 2];
                for yn in &quad_y.nodes {
                    let t = spec.kernel.traction_x(xn.point, yn.point, xn.normal).unwrap();
                    let u = spec.kernel.fundamental(xn.point, yn.point).unwrap();
                    let gv = g(yn.point, yn.normal);
                    for c in 0..ncomp {
                        for b in 0..ncomp {
                            s[c] += yn.weight * (t[c][b] - i_alpha * u[c][b]) * gv[b];
                        }
                    }
                }
                for c in 0..ncomp {
                    let vt = v_trace(&map_x, &spans_x, &par_x, &quad_x, sp, node, c);
                    total -= xn.weight * s[c] * vt;
                }
            }
        }
        total
    }

    #[test]
    fn load_matches_direct_fine_quadrature() {
        let mesh = annulus(0.6);
        let spec = ProblemSpec::new(KernelSet::laplace());
        let gamma = circle(1.0);
        let gamma0 = circle(3.0);
        // Boundary flux of u = -x1 / |x|^2.
        let g = |p: Point2, n: Point2| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            let gx = [
                -1.0 / r2 + 2.0 * p[0] * p[0] / (r2 * r2),
                2.0 * p[0] * p[1] / (r2 * r2),
            ];
            [Complex64::new(gx[0] * n[0] + gx[1] * n[1], 0.0), Complex64::ZERO]
        };
        let rhs = assemble_load(&mesh, &spec, &gamma, &gamma0, &g).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let v: Vec<f64> = (0..rhs.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let assembled: Complex64 = rhs
                .iter()
                .zip(&v)
                .map(|(z, &w)| z * w)
                .sum();
            let direct = direct_load_pairing(&mesh, &spec, &gamma, &gamma0, &g, &v, 10, 3);
            assert!(
                (assembled - direct).norm() <= 1e-8 * (1.0 + direct.norm()),
                "assembled {assembled} vs direct {direct}"
            );
        }
    }

    #[test]
    fn incident_load_integrates_partition_of_unity() {
        let mesh = annulus(0.5);
        let spec = ProblemSpec::new(KernelSet::helmholtz(1.0).unwrap());
        let c = Complex64::new(0.3, -0.7);
        let trace = move |_: Point2, _: Point2| [c, Complex64::ZERO];
        let rhs = assemble_load_incident(&mesh, &spec, &circle(3.0), &trace).unwrap();
        let total: Complex64 = rhs.iter().sum();
        let expect = c * std::f64::consts::TAU * 3.0;
        assert!((total - expect).norm() <= 1e-9 * expect.norm());
    }

    #[test]
    fn static_nullspace_survives_the_coupled_matrix() {
        // Laplace: constants lie in the kernel of interior + coupling rows.
        let mesh = annulus(0.5);
        let spec = ProblemSpec::new(KernelSet::laplace());
        let interior = assemble_interior(&mesh, &spec, None).unwrap();
        let block = assemble_abc_block(&mesh, &spec, &circle(1.0), &circle(3.0)).unwrap();
        let n = mesh.vertices.len();
        let mut triplets = interior;
        triplets.extend(block.triplets());
        let ones = vec![Complex64::ONE; n];
        let r = apply(&triplets, &ones, n);
        let worst = r.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(worst <= 1e-7, "constant residual {worst}");

        // Elastostatics: translations and the rotation.
        let spec = ProblemSpec::new(KernelSet::lame(3.0, 2.0).unwrap());
        let interior = assemble_interior(&mesh, &spec, None).unwrap();
        let block = assemble_abc_block(&mesh, &spec, &circle(1.0), &circle(3.0)).unwrap();
        let mut triplets = interior;
        triplets.extend(block.triplets());
        let motions: [Box<dyn Fn(Point2) -> [f64; 2]>; 3] = [
            Box::new(|_| [1.0, 0.0]),
            Box::new(|_| [0.0, 1.0]),
            Box::new(|p| [-p[1], p[0]]),
        ];
        for motion in &motions {
            let u: Vec<Complex64> = (0..n)
                .flat_map(|v| {
                    let m = motion(mesh.vertices[v]);
                    [Complex64::new(m[0], 0.0), Complex64::new(m[1], 0.0)]
                })
                .collect();
            let r = apply(&triplets, &u, 2 * n);
            let worst = r.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            assert!(worst <= 1e-6, "rigid-motion residual {worst}");
        }
    }

    #[test]
    fn constraints_reject_wave_and_weight_by_area() {
        let mesh = annulus(0.6);
        let wave = ProblemSpec::new(KernelSet::helmholtz(1.0).unwrap());
        assert!(matches!(
            assemble_constraints(&mesh, &wave),
            Err(AssemblyError::ConstraintsForWave)
        ));

        let spec = ProblemSpec::new(KernelSet::laplace());
        let rows = assemble_constraints(&mesh, &spec).unwrap();
        assert_eq!(rows.len(), 1);
        let total: f64 = rows[0].iter().map(|e| e.1).sum();
        assert_relative_eq!(total, mesh.total_area(), max_relative = 1e-12);

        let spec = ProblemSpec::new(KernelSet::lame(3.0, 2.0).unwrap());
        let rows = assemble_constraints(&mesh, &spec).unwrap();
        assert_eq!(rows.len(), 3);
        // The rotation row pairs positively with the rotation interpolant.
        let pairing: f64 = rows[2]
            .iter()
            .map(|&(j, w)| {
                let (v, c) = (j / 2, j % 2);
                let p = mesh.vertices[v];
                let rot = [-p[1], p[0]];
                w * rot[c]
            })
            .sum();
        assert!(pairing > 1.0);
    }

    #[test]
    fn volume_block_empty_for_homogeneous_medium() {
        let mesh = crate::mesh::generate_disc(&circle(2.0), 0.5).unwrap();
        let spec = ProblemSpec::new(KernelSet::helmholtz(1.0).unwrap());
        let n = |_: Point2| 1.0;
        let block = assemble_volume_block(&mesh, &spec, &circle(2.0), &n).unwrap();
        assert!(block.is_empty());
    }

    #[test]
    fn volume_block_rejects_support_on_boundary_and_non_helmholtz() {
        let mesh = crate::mesh::generate_disc(&circle(2.0), 0.5).unwrap();
        let spec = ProblemSpec::new(KernelSet::helmholtz(1.0).unwrap());
        let everywhere = |_: Point2| 2.0;
        assert!(matches!(
            assemble_volume_block(&mesh, &spec, &circle(2.0), &everywhere),
            Err(AssemblyError::VolumeSupportTouchesBoundary { .. })
        ));
        let stat = ProblemSpec::new(KernelSet::laplace());
        let bump = |p: Point2| if p[0] * p[0] + p[1] * p[1] < 0.64 { 2.0 } else { 1.0 };
        assert!(matches!(
            assemble_volume_block(&mesh, &stat, &circle(2.0), &bump),
            Err(AssemblyError::RefractionRequiresHelmholtz)
        ));
    }

    #[test]
    fn volume_block_matches_finer_quadrature() {
        let mesh = crate::mesh::generate_disc(&circle(2.0), 0.5).unwrap();
        let kernel = KernelSet::helmholtz(1.0).unwrap();
        // Contrast constant on whole triangles: freeze the support set from
        // centroids, then indicate membership point-wise, so the integrand
        // stays smooth inside every quadrature triangle.
        let support: Vec<[Point2; 3]> = mesh
            .triangles
            .iter()
            .filter_map(|t| {
                let p = [
                    mesh.vertices[t[0]],
                    mesh.vertices[t[1]],
                    mesh.vertices[t[2]],
                ];
                let c = [
                    (p[0][0] + p[1][0] + p[2][0]) / 3.0,
                    (p[0][1] + p[1][1] + p[2][1]) / 3.0,
                ];
                (c[0] * c[0] + c[1] * c[1] < 0.64).then_some(p)
            })
            .collect();
        assert!(!support.is_empty());
        let inside = move |p: Point2| {
            support.iter().any(|t| {
                (0..3).all(|e| {
                    let a = t[e];
                    let b = t[(e + 1) % 3];
                    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= -1e-12
                })
            })
        };
        let bump = move |p: Point2| if inside(p) { 1.5 } else { 1.0 };
        let coarse = ProblemSpec::new(kernel.clone());
        let mut fine = ProblemSpec::new(kernel);
        fine.volume_degree = 5;
        let b0 = assemble_volume_block(&mesh, &coarse, &circle(2.0), &bump).unwrap();
        let b1 = assemble_volume_block(&mesh, &fine, &circle(2.0), &bump).unwrap();
        assert!(!b0.is_empty());
        assert_eq!(b0.cols, b1.cols);
        // Pair with the constant-one interpolant on the support columns.
        let mut worst = 0.0f64;
        for r in 0..b0.rows.len() {
            let row0: Complex64 = (0..b0.cols.len())
                .map(|c| b0.dense[r * b0.cols.len() + c])
                .sum();
            let row1: Complex64 = (0..b1.cols.len())
                .map(|c| b1.dense[r * b1.cols.len() + c])
                .sum();
            worst = worst.max((row0 - row1).norm());
        }
        assert!(worst <= 1e-6, "volume row drift {worst}");
    }

    #[test]
    fn bordered_system_shape_and_padding() {
        let mesh = annulus(0.7);
        let spec = ProblemSpec::new(KernelSet::laplace());
        let interior = assemble_interior(&mesh, &spec, None).unwrap();
        let constraints = assemble_constraints(&mesh, &spec).unwrap();
        let n = mesh.vertices.len();
        let rhs = vec![Complex64::ZERO; n];
        let sys = build_system(
            &mesh,
            &spec,
            interior,
            None,
            None,
            Some(&constraints),
            rhs,
        )
        .unwrap();
        assert_eq!(sys.n_dof, n);
        assert_eq!(sys.n_multipliers, 1);
        assert_eq!(sys.rhs.len(), n + 1);
        let border_rows = sys.triplets.iter().filter(|t| t.0 == n).count();
        let border_cols = sys.triplets.iter().filter(|t| t.1 == n).count();
        assert_eq!(border_rows, n);
        assert_eq!(border_cols, n);
    }
}
