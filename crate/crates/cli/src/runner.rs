//! Experiment execution: single solves, convergence series, field exports,
//! and pre-flight validation, with per-stage timings and file outputs.

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use annulus_core::assembly::{
    assemble_abc_block, assemble_constraints, assemble_interior, assemble_load,
    assemble_load_incident, assemble_robin_mass, assemble_volume_block, build_system, dof,
    ProblemSpec,
};
use annulus_core::curves::{
    build_quadrature, build_quadrature_on_spans, check_enclosure, ParametricCurve,
};
use annulus_core::mesh::{generate_annulus, generate_disc, refine_uniform, BoundaryId, Mesh};
use annulus_core::solve::{compute_errors, solve_system, ErrorReport, Solution};
use annulus_core::{Complex64, FieldValue, Point2};

use crate::config::{ExperimentConfig, Preset, Problem, Resolved};
use crate::presets::{error_bundle, incident_bundle, ExactBundle};
use crate::vtk::write_vtk;
use crate::CliError;

/// Collected log lines, echoed to stdout and flushed to `run.log`.
pub struct Log {
    lines: Vec<String>,
}

impl Log {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    pub fn say(&mut self, line: impl Into<String>) {
        let line = line.into();
        println!("{line}");
        self.lines.push(line);
    }

    fn flush(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::write(dir.join("run.log"), self.lines.join("\n") + "\n")
    }
}

/// One completed refinement level.
#[derive(Debug, Clone, Copy)]
pub struct LevelRow {
    pub level: usize,
    pub h: f64,
    pub n_dof: usize,
    pub l2_error: f64,
    pub h1_error: f64,
}

/// Convergence series with least-squares slopes over the last three levels;
/// slopes are reported only when at least three levels completed.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<LevelRow>,
    pub l2_rate: Option<f64>,
    pub h1_rate: Option<f64>,
}

/// Outcome of a single solve.
#[derive(Debug, Clone, Copy)]
pub struct RunSummary {
    pub n_dof: usize,
    pub residual: f64,
    pub errors: Option<ErrorReport>,
}

/// Outcome of a field export.
#[derive(Debug, Clone, Copy)]
pub struct FieldSummary {
    pub n_dof: usize,
    pub residual: f64,
    /// Largest total-field magnitude over mesh vertices.
    pub max_abs: f64,
    /// (max weak Neumann residual, data scale) on the obstacle boundary.
    pub neumann_residual: Option<(f64, f64)>,
}

#[derive(Debug, Default, Clone, Copy)]
struct StageTimes {
    mesh: Duration,
    assemble_sparse: Duration,
    assemble_dense: Duration,
    solve: Duration,
    errors: Duration,
}

impl StageTimes {
    fn line(&self) -> String {
        format!(
            "timings: mesh {:.3}s, assemble-sparse {:.3}s, assemble-dense {:.3}s, solve {:.3}s, errors {:.3}s",
            self.mesh.as_secs_f64(),
            self.assemble_sparse.as_secs_f64(),
            self.assemble_dense.as_secs_f64(),
            self.solve.as_secs_f64(),
            self.errors.as_secs_f64()
        )
    }
}

fn configure(res: &Resolved) {
    if res.deterministic {
        faer::set_global_parallelism(faer::Parallelism::None);
    } else {
        faer::set_global_parallelism(faer::Parallelism::Rayon(res.threads));
        if res.threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(res.threads)
                .build_global();
        }
    }
}

fn prepare_output(res: &Resolved) -> Result<(), CliError> {
    std::fs::create_dir_all(&res.output).map_err(|e| {
        CliError::Config(format!(
            "cannot create output directory {}: {e}",
            res.output.display()
        ))
    })
}

fn at_level(level: usize, e: CliError) -> CliError {
    match e {
        CliError::Config(m) => CliError::Config(format!("level {level}: {m}")),
        CliError::Numerical(m) => CliError::Numerical(format!("level {level}: {m}")),
    }
}

/// Boundary data driving one experiment.
struct RunData<'a> {
    /// Neumann data on the obstacle boundary (annulus problems).
    g: Option<&'a (dyn Fn(Point2, Point2) -> FieldValue + Sync)>,
    /// Robin trace of the incident wave on the artificial boundary
    /// (inhomogeneous problem).
    incident_trace: Option<&'a (dyn Fn(Point2, Point2) -> FieldValue + Sync)>,
}

type DataFn<'a> = Box<dyn Fn(Point2, Point2) -> FieldValue + Sync + 'a>;

/// Builds the load closures for the resolved experiment. The returned boxes
/// borrow `bundle`/`incident`, so the caller keeps those alive.
fn build_data<'a>(
    res: &Resolved,
    bundle: Option<&'a ExactBundle>,
    incident: Option<&'a ExactBundle>,
) -> (Option<DataFn<'a>>, Option<DataFn<'a>>) {
    let kernel = res.spec.kernel;
    if res.problem == Problem::Inhomogeneous {
        let trace = incident.map(|inc| {
            Box::new(inc.robin_trace(kernel, res.spec.alpha)) as DataFn<'a>
        });
        return (None, trace);
    }
    if res.preset == Preset::PlaneWaveScattering {
        // Sound-hard scattering: the unknown is the scattered field with
        // Neumann data g = -T u^i on the obstacle.
        let g = incident.map(|inc| {
            let t = inc.neumann(kernel);
            Box::new(move |p: Point2, n: Point2| {
                let v = t(p, n);
                [-v[0], -v[1]]
            }) as DataFn<'a>
        });
        return (g, None);
    }
    let g = bundle.map(|b| Box::new(b.neumann(kernel)) as DataFn<'a>);
    (g, None)
}

fn solve_on(
    res: &Resolved,
    mesh: &Mesh,
    data: &RunData<'_>,
    times: &mut StageTimes,
) -> Result<Solution, CliError> {
    let spec = &res.spec;
    let refr: Option<&(dyn Fn(Point2) -> f64 + Sync)> =
        res.refraction.as_ref().map(|f| &**f as _);

    let t = Instant::now();
    let mut interior = assemble_interior(mesh, spec, refr)?;
    let constraints = if spec.kernel.is_static() {
        Some(assemble_constraints(mesh, spec)?)
    } else {
        None
    };
    times.assemble_sparse += t.elapsed();

    let n_dof = mesh.vertices.len() * spec.components();
    let mut rhs = vec![Complex64::ZERO; n_dof];
    let mut abc = None;
    let mut volume = None;

    let t = Instant::now();
    if let Some(gamma) = &res.gamma {
        abc = Some(assemble_abc_block(mesh, spec, gamma, &res.gamma0)?);
        if let Some(g) = data.g {
            rhs = assemble_load(mesh, spec, gamma, &res.gamma0, g)?;
        }
    }
    if res.problem == Problem::Inhomogeneous {
        // The Robin mass on the artificial boundary rides inside the
        // coupling block for annulus problems; the disc carries it alone.
        interior.extend(assemble_robin_mass(mesh, spec, &res.gamma0)?);
        let n = refr.expect("inhomogeneous always carries a refraction");
        volume = Some(assemble_volume_block(mesh, spec, &res.gamma0, n)?);
        if let Some(trace) = data.incident_trace {
            let inc = assemble_load_incident(mesh, spec, &res.gamma0, trace)?;
            for (r, v) in rhs.iter_mut().zip(inc) {
                *r += v;
            }
        }
    }
    times.assemble_dense += t.elapsed();

    let t = Instant::now();
    let system = build_system(
        mesh,
        spec,
        interior,
        abc.as_ref(),
        volume.as_ref(),
        constraints.as_deref(),
        rhs,
    )?;
    let solution = solve_system(&system)?;
    times.solve += t.elapsed();
    Ok(solution)
}

fn base_mesh(res: &Resolved) -> Result<Mesh, CliError> {
    Ok(match &res.gamma {
        Some(gamma) => generate_annulus(gamma, &res.gamma0, res.base_h)?,
        None => generate_disc(&res.gamma0, res.base_h)?,
    })
}

fn fit_rate(rows: &[LevelRow], pick: impl Fn(&LevelRow) -> f64) -> f64 {
    let tail = &rows[rows.len().saturating_sub(3)..];
    let pts: Vec<(f64, f64)> = tail.iter().map(|r| (r.h.ln(), pick(r).ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn write_csv(path: &Path, rows: &[LevelRow]) -> std::io::Result<()> {
    use std::fmt::Write as _;
    let mut s = String::from("level,h,n_dof,l2_error,h1_error,l2_rate,h1_rate\n");
    for (i, r) in rows.iter().enumerate() {
        let (l2r, h1r) = if i == 0 {
            (String::new(), String::new())
        } else {
            let prev = &rows[i - 1];
            let dh = (prev.h / r.h).ln();
            (
                format!("{:.12e}", (prev.l2_error / r.l2_error).ln() / dh),
                format!("{:.12e}", (prev.h1_error / r.h1_error).ln() / dh),
            )
        };
        let _ = writeln!(
            s,
            "{},{:.12e},{},{:.12e},{:.12e},{l2r},{h1r}",
            r.level, r.h, r.n_dof, r.l2_error, r.h1_error
        );
    }
    std::fs::write(path, s)
}

/// Runs a convergence series and writes errors.csv and run.log.
pub fn converge(cfg: &ExperimentConfig) -> Result<ConvergenceReport, CliError> {
    let res = cfg.resolve()?;
    configure(&res);
    prepare_output(&res)?;
    let mut log = Log::new();
    let out = converge_inner(&res, &mut log);
    let _ = log.flush(&res.output);
    out
}

fn converge_inner(res: &Resolved, log: &mut Log) -> Result<ConvergenceReport, CliError> {
    let bundle = error_bundle(res).ok_or_else(|| {
        CliError::Config(format!(
            "convergence needs a preset with a closed-form solution; `{}` has none here",
            res.preset.name()
        ))
    })?;
    let incident = incident_bundle(res);
    for line in &res.echoes {
        log.say(line.clone());
    }
    log.say(format!(
        "convergence series: levels = {}, base_h = {}",
        res.levels, res.base_h
    ));

    let (g_store, trace_store) = build_data(res, Some(&bundle), incident.as_ref());
    let data = RunData {
        g: g_store.as_deref(),
        incident_trace: trace_store.as_deref(),
    };
    let exact = bundle.exact();

    log.say("level        h    n_dof     l2_error     h1_error");
    let mut rows: Vec<LevelRow> = Vec::new();
    let mut mesh: Option<Mesh> = None;
    for level in 0..res.levels {
        let mut times = StageTimes::default();
        let t = Instant::now();
        let current = match mesh.take() {
            None => base_mesh(res).map_err(|e| at_level(level, e))?,
            Some(prev) => refine_uniform(&prev, res.gamma.as_ref(), &res.gamma0)
                .map_err(|e| at_level(level, CliError::from(e)))?,
        };
        times.mesh = t.elapsed();

        let solution =
            solve_on(res, &current, &data, &mut times).map_err(|e| at_level(level, e))?;
        let t = Instant::now();
        let report = compute_errors(&current, &res.spec, &solution, &exact, res.error_degree)
            .map_err(|e| at_level(level, CliError::from(e)))?;
        times.errors = t.elapsed();

        log.say(format!(
            "{level:5} {:8.4} {:8} {:12.4e} {:12.4e}",
            report.h, report.n_dof, report.l2_error, report.h1_error
        ));
        log.say(format!("level {level} residual = {:.3e}", solution.residual));
        log.say(format!("level {level} {}", times.line()));
        rows.push(LevelRow {
            level,
            h: report.h,
            n_dof: report.n_dof,
            l2_error: report.l2_error,
            h1_error: report.h1_error,
        });
        mesh = Some(current);
    }

    let (l2_rate, h1_rate) = if rows.len() >= 3 {
        let l2 = fit_rate(&rows, |r| r.l2_error);
        let h1 = fit_rate(&rows, |r| r.h1_error);
        log.say(format!("fitted rates (last 3 levels): L2 {l2:.3}, H1 {h1:.3}"));
        (Some(l2), Some(h1))
    } else {
        log.say("fitted rates: skipped (need at least 3 levels)");
        (None, None)
    };

    write_csv(&res.output.join("errors.csv"), &rows)?;
    log.say(format!(
        "wrote {}",
        res.output.join("errors.csv").display()
    ));
    Ok(ConvergenceReport {
        rows,
        l2_rate,
        h1_rate,
    })
}

/// Solves once at `base_h`, reporting DOF count, residual, timings, and
/// errors when the preset defines an exact solution.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary, CliError> {
    let res = cfg.resolve()?;
    configure(&res);
    prepare_output(&res)?;
    let mut log = Log::new();
    let out = run_inner(&res, &mut log);
    let _ = log.flush(&res.output);
    out
}

fn run_inner(res: &Resolved, log: &mut Log) -> Result<RunSummary, CliError> {
    let bundle = error_bundle(res);
    let incident = incident_bundle(res);
    for line in &res.echoes {
        log.say(line.clone());
    }

    let mut times = StageTimes::default();
    let t = Instant::now();
    let mesh = base_mesh(res)?;
    times.mesh = t.elapsed();
    log.say(format!(
        "mesh: {} vertices, {} triangles, h = {:.4}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.h
    ));

    let (g_store, trace_store) = build_data(res, bundle.as_ref(), incident.as_ref());
    let data = RunData {
        g: g_store.as_deref(),
        incident_trace: trace_store.as_deref(),
    };
    let solution = solve_on(res, &mesh, &data, &mut times)?;
    let n_dof = mesh.vertices.len() * res.spec.components();
    log.say(format!(
        "n_dof = {n_dof}, residual = {:.3e}",
        solution.residual
    ));

    let errors = match &bundle {
        Some(b) => {
            let t = Instant::now();
            let report = compute_errors(&mesh, &res.spec, &solution, &b.exact(), res.error_degree)?;
            times.errors = t.elapsed();
            log.say(format!(
                "l2_error = {:.6e}, h1_error = {:.6e}",
                report.l2_error, report.h1_error
            ));
            Some(report)
        }
        None => None,
    };
    log.say(times.line());
    Ok(RunSummary {
        n_dof,
        residual: solution.residual,
        errors,
    })
}

/// Solves once and exports the total field to field.vtk. Allowed for
/// plane-wave incidence, the inhomogeneous problem, and zero-data runs.
pub fn field(cfg: &ExperimentConfig) -> Result<FieldSummary, CliError> {
    let res = cfg.resolve()?;
    let allowed = res.preset == Preset::PlaneWaveScattering
        || res.problem == Problem::Inhomogeneous
        || res.preset == Preset::None;
    if !allowed {
        return Err(CliError::Config(format!(
            "field export needs plane-wave incidence, an inhomogeneous medium, or zero data; got preset `{}`",
            res.preset.name()
        )));
    }
    configure(&res);
    prepare_output(&res)?;
    let mut log = Log::new();
    let out = field_inner(&res, &mut log);
    let _ = log.flush(&res.output);
    out
}

fn field_inner(res: &Resolved, log: &mut Log) -> Result<FieldSummary, CliError> {
    let incident = incident_bundle(res);
    for line in &res.echoes {
        log.say(line.clone());
    }

    let mut times = StageTimes::default();
    let t = Instant::now();
    let mesh = base_mesh(res)?;
    times.mesh = t.elapsed();
    log.say(format!(
        "mesh: {} vertices, {} triangles, h = {:.4}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.h
    ));

    let (g_store, trace_store) = build_data(res, None, incident.as_ref());
    let data = RunData {
        g: g_store.as_deref(),
        incident_trace: trace_store.as_deref(),
    };
    let solution = solve_on(res, &mesh, &data, &mut times)?;
    let ncomp = res.spec.components();
    let n_dof = mesh.vertices.len() * ncomp;
    log.say(format!(
        "n_dof = {n_dof}, residual = {:.3e}",
        solution.residual
    ));

    // Total field at the vertices: scattered runs add the incident wave,
    // the inhomogeneous unknown already is the total field.
    let add_incident = res.problem != Problem::Inhomogeneous && res.preset == Preset::PlaneWaveScattering;
    let mut totals: Vec<FieldValue> = Vec::with_capacity(mesh.vertices.len());
    for (v, p) in mesh.vertices.iter().enumerate() {
        let mut val = [Complex64::ZERO; 2];
        for c in 0..ncomp {
            val[c] = solution.coefficients[dof(v, c, ncomp)];
        }
        if add_incident {
            let inc = incident.as_ref().expect("plane-wave preset");
            let iv = (inc.value)(*p);
            for c in 0..ncomp {
                val[c] += iv[c];
            }
        }
        totals.push(val);
    }

    let mut fields: Vec<(String, Vec<f64>)> = Vec::new();
    for c in 0..ncomp {
        let stem = if ncomp == 1 {
            "u".to_string()
        } else {
            format!("u{}", c + 1)
        };
        fields.push((
            format!("{stem}_re"),
            totals.iter().map(|t| t[c].re).collect(),
        ));
        fields.push((
            format!("{stem}_im"),
            totals.iter().map(|t| t[c].im).collect(),
        ));
        fields.push((
            format!("{stem}_abs"),
            totals.iter().map(|t| t[c].norm()).collect(),
        ));
    }
    let max_abs = totals
        .iter()
        .map(|t| (t[0].norm_sqr() + t[1].norm_sqr()).sqrt())
        .fold(0.0f64, f64::max);
    log.say(format!("total-field max magnitude = {max_abs:.6e}"));

    let vtk_path = res.output.join("field.vtk");
    write_vtk(&vtk_path, "total field", &mesh, &fields)?;
    log.say(format!("wrote {}", vtk_path.display()));

    let neumann_residual = match &res.gamma {
        Some(gamma) => {
            let (max_r, scale) =
                neumann_residual(&mesh, gamma, &res.spec, &solution.coefficients, data.g)?;
            log.say(format!(
                "weak Neumann residual on the obstacle: max {max_r:.3e} (data scale {scale:.3e})"
            ));
            Some((max_r, scale))
        }
        None => None,
    };
    log.say(times.line());
    Ok(FieldSummary {
        n_dof,
        residual: solution.residual,
        max_abs,
        neumann_residual,
    })
}

fn p1_grads(p: [Point2; 3]) -> [[f64; 2]; 3] {
    let e1 = [p[1][0] - p[0][0], p[1][1] - p[0][1]];
    let e2 = [p[2][0] - p[0][0], p[2][1] - p[0][1]];
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    let g1 = [e2[1] / det, -e2[0] / det];
    let g2 = [-e1[1] / det, e1[0] / det];
    [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
}

/// Max weak residual of `T u_h - g` against the obstacle trace basis, with
/// the matching data scale `max_i |(g, phi_i)|`-style for context.
fn neumann_residual(
    mesh: &Mesh,
    gamma: &ParametricCurve,
    spec: &ProblemSpec,
    coeffs: &[Complex64],
    g: Option<&(dyn Fn(Point2, Point2) -> FieldValue + Sync)>,
) -> Result<(f64, f64), CliError> {
    let trace = mesh.trace_map(BoundaryId::Gamma);
    let n = trace.len();
    if n == 0 {
        return Ok((0.0, 0.0));
    }
    let spans = trace.panel_spans();
    let quad = build_quadrature_on_spans(gamma, &spans, spec.boundary_gauss.max(4))?;

    let mut edge_tri: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            edge_tri.insert((a.min(b), a.max(b)), t);
        }
    }

    let ncomp = spec.components();
    let kernel = spec.kernel;
    let mut resid = vec![Complex64::ZERO; n * ncomp];
    let mut scale = vec![0.0f64; n * ncomp];
    for (pi, panel) in quad.panels.iter().enumerate() {
        let (v0, v1) = (trace.vertices[pi], trace.vertices[(pi + 1) % n]);
        let &t = edge_tri
            .get(&(v0.min(v1), v0.max(v1)))
            .ok_or_else(|| CliError::Numerical("obstacle edge without a triangle".into()))?;
        let tri = mesh.triangles[t];
        let grads = p1_grads([
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        ]);
        // grad[i][j] = d_j u_i on this triangle
        let mut grad = [[Complex64::ZERO; 2]; 2];
        for (i, &v) in tri.iter().enumerate() {
            for c in 0..ncomp {
                let u = coeffs[dof(v, c, ncomp)];
                grad[c][0] += u * grads[i][0];
                grad[c][1] += u * grads[i][1];
            }
        }
        for node in &quad.nodes[panel.first_node..panel.first_node + panel.n_nodes] {
            let tv = kernel.traction_of_field(&grad, node.normal);
            let gv = match g {
                Some(g) => g(node.point, node.normal),
                None => [Complex64::ZERO; 2],
            };
            let u = (node.theta - panel.theta0) / (panel.theta1 - panel.theta0);
            let phis = [1.0 - u, u];
            let ends = [pi, (pi + 1) % n];
            for c in 0..ncomp {
                for e in 0..2 {
                    let idx = ends[e] * ncomp + c;
                    resid[idx] += node.weight * phis[e] * (tv[c] - gv[c]);
                    scale[idx] += node.weight * phis[e] * gv[c].norm();
                }
            }
        }
    }
    let max_r = resid.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let max_s = scale.iter().copied().fold(0.0f64, f64::max);
    Ok((max_r, max_s))
}

/// Pre-flight checks without solving: boundary separation, the zero-mean
/// requirement on Laplace Neumann data, and the inhomogeneity support
/// condition.
pub fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let res = cfg.resolve()?;
    prepare_output(&res)?;
    let mut log = Log::new();
    let out = validate_inner(&res, &mut log);
    let _ = log.flush(&res.output);
    out
}

fn validate_inner(res: &Resolved, log: &mut Log) -> Result<(), CliError> {
    for line in &res.echoes {
        log.say(line.clone());
    }

    if let Some(gamma) = &res.gamma {
        let found = check_enclosure(gamma, &res.gamma0, res.spec.separation)?;
        log.say(format!(
            "separation ok: min boundary distance {found:.4} (required {:.2})",
            res.spec.separation
        ));

        let bundle = error_bundle(res);
        match (res.problem, &bundle) {
            (Problem::Laplace, Some(b)) => {
                let (integral, scale) = boundary_integrals(res, gamma, b)?;
                let total = integral[0].norm();
                if total > 1e-6 * scale.max(1e-12) {
                    return Err(CliError::Config(format!(
                        "Neumann data violates the zero-mean requirement: |∫g ds| = {total:.3e} (data scale {scale:.3e})"
                    )));
                }
                log.say(format!(
                    "compatibility ok: |∫g ds| = {total:.3e} (data scale {scale:.3e})"
                ));
            }
            (Problem::Lame, Some(b)) => {
                let (force, moment) = lame_resultants(res, gamma, b)?;
                log.say(format!(
                    "data resultants: net force = ({:.3e}, {:.3e}), net moment = {:.3e}; carried by the representation's growth terms, no constraint imposed",
                    force[0].norm(),
                    force[1].norm(),
                    moment.norm()
                ));
            }
            (_, None) => log.say("compatibility: no boundary data configured"),
            _ => log.say("compatibility: not required (uniquely solvable wave problem)"),
        }
    } else {
        let mesh = generate_disc(&res.gamma0, res.base_h)?;
        let n = res
            .refraction
            .as_ref()
            .expect("inhomogeneous always carries a refraction");
        let on_gamma0: std::collections::HashSet<usize> = mesh
            .trace_map(BoundaryId::Gamma0)
            .vertices
            .iter()
            .copied()
            .collect();
        let mut support = 0usize;
        for tri in &mesh.triangles {
            let c = [
                (mesh.vertices[tri[0]][0] + mesh.vertices[tri[1]][0] + mesh.vertices[tri[2]][0])
                    / 3.0,
                (mesh.vertices[tri[0]][1] + mesh.vertices[tri[1]][1] + mesh.vertices[tri[2]][1])
                    / 3.0,
            ];
            if (n(c) - 1.0).abs() > 1e-12 {
                support += 1;
                if let Some(&v) = tri.iter().find(|v| on_gamma0.contains(v)) {
                    return Err(CliError::Config(format!(
                        "refraction support touches the artificial boundary at vertex {v}; shrink the inhomogeneity or enlarge gamma0"
                    )));
                }
            }
        }
        log.say(format!(
            "refraction support ok: {support} of {} triangles perturbed, none touching the boundary",
            mesh.triangles.len()
        ));
    }
    log.say("validate: ok");
    Ok(())
}

fn boundary_quadrature(
    res: &Resolved,
    gamma: &ParametricCurve,
) -> Result<annulus_core::curves::BoundaryQuadrature, CliError> {
    let n_panels = ((gamma.perimeter() / res.base_h).ceil() as usize * 2).max(64);
    Ok(build_quadrature(gamma, n_panels, 8)?)
}

fn boundary_integrals(
    res: &Resolved,
    gamma: &ParametricCurve,
    bundle: &ExactBundle,
) -> Result<(FieldValue, f64), CliError> {
    let quad = boundary_quadrature(res, gamma)?;
    let g = bundle.neumann(res.spec.kernel);
    let mut integral = [Complex64::ZERO; 2];
    let mut scale = 0.0f64;
    for node in &quad.nodes {
        let gv = g(node.point, node.normal);
        for c in 0..2 {
            integral[c] += node.weight * gv[c];
        }
        scale += node.weight * (gv[0].norm_sqr() + gv[1].norm_sqr()).sqrt();
    }
    Ok((integral, scale))
}

fn lame_resultants(
    res: &Resolved,
    gamma: &ParametricCurve,
    bundle: &ExactBundle,
) -> Result<(FieldValue, Complex64), CliError> {
    let quad = boundary_quadrature(res, gamma)?;
    let g = bundle.neumann(res.spec.kernel);
    let mut force = [Complex64::ZERO; 2];
    let mut moment = Complex64::ZERO;
    for node in &quad.nodes {
        let gv = g(node.point, node.normal);
        force[0] += node.weight * gv[0];
        force[1] += node.weight * gv[1];
        moment += node.weight * (node.point[0] * gv[1] - node.point[1] * gv[0]);
    }
    Ok((force, moment))
}
