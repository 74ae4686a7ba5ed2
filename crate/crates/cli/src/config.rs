//! JSON experiment configuration: strict parsing (unknown keys rejected,
//! errors carry the offending field path) and resolution into solver inputs.

use std::path::{Path, PathBuf};

use annulus_core::assembly::ProblemSpec;
use annulus_core::curves::{CurveKind, ParametricCurve};
use annulus_core::kernels::KernelSet;
use annulus_core::Point2;
use serde::Deserialize;

use crate::CliError;

/// Governing operator selected in the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Laplace,
    Helmholtz,
    Lame,
    Navier,
    /// Helmholtz with a refractive index perturbation on the full disc
    /// bounded by `gamma0`; there is no obstacle curve.
    Inhomogeneous,
}

/// Physical parameters; which ones are required depends on `problem`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    pub k: Option<f64>,
    pub rho: Option<f64>,
    pub omega: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    /// Robin impedance coefficient; defaults to 2 for wave problems and is
    /// fixed at 0 for static ones.
    pub alpha: Option<f64>,
    pub refraction: Option<RefractionSpec>,
}

/// Refractive index n(y) for the inhomogeneous problem.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefractionSpec {
    pub kind: RefractionKind,
    /// Constant value for `uniform`.
    pub value: Option<f64>,
    /// Peak deviation from 1 for `bump`.
    pub amplitude: Option<f64>,
    /// Support radius for `bump`.
    pub radius: Option<f64>,
    #[serde(default)]
    pub center: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefractionKind {
    Uniform,
    Bump,
}

/// One boundary curve.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub kind: CurveKindName,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub center: [f64; 2],
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKindName {
    Circle,
    Ellipse,
    Kite,
    Peanut,
    Star,
}

impl CurveKindName {
    fn to_kind(self) -> CurveKind {
        match self {
            CurveKindName::Circle => CurveKind::Circle,
            CurveKindName::Ellipse => CurveKind::Ellipse,
            CurveKindName::Kite => CurveKind::Kite,
            CurveKindName::Peanut => CurveKind::Peanut,
            CurveKindName::Star => CurveKind::Star,
        }
    }
}

impl CurveSpec {
    pub fn build(&self) -> Result<ParametricCurve, CliError> {
        Ok(ParametricCurve::new(
            self.kind.to_kind(),
            self.scale,
            self.center,
        )?)
    }
}

/// Named closed-form solution driving the boundary data and error norms.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSolutionSpec {
    pub preset: Preset,
    /// Unit propagation direction; only meaningful for plane-wave incidence.
    pub direction: Option<[f64; 2]>,
}

impl Default for ExactSolutionSpec {
    fn default() -> Self {
        Self {
            preset: Preset::None,
            direction: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Example1,
    Example2,
    Example3,
    Example4,
    PlaneWaveScattering,
    None,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Example1 => "example1",
            Preset::Example2 => "example2",
            Preset::Example3 => "example3",
            Preset::Example4 => "example4",
            Preset::PlaneWaveScattering => "plane_wave_scattering",
            Preset::None => "none",
        }
    }
}

/// Quadrature and error-measurement settings, defaulting to the solver's.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    pub boundary_gauss: usize,
    pub panel_splits: usize,
    pub volume_degree: usize,
    pub error_degree: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            boundary_gauss: annulus_core::assembly::DEFAULT_BOUNDARY_GAUSS,
            panel_splits: 1,
            volume_degree: annulus_core::assembly::DEFAULT_VOLUME_DEGREE,
            error_degree: annulus_core::solve::DEFAULT_ERROR_DEGREE,
        }
    }
}

/// The complete experiment description read from one JSON document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    #[serde(default)]
    pub parameters: Parameters,
    /// Obstacle boundary; absent exactly for the inhomogeneous problem.
    pub gamma: Option<CurveSpec>,
    /// Artificial boundary enclosing the computational domain.
    pub gamma0: CurveSpec,
    #[serde(default)]
    pub exact_solution: ExactSolutionSpec,
    /// Number of meshes in the series (1 = single mesh).
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Target mesh size of the coarsest level.
    pub base_h: f64,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Directory receiving errors.csv / field.vtk / run.log.
    pub output: PathBuf,
    /// Worker threads; 0 picks the machine default.
    #[serde(default)]
    pub threads: usize,
    /// Force sequential assembly/factorization so repeated runs are
    /// bit-identical.
    #[serde(default)]
    pub deterministic: bool,
}

fn default_levels() -> usize {
    1
}

/// Parses a config document, reporting the JSON path of any offending field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("at `{path}`: {}", e.inner()))
    })
}

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// A validated experiment with solver-ready ingredients.
pub struct Resolved {
    pub problem: Problem,
    pub spec: ProblemSpec,
    pub gamma: Option<ParametricCurve>,
    pub gamma0: ParametricCurve,
    pub preset: Preset,
    /// Unit incidence direction (plane-wave presets only).
    pub direction: Point2,
    pub refraction: Option<Box<dyn Fn(Point2) -> f64 + Sync>>,
    pub levels: usize,
    pub base_h: f64,
    pub error_degree: usize,
    pub output: PathBuf,
    pub threads: usize,
    pub deterministic: bool,
    /// Human-readable parameter echoes for the run log.
    pub echoes: Vec<String>,
}

fn require(name: &str, v: Option<f64>, problem: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Config(format!("problem `{problem}` needs parameter `{name}`")))
}

fn forbid(name: &str, v: Option<f64>, problem: &str) -> Result<(), CliError> {
    if v.is_some() {
        return Err(CliError::Config(format!(
            "parameter `{name}` is not used by problem `{problem}`"
        )));
    }
    Ok(())
}

/// Checks a preset-pinned parameter: absent means pinned value, present must
/// match it exactly.
fn pin(name: &str, v: Option<f64>, pinned: f64, preset: &str) -> Result<f64, CliError> {
    match v {
        None => Ok(pinned),
        Some(x) if x == pinned => Ok(pinned),
        Some(x) => Err(CliError::Config(format!(
            "preset `{preset}` pins {name} = {pinned}, config says {x}"
        ))),
    }
}

impl ExperimentConfig {
    /// Full validation pass; everything the runner needs comes out of here.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let p = &self.parameters;
        let preset = self.exact_solution.preset;
        let mut echoes = Vec::new();

        let problem_name = match self.problem {
            Problem::Laplace => "laplace",
            Problem::Helmholtz => "helmholtz",
            Problem::Lame => "lame",
            Problem::Navier => "navier",
            Problem::Inhomogeneous => "inhomogeneous",
        };

        let allowed = match self.problem {
            Problem::Laplace => vec![],
            Problem::Helmholtz | Problem::Inhomogeneous => vec!["k"],
            Problem::Lame => vec!["lambda", "mu"],
            Problem::Navier => vec!["rho", "omega", "lambda", "mu"],
        };
        for (name, value) in [
            ("k", p.k),
            ("rho", p.rho),
            ("omega", p.omega),
            ("lambda", p.lambda),
            ("mu", p.mu),
        ] {
            if !allowed.contains(&name) {
                forbid(name, value, problem_name)?;
            }
        }
        if p.refraction.is_some() && self.problem != Problem::Inhomogeneous {
            return Err(CliError::Config(format!(
                "parameter `refraction` is not used by problem `{problem_name}`"
            )));
        }

        let compatible = match preset {
            Preset::Example1 => self.problem == Problem::Laplace,
            Preset::Example2 => self.problem == Problem::Helmholtz,
            Preset::Example3 => self.problem == Problem::Lame,
            Preset::Example4 => self.problem == Problem::Navier,
            Preset::PlaneWaveScattering => {
                matches!(self.problem, Problem::Helmholtz | Problem::Inhomogeneous)
            }
            Preset::None => true,
        };
        if !compatible {
            return Err(CliError::Config(format!(
                "preset `{}` does not apply to problem `{problem_name}`",
                preset.name()
            )));
        }
        if self.exact_solution.direction.is_some() && preset != Preset::PlaneWaveScattering {
            return Err(CliError::Config(
                "`direction` is only meaningful for preset `plane_wave_scattering`".into(),
            ));
        }
        let direction = match self.exact_solution.direction {
            None => [1.0, 0.0],
            Some(d) => {
                let len = d[0].hypot(d[1]);
                if !(len > 0.0) || !len.is_finite() {
                    return Err(CliError::Config("`direction` must be a nonzero vector".into()));
                }
                [d[0] / len, d[1] / len]
            }
        };

        let kernel = match self.problem {
            Problem::Laplace => KernelSet::laplace(),
            Problem::Helmholtz | Problem::Inhomogeneous => {
                KernelSet::helmholtz(require("k", p.k, problem_name)?)?
            }
            Problem::Lame => {
                let (lambda, mu) = if preset == Preset::Example3 {
                    (
                        pin("lambda", p.lambda, 3.0, "example3")?,
                        pin("mu", p.mu, 2.0, "example3")?,
                    )
                } else {
                    (
                        require("lambda", p.lambda, problem_name)?,
                        require("mu", p.mu, problem_name)?,
                    )
                };
                if preset == Preset::Example3 {
                    echoes.push(format!(
                        "preset example3: mu = {mu}, lambda = {lambda}, source = (0.5, 0)"
                    ));
                }
                KernelSet::lame(lambda, mu)?
            }
            Problem::Navier => {
                let (rho, mu, lambda) = if preset == Preset::Example4 {
                    (
                        pin("rho", p.rho, 0.5, "example4")?,
                        pin("mu", p.mu, 2.0, "example4")?,
                        pin("lambda", p.lambda, 0.5, "example4")?,
                    )
                } else {
                    (
                        require("rho", p.rho, problem_name)?,
                        require("mu", p.mu, problem_name)?,
                        require("lambda", p.lambda, problem_name)?,
                    )
                };
                let omega = require("omega", p.omega, problem_name)?;
                if preset == Preset::Example4 {
                    echoes.push(format!(
                        "preset example4: rho = {rho}, mu = {mu}, lambda = {lambda}, omega = {omega}"
                    ));
                }
                KernelSet::navier(rho, omega, lambda, mu)?
            }
        };

        let mut spec = ProblemSpec::new(kernel);
        spec.boundary_gauss = self.quadrature.boundary_gauss;
        spec.panel_splits = self.quadrature.panel_splits;
        spec.volume_degree = self.quadrature.volume_degree;
        spec.deterministic = self.deterministic;
        if let Some(alpha) = p.alpha {
            if kernel.is_static() && alpha == 0.0 {
                // explicit zero on a static problem is the default, fine
            } else {
                spec = spec.with_alpha(alpha)?;
            }
        }
        spec.validate()?;
        echoes.push(format!("impedance alpha = {}", spec.alpha));

        let gamma = match (self.problem, &self.gamma) {
            (Problem::Inhomogeneous, Some(_)) => {
                return Err(CliError::Config(
                    "the inhomogeneous problem meshes the full disc; remove `gamma`".into(),
                ))
            }
            (Problem::Inhomogeneous, None) => None,
            (_, Some(spec)) => Some(spec.build()?),
            (_, None) => {
                return Err(CliError::Config(format!(
                    "problem `{problem_name}` needs an obstacle curve `gamma`"
                )))
            }
        };
        let gamma0 = self.gamma0.build()?;

        let refraction = match self.problem {
            Problem::Inhomogeneous => {
                let spec = p.refraction.as_ref().ok_or_else(|| {
                    CliError::Config(
                        "the inhomogeneous problem needs `parameters.refraction`".into(),
                    )
                })?;
                Some(build_refraction(spec)?)
            }
            _ => None,
        };

        if self.levels == 0 {
            return Err(CliError::Config("`levels` must be at least 1".into()));
        }
        if !(self.base_h > 0.0) || !self.base_h.is_finite() {
            return Err(CliError::Config(format!(
                "`base_h` must be a positive mesh size, got {}",
                self.base_h
            )));
        }

        Ok(Resolved {
            problem: self.problem,
            spec,
            gamma,
            gamma0,
            preset,
            direction,
            refraction,
            levels: self.levels,
            base_h: self.base_h,
            error_degree: self.quadrature.error_degree,
            output: self.output.clone(),
            threads: self.threads,
            deterministic: self.deterministic,
            echoes,
        })
    }
}

fn build_refraction(
    spec: &RefractionSpec,
) -> Result<Box<dyn Fn(Point2) -> f64 + Sync>, CliError> {
    match spec.kind {
        RefractionKind::Uniform => {
            if spec.amplitude.is_some() || spec.radius.is_some() {
                return Err(CliError::Config(
                    "uniform refraction takes only `value`".into(),
                ));
            }
            let value = spec
                .value
                .ok_or_else(|| CliError::Config("uniform refraction needs `value`".into()))?;
            if !value.is_finite() || value <= 0.0 {
                return Err(CliError::Config(format!(
                    "refraction `value` must be positive, got {value}"
                )));
            }
            Ok(Box::new(move |_| value))
        }
        RefractionKind::Bump => {
            if spec.value.is_some() {
                return Err(CliError::Config(
                    "bump refraction takes `amplitude` and `radius`, not `value`".into(),
                ));
            }
            let amplitude = spec
                .amplitude
                .ok_or_else(|| CliError::Config("bump refraction needs `amplitude`".into()))?;
            let radius = spec
                .radius
                .ok_or_else(|| CliError::Config("bump refraction needs `radius`".into()))?;
            if !(radius > 0.0) || !radius.is_finite() || !amplitude.is_finite() {
                return Err(CliError::Config(format!(
                    "bump refraction needs finite amplitude and positive radius, got amplitude {amplitude}, radius {radius}"
                )));
            }
            let center = spec.center;
            Ok(Box::new(move |y: Point2| {
                let dx = y[0] - center[0];
                let dy = y[1] - center[1];
                let s2 = (dx * dx + dy * dy) / (radius * radius);
                if s2 >= 1.0 {
                    1.0
                } else {
                    1.0 + amplitude * (1.0 - 1.0 / (1.0 - s2)).exp()
                }
            }))
        }
    }
}
