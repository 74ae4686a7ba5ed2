//! Parametric boundary curves, their quadratures, and geometric predicates.
//!
//! Five smooth closed curves are supported, each parameterised over
//! `[0, 2*pi)` counterclockwise and placed by an affine map
//! `x = scale * base(theta) + center`. The outward unit normal is the
//! tangent rotated by `-pi/2`.

use crate::{dot, norm, sub, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Circle,
    Ellipse,
    Kite,
    Peanut,
    Star,
}

#[derive(Debug, Clone, Copy)]
pub struct ParametricCurve {
    pub kind: CurveKind,
    pub scale: f64,
    pub center: Point2,
    /// Parameterisation orientation; all built-in curves are counterclockwise.
    pub ccw: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CurveError {
    #[error("curve scale must be positive and finite, got {scale}")]
    InvalidScale { scale: f64 },
    #[error("quadrature needs at least 4 panels, got {n_panels}")]
    TooFewPanels { n_panels: usize },
    #[error("gauss order must lie in 1..=32, got {gauss_order}")]
    InvalidGaussOrder { gauss_order: usize },
    #[error("curves must be separated by at least {required}, sampled minimum {found:.6}")]
    SeparationViolated { required: f64, found: f64 },
    #[error("inner curve is not strictly contained in the outer curve")]
    NotContained,
}

impl ParametricCurve {
    pub fn new(kind: CurveKind, scale: f64, center: Point2) -> Result<Self, CurveError> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(CurveError::InvalidScale { scale });
        }
        Ok(Self {
            kind,
            scale,
            center,
            ccw: true,
        })
    }

    /// Unit circle placed with the given scale and center.
    pub fn circle(radius: f64, center: Point2) -> Result<Self, CurveError> {
        Self::new(CurveKind::Circle, radius, center)
    }

    fn base(&self, t: f64) -> (Point2, Point2, Point2) {
        let (s, c) = t.sin_cos();
        match self.kind {
            CurveKind::Circle => ([c, s], [-s, c], [-c, -s]),
            CurveKind::Ellipse => ([3.0 * c, 2.0 * s], [-3.0 * s, 2.0 * c], [-3.0 * c, -2.0 * s]),
            CurveKind::Kite => {
                let (s2, c2) = (2.0 * t).sin_cos();
                (
                    [c + 0.65 * c2 - 0.65, 1.5 * s],
                    [-s - 1.3 * s2, 1.5 * c],
                    [-c - 2.6 * c2, -1.5 * s],
                )
            }
            CurveKind::Peanut => {
                // rho(t) = sqrt(cos^2 + 0.25 sin^2) = sqrt(1 - 0.75 sin^2)
                let rho = (1.0 - 0.75 * s * s).sqrt();
                let drho = -0.75 * s * c / rho;
                let ddrho = (-0.75 * (c * c - s * s) - drho * drho) / rho;
                radial_jet(rho, drho, ddrho, s, c)
            }
            CurveKind::Star => {
                let (s5, c5) = (5.0 * t).sin_cos();
                let r = 1.0 + 0.3 * c5;
                let dr = -1.5 * s5;
                let ddr = -7.5 * c5;
                radial_jet(r, dr, ddr, s, c)
            }
        }
    }

    /// Point on the curve at parameter `theta`.
    pub fn eval(&self, theta: f64) -> Point2 {
        let (p, _, _) = self.base(theta);
        [
            self.scale * p[0] + self.center[0],
            self.scale * p[1] + self.center[1],
        ]
    }

    /// First derivative `x'(theta)`.
    pub fn derivative(&self, theta: f64) -> Point2 {
        let (_, d, _) = self.base(theta);
        [self.scale * d[0], self.scale * d[1]]
    }

    /// Second derivative `x''(theta)`.
    pub fn second_derivative(&self, theta: f64) -> Point2 {
        let (_, _, dd) = self.base(theta);
        [self.scale * dd[0], self.scale * dd[1]]
    }

    /// `|x'(theta)|`, the arc-length Jacobian.
    pub fn speed(&self, theta: f64) -> f64 {
        norm(self.derivative(theta))
    }

    /// Outward unit normal (tangent rotated by -pi/2 for ccw curves).
    pub fn normal(&self, theta: f64) -> Point2 {
        let d = self.derivative(theta);
        let len = norm(d);
        let sign = if self.ccw { 1.0 } else { -1.0 };
        [sign * d[1] / len, -sign * d[0] / len]
    }

    /// Arc length, by panel Gauss quadrature dense enough for ~1e-12 accuracy.
    pub fn perimeter(&self) -> f64 {
        let quad = build_quadrature(self, 256, 8).expect("fixed valid parameters");
        quad.nodes.iter().map(|n| n.weight).sum()
    }

    /// Largest arc-length Jacobian, sampled.
    pub fn max_speed(&self) -> f64 {
        (0..2048)
            .map(|i| self.speed(i as f64 / 2048.0 * std::f64::consts::TAU))
            .fold(0.0, f64::max)
    }

    /// Parameter of the curve point nearest to `p`, starting from `guess`.
    ///
    /// Newton iteration on the stationarity condition
    /// `(x(theta) - p) . x'(theta) = 0`, with a golden-section fallback on a
    /// bracket around the guess when Newton leaves it. Converges to 1e-12 in
    /// parameter for the mesh-refinement use case (guess = panel midpoint).
    pub fn nearest_parameter(&self, p: Point2, guess: f64) -> f64 {
        let objective = |t: f64| {
            let d = sub(self.eval(t), p);
            dot(d, d)
        };
        let grad = |t: f64| dot(sub(self.eval(t), p), self.derivative(t));
        let mut t = guess;
        let mut converged = false;
        for _ in 0..50 {
            let g = grad(t);
            let d = sub(self.eval(t), p);
            let xp = self.derivative(t);
            let hess = dot(xp, xp) + dot(d, self.second_derivative(t));
            if hess.abs() < 1e-300 {
                break;
            }
            let step = g / hess;
            t -= step;
            if step.abs() < 1e-13 {
                converged = true;
                break;
            }
        }
        if converged && (t - guess).abs() < 0.5 {
            return t;
        }
        // Fallback: golden-section search on a conservative bracket.
        let (mut a, mut b) = (guess - 0.3, guess + 0.3);
        let phi = 0.5 * (3.0 - 5.0_f64.sqrt());
        let (mut x1, mut x2) = (a + phi * (b - a), b - phi * (b - a));
        let (mut f1, mut f2) = (objective(x1), objective(x2));
        while b - a > 1e-13 {
            if f1 < f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = a + phi * (b - a);
                f1 = objective(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = b - phi * (b - a);
                f2 = objective(x2);
            }
        }
        0.5 * (a + b)
    }

    /// Winding-number containment test against a dense polygonal sampling.
    pub fn contains(&self, p: Point2) -> bool {
        let n = 2048;
        let mut winding = 0.0;
        let mut prev = sub(self.eval(0.0), p);
        for i in 1..=n {
            let t = i as f64 / n as f64 * std::f64::consts::TAU;
            let cur = sub(self.eval(t), p);
            winding += (prev[0] * cur[1] - prev[1] * cur[0]).atan2(dot(prev, cur));
            prev = cur;
        }
        winding.abs() > std::f64::consts::PI
    }
}

fn radial_jet(r: f64, dr: f64, ddr: f64, s: f64, c: f64) -> (Point2, Point2, Point2) {
    (
        [r * c, r * s],
        [dr * c - r * s, dr * s + r * c],
        [(ddr - r) * c - 2.0 * dr * s, (ddr - r) * s + 2.0 * dr * c],
    )
}

/// One quadrature node on a curve.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureNode {
    pub point: Point2,
    pub normal: Point2,
    /// Arc-length weight: Gauss weight times `|x'(theta)| * dtheta/2`.
    pub weight: f64,
    pub theta: f64,
}

/// Contiguous node range belonging to one panel.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub theta0: f64,
    pub theta1: f64,
    pub first_node: usize,
    pub n_nodes: usize,
}

/// Panel-wise Gauss quadrature in the curve's arc-length measure.
#[derive(Debug, Clone)]
pub struct BoundaryQuadrature {
    pub nodes: Vec<QuadratureNode>,
    pub panels: Vec<Panel>,
    pub gauss_order: usize,
}

/// Quadrature over `n_panels` panels uniform in the curve parameter.
pub fn build_quadrature(
    curve: &ParametricCurve,
    n_panels: usize,
    gauss_order: usize,
) -> Result<BoundaryQuadrature, CurveError> {
    if n_panels < 4 {
        return Err(CurveError::TooFewPanels { n_panels });
    }
    let dt = std::f64::consts::TAU / n_panels as f64;
    let spans: Vec<(f64, f64)> = (0..n_panels)
        .map(|i| (i as f64 * dt, (i + 1) as f64 * dt))
        .collect();
    build_quadrature_on_spans(curve, &spans, gauss_order)
}

/// Quadrature over caller-provided parameter spans (used by the assembly to
/// align panels with mesh boundary edges).
pub fn build_quadrature_on_spans(
    curve: &ParametricCurve,
    spans: &[(f64, f64)],
    gauss_order: usize,
) -> Result<BoundaryQuadrature, CurveError> {
    if !(1..=32).contains(&gauss_order) {
        return Err(CurveError::InvalidGaussOrder { gauss_order });
    }
    let rule = crate::quadrature::gauss_legendre(gauss_order);
    let mut nodes = Vec::with_capacity(spans.len() * gauss_order);
    let mut panels = Vec::with_capacity(spans.len());
    for &(t0, t1) in spans {
        let first_node = nodes.len();
        let half = 0.5 * (t1 - t0);
        for &(xi, w) in &rule {
            let theta = t0 + half * (xi + 1.0);
            nodes.push(QuadratureNode {
                point: curve.eval(theta),
                normal: curve.normal(theta),
                weight: w * half * curve.speed(theta),
                theta,
            });
        }
        panels.push(Panel {
            theta0: t0,
            theta1: t1,
            first_node,
            n_nodes: gauss_order,
        });
    }
    Ok(BoundaryQuadrature {
        nodes,
        panels,
        gauss_order,
    })
}

/// Smallest sampled distance between two curves (`n` samples each).
pub fn min_separation(a: &ParametricCurve, b: &ParametricCurve, n: usize) -> f64 {
    let pa: Vec<Point2> = (0..n)
        .map(|i| a.eval(i as f64 / n as f64 * std::f64::consts::TAU))
        .collect();
    let pb: Vec<Point2> = (0..n)
        .map(|i| b.eval(i as f64 / n as f64 * std::f64::consts::TAU))
        .collect();
    let mut best = f64::INFINITY;
    for x in &pa {
        for y in &pb {
            best = best.min(norm(sub(*x, *y)));
        }
    }
    best
}

/// Validates that `inner` sits strictly inside `outer` with sampled
/// separation at least `c0` (512 samples per curve).
pub fn check_enclosure(
    inner: &ParametricCurve,
    outer: &ParametricCurve,
    c0: f64,
) -> Result<f64, CurveError> {
    for i in 0..512 {
        let t = i as f64 / 512.0 * std::f64::consts::TAU;
        if !outer.contains(inner.eval(t)) {
            return Err(CurveError::NotContained);
        }
    }
    let found = min_separation(inner, outer, 512);
    if found < c0 {
        return Err(CurveError::SeparationViolated { required: c0, found });
    }
    Ok(found)
}
