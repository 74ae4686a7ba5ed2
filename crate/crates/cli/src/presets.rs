//! The closed-form exact solutions behind the named presets: each bundles a
//! value, a gradient, and (through the operator's traction) the Neumann data
//! it induces on the obstacle boundary.

use annulus_core::kernels::KernelSet;
use annulus_core::specfun::{hankel1, radial_derivatives_h0};
use annulus_core::{Complex64, FieldValue, Point2};

use crate::config::{Preset, Problem, Resolved};

/// A closed-form field with its gradient; `gradient(p)[k][c]` is the k-th
/// partial of component c.
pub struct ExactBundle {
    pub value: Box<dyn Fn(Point2) -> FieldValue + Sync>,
    pub gradient: Box<dyn Fn(Point2) -> [FieldValue; 2] + Sync>,
}

const NAN_FIELD: FieldValue = [Complex64::new(f64::NAN, f64::NAN); 2];

impl ExactBundle {
    /// Error-measurement view borrowing the closures.
    pub fn exact(&self) -> annulus_core::solve::ExactSolution<'_> {
        annulus_core::solve::ExactSolution {
            value: &*self.value,
            gradient: &*self.gradient,
        }
    }

    /// Neumann data `g = T u` on a boundary with outward normal `n`.
    pub fn neumann(
        &self,
        kernel: KernelSet,
    ) -> impl Fn(Point2, Point2) -> FieldValue + Sync + '_ {
        move |p: Point2, n: Point2| {
            let gr = (self.gradient)(p);
            let grad = [[gr[0][0], gr[1][0]], [gr[0][1], gr[1][1]]];
            kernel.traction_of_field(&grad, n)
        }
    }

    /// The Robin trace `T u - i alpha u` used for incident-field loads.
    pub fn robin_trace(
        &self,
        kernel: KernelSet,
        alpha: f64,
    ) -> impl Fn(Point2, Point2) -> FieldValue + Sync + '_ {
        let i_alpha = Complex64::new(0.0, alpha);
        move |p: Point2, n: Point2| {
            let gr = (self.gradient)(p);
            let grad = [[gr[0][0], gr[1][0]], [gr[0][1], gr[1][1]]];
            let t = kernel.traction_of_field(&grad, n);
            let v = (self.value)(p);
            [t[0] - i_alpha * v[0], t[1] - i_alpha * v[1]]
        }
    }
}

/// Exterior Laplace dipole `u = -x1 / |x|^2`.
pub fn dipole() -> ExactBundle {
    ExactBundle {
        value: Box::new(|p: Point2| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            [Complex64::new(-p[0] / r2, 0.0), Complex64::ZERO]
        }),
        gradient: Box::new(|p: Point2| {
            let r2 = p[0] * p[0] + p[1] * p[1];
            [
                [
                    Complex64::new((p[0] * p[0] - p[1] * p[1]) / (r2 * r2), 0.0),
                    Complex64::ZERO,
                ],
                [
                    Complex64::new(2.0 * p[0] * p[1] / (r2 * r2), 0.0),
                    Complex64::ZERO,
                ],
            ]
        }),
    }
}

/// Outgoing acoustic point source `u = H0(k |x|)`.
pub fn monopole(k: f64) -> ExactBundle {
    ExactBundle {
        value: Box::new(move |p: Point2| {
            let r = p[0].hypot(p[1]);
            if r == 0.0 {
                return NAN_FIELD;
            }
            [hankel1(0, k * r), Complex64::ZERO]
        }),
        gradient: Box::new(move |p: Point2| {
            let r = p[0].hypot(p[1]);
            if r == 0.0 {
                return [NAN_FIELD; 2];
            }
            let dr = -k * hankel1(1, k * r);
            [
                [dr * (p[0] / r), Complex64::ZERO],
                [dr * (p[1] / r), Complex64::ZERO],
            ]
        }),
    }
}

/// First column of the elastostatic fundamental matrix with the source at
/// (0.5, 0) inside the obstacle.
pub fn kelvin_column(kernel: KernelSet) -> ExactBundle {
    let source = [0.5, 0.0];
    let kv = kernel.clone();
    let kg = kernel;
    ExactBundle {
        value: Box::new(move |p: Point2| match kv.fundamental(p, source) {
            Ok(u) => [u[0][0], u[1][0]],
            Err(_) => NAN_FIELD,
        }),
        gradient: Box::new(move |p: Point2| match kg.fundamental_gradient_x(p, source) {
            Ok(g) => [[g[0][0][0], g[0][1][0]], [g[1][0][0], g[1][1][0]]],
            Err(_) => [NAN_FIELD; 2],
        }),
    }
}

/// Curl-free outgoing elastic wave `u = -grad H0(kp |x|)`.
pub fn compressional(kp: f64) -> ExactBundle {
    ExactBundle {
        value: Box::new(move |p: Point2| {
            let r = p[0].hypot(p[1]);
            match radial_derivatives_h0(kp, r, 1) {
                Ok(d) => [-d[1] * (p[0] / r), -d[1] * (p[1] / r)],
                Err(_) => NAN_FIELD,
            }
        }),
        gradient: Box::new(move |p: Point2| {
            let r = p[0].hypot(p[1]);
            let d = match radial_derivatives_h0(kp, r, 2) {
                Ok(d) => d,
                Err(_) => return [NAN_FIELD; 2],
            };
            let mut out = [[Complex64::ZERO; 2]; 2];
            for k in 0..2 {
                for c in 0..2 {
                    let delta = if k == c { 1.0 } else { 0.0 };
                    let xkxc = p[k] * p[c];
                    out[k][c] =
                        -(d[2] * xkxc / (r * r) + d[1] * (delta / r - xkxc / (r * r * r)));
                }
            }
            out
        }),
    }
}

/// Plane wave `u = exp(i k d . x)` with unit direction `d`.
pub fn plane_wave(k: f64, d: Point2) -> ExactBundle {
    ExactBundle {
        value: Box::new(move |p: Point2| {
            let phase = k * (d[0] * p[0] + d[1] * p[1]);
            [Complex64::new(0.0, phase).exp(), Complex64::ZERO]
        }),
        gradient: Box::new(move |p: Point2| {
            let phase = k * (d[0] * p[0] + d[1] * p[1]);
            let ik = Complex64::new(0.0, k);
            let e = Complex64::new(0.0, phase).exp();
            [[ik * d[0] * e, Complex64::ZERO], [ik * d[1] * e, Complex64::ZERO]]
        }),
    }
}

fn wavenumber(kernel: &KernelSet) -> f64 {
    match kernel {
        KernelSet::Helmholtz { k } => *k,
        _ => unreachable!("preset validation guarantees a Helmholtz kernel"),
    }
}

/// The exact solution to measure errors against, when the preset defines one.
/// Plane-wave incidence has a closed form only for the inhomogeneous problem
/// (the total field equals the incident wave when n is identically 1).
pub fn error_bundle(res: &Resolved) -> Option<ExactBundle> {
    match res.preset {
        Preset::Example1 => Some(dipole()),
        Preset::Example2 => Some(monopole(wavenumber(&res.spec.kernel))),
        Preset::Example3 => Some(kelvin_column(res.spec.kernel.clone())),
        Preset::Example4 => match &res.spec.kernel {
            KernelSet::Navier(p) => Some(compressional(p.kp)),
            _ => unreachable!("preset validation guarantees a Navier kernel"),
        },
        Preset::PlaneWaveScattering if res.problem == Problem::Inhomogeneous => {
            Some(plane_wave(wavenumber(&res.spec.kernel), res.direction))
        }
        _ => None,
    }
}

/// The incident field for plane-wave presets (any compatible problem).
pub fn incident_bundle(res: &Resolved) -> Option<ExactBundle> {
    match res.preset {
        Preset::PlaneWaveScattering => {
            Some(plane_wave(wavenumber(&res.spec.kernel), res.direction))
        }
        _ => None,
    }
}
