//! Fundamental solutions and their traction derivatives for the four
//! supported operators, evaluated at separated point pairs only.
//!
//! The four kernel functions needed by the integral boundary condition are
//! the fundamental matrix `u*`, the source-side traction `T_y u*`, the
//! observation-side traction `T_x u*`, and the doubly-applied
//! `T_x (T_y u*)^T`. All derivatives are closed-form: scalar kernels reduce
//! to radial ladders of `g(r)`, and both elastic kernels are written in the
//! unified shape `U = A(r) I + grad grad X(r)`, so one set of tensor
//! formulas covers Kelvin and Kupradze alike.
//!
//! The `reference` submodule holds finite-difference oracles used by tests:
//! they differentiate numerically and apply the traction in its rotational
//! (Günter) form, a different algebraic route from the analytic path, so
//! agreement checks both the derivatives and the traction identity.

use crate::specfun::{self, SpecFunError};
use crate::{dot, norm, sub, Complex64, FieldValue, KernelMatrix, Point2};

type C = Complex64;

/// Hard floor under which kernel evaluation is refused outright.
pub const MIN_SEPARATION: f64 = 1e-8;
/// Default admissible distance between the two boundary curves.
pub const DEFAULT_C0: f64 = 0.1;

/// Gradient of a 2-component field: `grad[j][i][c]` is the j-th partial of
/// component i of column c.
type FieldGrad = [[[C; 2]; 2]; 2];

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("invalid kernel parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("evaluation points too close: |x-y| = {distance:.3e} < {required:.3e}")]
    PointsTooClose { distance: f64, required: f64 },
    #[error("normal vector must have unit length, got {length}")]
    InvalidNormal { length: f64 },
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Time-harmonic elastodynamic parameters with the derived wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavierParams {
    pub rho: f64,
    pub omega: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Stored as exactly `rho * omega^2 / (lambda + 2 mu)`.
    pub kp2: f64,
    /// Stored as exactly `rho * omega^2 / mu`.
    pub ks2: f64,
    pub kp: f64,
    pub ks: f64,
}

/// One of the four operators with its physical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSet {
    Laplace,
    Helmholtz { k: f64 },
    Lame { lambda: f64, mu: f64 },
    Navier(NavierParams),
}

fn require_positive(name: &'static str, value: f64) -> Result<(), KernelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(KernelError::InvalidParameter { name, value })
    }
}

fn check_lame(lambda: f64, mu: f64) -> Result<(), KernelError> {
    require_positive("mu", mu)?;
    if !(lambda + mu > 0.0) || !lambda.is_finite() {
        return Err(KernelError::InvalidParameter {
            name: "lambda + mu",
            value: lambda + mu,
        });
    }
    Ok(())
}

impl KernelSet {
    pub fn laplace() -> Self {
        Self::Laplace
    }

    pub fn helmholtz(k: f64) -> Result<Self, KernelError> {
        require_positive("k", k)?;
        Ok(Self::Helmholtz { k })
    }

    pub fn lame(lambda: f64, mu: f64) -> Result<Self, KernelError> {
        check_lame(lambda, mu)?;
        Ok(Self::Lame { lambda, mu })
    }

    pub fn navier(rho: f64, omega: f64, lambda: f64, mu: f64) -> Result<Self, KernelError> {
        require_positive("rho", rho)?;
        require_positive("omega", omega)?;
        check_lame(lambda, mu)?;
        let kp2 = rho * omega * omega / (lambda + 2.0 * mu);
        let ks2 = rho * omega * omega / mu;
        Ok(Self::Navier(NavierParams {
            rho,
            omega,
            lambda,
            mu,
            kp2,
            ks2,
            kp: kp2.sqrt(),
            ks: ks2.sqrt(),
        }))
    }

    /// Number of field components: 1 (scalar) or 2 (elastic).
    pub fn components(&self) -> usize {
        match self {
            Self::Laplace | Self::Helmholtz { .. } => 1,
            Self::Lame { .. } | Self::Navier(_) => 2,
        }
    }

    /// True for the operators without a frequency (Laplace, Lamé).
    pub fn is_static(&self) -> bool {
        matches!(self, Self::Laplace | Self::Lame { .. })
    }

    /// Lamé constants `(lambda, mu)` for the elastic operators.
    pub fn lame_constants(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Lame { lambda, mu } => Some((lambda, mu)),
            Self::Navier(p) => Some((p.lambda, p.mu)),
            _ => None,
        }
    }

    /// Fundamental matrix `u*(x, y)`; scalar kernels occupy entry `[0][0]`.
    pub fn fundamental(&self, x: Point2, y: Point2) -> Result<KernelMatrix, KernelError> {
        let (d, r) = separation(x, y, MIN_SEPARATION)?;
        let mut out: KernelMatrix = Default::default();
        match self.components() {
            1 => out[0][0] = self.scalar_jet(r)?.g0,
            _ => {
                let jet = self.elastic_jet(d, r)?;
                out = jet.value();
            }
        }
        Ok(out)
    }

    /// Partial derivatives of the fundamental matrix in the first argument:
    /// returns `[G1, G2]` with `Gk[i][j] = d/dx_k u*[i][j]`.
    pub fn fundamental_gradient_x(
        &self,
        x: Point2,
        y: Point2,
    ) -> Result<[KernelMatrix; 2], KernelError> {
        let (d, r) = separation(x, y, MIN_SEPARATION)?;
        let mut out: [KernelMatrix; 2] = Default::default();
        match self.components() {
            1 => {
                let jet = self.scalar_jet(r)?;
                for k in 0..2 {
                    out[k][0][0] = jet.f1 * d[k];
                }
            }
            _ => {
                let g = self.elastic_jet(d, r)?.grad();
                for k in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            out[k][i][j] = g[k][i][j];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Traction at the source point applied column-wise: `T_y u*(x, .)`.
    pub fn traction_y(
        &self,
        x: Point2,
        y: Point2,
        n_y: Point2,
    ) -> Result<KernelMatrix, KernelError> {
        check_normal(n_y)?;
        let (d, r) = separation(x, y, MIN_SEPARATION)?;
        match self.components() {
            1 => {
                let jet = self.scalar_jet(r)?;
                let mut out: KernelMatrix = Default::default();
                out[0][0] = -jet.f1 * dot(d, n_y);
                Ok(out)
            }
            _ => {
                let (lambda, mu) = self.lame_constants().expect("elastic");
                let g = self.elastic_jet(d, r)?.grad();
                Ok(apply_traction_d(lambda, mu, -1.0, n_y, &g))
            }
        }
    }

    /// Traction at the observation point applied column-wise: `T_x u*(., y)`.
    pub fn traction_x(
        &self,
        x: Point2,
        y: Point2,
        n_x: Point2,
    ) -> Result<KernelMatrix, KernelError> {
        check_normal(n_x)?;
        let (d, r) = separation(x, y, MIN_SEPARATION)?;
        match self.components() {
            1 => {
                let jet = self.scalar_jet(r)?;
                let mut out: KernelMatrix = Default::default();
                out[0][0] = jet.f1 * dot(d, n_x);
                Ok(out)
            }
            _ => {
                let (lambda, mu) = self.lame_constants().expect("elastic");
                let g = self.elastic_jet(d, r)?.grad();
                Ok(apply_traction_d(lambda, mu, 1.0, n_x, &g))
            }
        }
    }

    /// The doubly-applied kernel `T_x (T_y u*(x, y))^T`, defined only at
    /// pairs separated by at least `min_sep` (the configured curve gap).
    pub fn traction_xy(
        &self,
        x: Point2,
        y: Point2,
        n_x: Point2,
        n_y: Point2,
        min_sep: f64,
    ) -> Result<KernelMatrix, KernelError> {
        check_normal(n_x)?;
        check_normal(n_y)?;
        let (d, r) = separation(x, y, min_sep.max(MIN_SEPARATION))?;
        match self.components() {
            1 => {
                let jet = self.scalar_jet(r)?;
                let mut out: KernelMatrix = Default::default();
                out[0][0] = -(jet.f2 * dot(d, n_x) * dot(d, n_y) + jet.f1 * dot(n_x, n_y));
                Ok(out)
            }
            _ => {
                let (lambda, mu) = self.lame_constants().expect("elastic");
                let jet = self.elastic_jet(d, r)?;
                let h = jet.grad2();
                // p[k][a][b] = d/dx_k of (T_y u*)[a][b]
                let mut p: FieldGrad = Default::default();
                for k in 0..2 {
                    p[k] = apply_traction_d(lambda, mu, -1.0, n_y, &h[k]);
                }
                // Columns of (T_y u*)^T are rows of T_y u*: w[i][c] = m[c][i].
                let mut w_grad: FieldGrad = Default::default();
                for k in 0..2 {
                    for i in 0..2 {
                        for c in 0..2 {
                            w_grad[k][i][c] = p[k][c][i];
                        }
                    }
                }
                Ok(apply_traction_cartesian(lambda, mu, n_x, &w_grad))
            }
        }
    }

    /// Traction of an arbitrary displacement field from its gradient
    /// (`grad[i][j]` is the j-th partial of component i); scalar operators
    /// reduce to the normal derivative of component 0.
    pub fn traction_of_field(&self, grad: &[[C; 2]; 2], n: Point2) -> FieldValue {
        match self.components() {
            1 => [grad[0][0] * n[0] + grad[0][1] * n[1], C::new(0.0, 0.0)],
            _ => {
                let (lambda, mu) = self.lame_constants().expect("elastic");
                let div = grad[0][0] + grad[1][1];
                let mut out = [C::new(0.0, 0.0); 2];
                for i in 0..2 {
                    let mut v = lambda * n[i] * div;
                    for j in 0..2 {
                        v += mu * n[j] * (grad[i][j] + grad[j][i]);
                    }
                    out[i] = v;
                }
                out
            }
        }
    }

    fn scalar_jet(&self, r: f64) -> Result<ScalarJet, KernelError> {
        match *self {
            Self::Laplace => {
                let c = 1.0 / (2.0 * std::f64::consts::PI);
                Ok(ScalarJet {
                    g0: C::new(-c * r.ln(), 0.0),
                    f1: C::new(-c / (r * r), 0.0),
                    f2: C::new(2.0 * c / (r * r * r * r), 0.0),
                })
            }
            Self::Helmholtz { k } => {
                let h = specfun::radial_derivatives_h0(k, r, 2)?;
                let quarter_i = C::new(0.0, 0.25);
                let lad = ladder(r, &h);
                Ok(ScalarJet {
                    g0: quarter_i * h[0],
                    f1: quarter_i * lad[1],
                    f2: quarter_i * lad[2],
                })
            }
            _ => unreachable!("scalar jet on elastic kernel"),
        }
    }

    fn elastic_jet(&self, d: Point2, r: f64) -> Result<ElasticJet, KernelError> {
        match *self {
            Self::Lame { lambda, mu } => {
                // U = C1 [ -ln r I + C2 (d d^T)/r^2 ]
                //   = -C1 (1 + C2) ln r I + grad grad [ C1 C2 (r^2 ln r / 2 - r^2 / 4) ]
                let c1 = (lambda + 3.0 * mu) / (4.0 * std::f64::consts::PI * mu * (lambda + 2.0 * mu));
                let c2 = (lambda + mu) / (lambda + 3.0 * mu);
                let k1 = c1 * (1.0 + c2);
                let k2 = c1 * c2;
                let r2 = r * r;
                let r4 = r2 * r2;
                Ok(ElasticJet {
                    d,
                    a0: C::new(-k1 * r.ln(), 0.0),
                    a1: C::new(-k1 / r2, 0.0),
                    a2: C::new(2.0 * k1 / r4, 0.0),
                    x1: C::new(k2 * r.ln(), 0.0),
                    x2: C::new(k2 / r2, 0.0),
                    x3: C::new(-2.0 * k2 / r4, 0.0),
                    x4: C::new(8.0 * k2 / (r4 * r2), 0.0),
                })
            }
            Self::Navier(p) => {
                let hs = specfun::radial_derivatives_h0(p.ks, r, 4)?;
                let hp = specfun::radial_derivatives_h0(p.kp, r, 4)?;
                let ca = C::new(0.0, 0.25 / p.mu);
                let cx = C::new(0.0, 0.25 / (p.rho * p.omega * p.omega));
                let a: Vec<C> = hs.iter().map(|&v| ca * v).collect();
                let x: Vec<C> = hs.iter().zip(&hp).map(|(&s, &q)| cx * (s - q)).collect();
                let la = ladder(r, &a);
                let lx = ladder(r, &x);
                Ok(ElasticJet {
                    d,
                    a0: a[0],
                    a1: la[1],
                    a2: la[2],
                    x1: lx[1],
                    x2: lx[2],
                    x3: lx[3],
                    x4: lx[4],
                })
            }
            _ => unreachable!("elastic jet on scalar kernel"),
        }
    }
}

/// Value, gradient, and Hessian (all in `x`) of `x -> H0^(1)(k |x - y0|)`.
pub fn hankel0_jet(
    k: f64,
    x: Point2,
    y0: Point2,
) -> Result<(C, [C; 2], [[C; 2]; 2]), KernelError> {
    require_positive("k", k)?;
    let (d, r) = separation(x, y0, MIN_SEPARATION)?;
    let h = specfun::radial_derivatives_h0(k, r, 2)?;
    let lad = ladder(r, &h);
    let grad = [lad[1] * d[0], lad[1] * d[1]];
    let mut hess = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            hess[i][j] = lad[2] * d[i] * d[j] + if i == j { lad[1] } else { C::new(0.0, 0.0) };
        }
    }
    Ok((h[0], grad, hess))
}

/// Scalar radial data: value, `g'/r`, and `(g'/r)'/r`.
struct ScalarJet {
    g0: C,
    f1: C,
    f2: C,
}

/// Elastic kernel `U = a0(r) I + grad grad X(r)` with the radial ladders of
/// both parts: `a1 = a0'/r`, `a2 = (a0'/r)'/r`, and `x1..x4` the ladder of X.
struct ElasticJet {
    d: Point2,
    a0: C,
    a1: C,
    a2: C,
    x1: C,
    x2: C,
    x3: C,
    x4: C,
}

impl ElasticJet {
    fn value(&self) -> KernelMatrix {
        let d = self.d;
        let mut u: KernelMatrix = Default::default();
        for i in 0..2 {
            for j in 0..2 {
                u[i][j] = self.x2 * d[i] * d[j];
                if i == j {
                    u[i][j] += self.a0 + self.x1;
                }
            }
        }
        u
    }

    /// `g[k][i][j] = d/dd_k U[i][j]`.
    fn grad(&self) -> FieldGrad {
        let d = self.d;
        let mut g: FieldGrad = Default::default();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut v = self.x3 * d[i] * d[j] * d[k];
                    v += self.x2 * (kr(i, j) * d[k] + kr(i, k) * d[j] + kr(j, k) * d[i]);
                    if i == j {
                        v += self.a1 * d[k];
                    }
                    g[k][i][j] = v;
                }
            }
        }
        g
    }

    /// `h[k][l][i][j] = d^2/(dd_k dd_l) U[i][j]`.
    fn grad2(&self) -> [FieldGrad; 2] {
        let d = self.d;
        let mut h: [FieldGrad; 2] = Default::default();
        for k in 0..2 {
            for l in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        let mut v = self.x4 * d[i] * d[j] * d[k] * d[l];
                        v += self.x3
                            * (kr(i, j) * d[k] * d[l]
                                + kr(i, k) * d[j] * d[l]
                                + kr(i, l) * d[j] * d[k]
                                + kr(j, k) * d[i] * d[l]
                                + kr(j, l) * d[i] * d[k]
                                + kr(k, l) * d[i] * d[j]);
                        v += self.x2
                            * (kr(i, j) * kr(k, l) + kr(i, k) * kr(j, l) + kr(i, l) * kr(j, k));
                        if i == j {
                            v += self.a2 * d[k] * d[l];
                            if k == l {
                                v += self.a1;
                            }
                        }
                        h[k][l][i][j] = v;
                    }
                }
            }
        }
        h
    }
}

fn kr(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Radial derivative ladder: given `g[m] = d^m g / dr^m`, returns
/// `[g, f1, f2, f3, f4]` (entries beyond the available orders stay zero)
/// where `f1 = g'/r` and `f_{m+1} = f_m'/r`.
fn ladder(r: f64, g: &[C]) -> [C; 5] {
    let zero = C::new(0.0, 0.0);
    let mut f = [zero; 5];
    f[0] = g[0];
    let r2 = r * r;
    let r3 = r2 * r;
    let r4 = r2 * r2;
    if g.len() > 1 {
        f[1] = g[1] / r;
    }
    if g.len() > 2 {
        f[2] = g[2] / r2 - g[1] / r3;
    }
    if g.len() > 3 {
        f[3] = g[3] / r3 - 3.0 * g[2] / r4 + 3.0 * g[1] / (r4 * r);
    }
    if g.len() > 4 {
        f[4] = g[4] / r4 - 6.0 * g[3] / (r4 * r) + 15.0 * g[2] / (r4 * r2)
            - 15.0 * g[1] / (r4 * r3);
    }
    f
}

/// Standard traction applied column-wise to a matrix field whose gradient is
/// given in the difference variable `d = x - y`; `sign` converts to the
/// actual differentiation variable (+1 for x, -1 for y).
fn apply_traction_d(lambda: f64, mu: f64, sign: f64, n: Point2, g: &FieldGrad) -> KernelMatrix {
    let mut out: KernelMatrix = Default::default();
    for c in 0..2 {
        let div = g[0][0][c] + g[1][1][c];
        for i in 0..2 {
            let mut v = lambda * n[i] * div;
            for j in 0..2 {
                v += mu * n[j] * (g[j][i][c] + g[i][j][c]);
            }
            out[i][c] = sign * v;
        }
    }
    out
}

/// Same traction application for gradients already taken in a cartesian
/// variable (no sign conversion).
fn apply_traction_cartesian(lambda: f64, mu: f64, n: Point2, g: &FieldGrad) -> KernelMatrix {
    apply_traction_d(lambda, mu, 1.0, n, g)
}

fn separation(x: Point2, y: Point2, floor: f64) -> Result<(Point2, f64), KernelError> {
    let d = sub(x, y);
    let r = norm(d);
    if r >= floor {
        Ok((d, r))
    } else {
        Err(KernelError::PointsTooClose {
            distance: r,
            required: floor,
        })
    }
}

fn check_normal(n: Point2) -> Result<(), KernelError> {
    let length = norm(n);
    if (length - 1.0).abs() <= 1e-10 {
        Ok(())
    } else {
        Err(KernelError::InvalidNormal { length })
    }
}

/// Finite-difference oracles. Derivatives are central differences of
/// `fundamental`, and the elastic traction is applied in its rotational form
/// `2 mu du/dn + lambda n div u + mu n_perp (d2 u1 - d1 u2)`, so these share
/// no closed-form derivative code with the analytic kernels.
pub mod reference {
    use super::*;

    /// Central-difference gradient of the fundamental matrix in argument
    /// `which` (0 = x, 1 = y): `out[k][i][j] = d/darg_k u*[i][j]`.
    pub fn fd_fundamental_gradient(
        kset: &KernelSet,
        x: Point2,
        y: Point2,
        which: usize,
        h: f64,
    ) -> FieldGrad {
        let mut out: FieldGrad = Default::default();
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            let mut yp = y;
            let mut ym = y;
            if which == 0 {
                xp[k] += h;
                xm[k] -= h;
            } else {
                yp[k] += h;
                ym[k] -= h;
            }
            let up = kset.fundamental(xp, yp).expect("separated");
            let um = kset.fundamental(xm, ym).expect("separated");
            for i in 0..2 {
                for j in 0..2 {
                    out[k][i][j] = (up[i][j] - um[i][j]) / (2.0 * h);
                }
            }
        }
        out
    }

    /// Rotational-form traction applied to a field gradient
    /// (`g[k][i][c] = d_k u_i` of column c); scalar case is the normal
    /// derivative of entry `[0][0]`.
    pub fn apply_traction_rotational(
        sigma: usize,
        lambda: f64,
        mu: f64,
        n: Point2,
        g: &FieldGrad,
    ) -> KernelMatrix {
        let mut out: KernelMatrix = Default::default();
        if sigma == 1 {
            out[0][0] = g[0][0][0] * n[0] + g[1][0][0] * n[1];
            return out;
        }
        let n_perp = [-n[1], n[0]];
        for c in 0..2 {
            let div = g[0][0][c] + g[1][1][c];
            let curl = g[1][0][c] - g[0][1][c];
            for i in 0..2 {
                out[i][c] = 2.0 * mu * (n[0] * g[0][i][c] + n[1] * g[1][i][c])
                    + lambda * n[i] * div
                    + mu * n_perp[i] * curl;
            }
        }
        out
    }

    fn lame_or_zero(kset: &KernelSet) -> (f64, f64) {
        kset.lame_constants().unwrap_or((0.0, 0.0))
    }

    /// Finite-difference `T_y u*`.
    pub fn fd_traction_y(kset: &KernelSet, x: Point2, y: Point2, n_y: Point2, h: f64) -> KernelMatrix {
        let g = fd_fundamental_gradient(kset, x, y, 1, h);
        let (lambda, mu) = lame_or_zero(kset);
        apply_traction_rotational(kset.components(), lambda, mu, n_y, &g)
    }

    /// Finite-difference `T_x u*`.
    pub fn fd_traction_x(kset: &KernelSet, x: Point2, y: Point2, n_x: Point2, h: f64) -> KernelMatrix {
        let g = fd_fundamental_gradient(kset, x, y, 0, h);
        let (lambda, mu) = lame_or_zero(kset);
        apply_traction_rotational(kset.components(), lambda, mu, n_x, &g)
    }

    /// `T_x (T_y u*)^T` with the inner traction analytic and the outer one
    /// by central differences in x.
    pub fn fd_traction_xy(
        kset: &KernelSet,
        x: Point2,
        y: Point2,
        n_x: Point2,
        n_y: Point2,
        h: f64,
    ) -> KernelMatrix {
        let w = |p: Point2| -> KernelMatrix {
            let m = kset.traction_y(p, y, n_y).expect("separated");
            let mut t: KernelMatrix = Default::default();
            for i in 0..2 {
                for c in 0..2 {
                    t[i][c] = m[c][i];
                }
            }
            t
        };
        let mut g: FieldGrad = Default::default();
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (wp, wm) = (w(xp), w(xm));
            for i in 0..2 {
                for c in 0..2 {
                    g[k][i][c] = (wp[i][c] - wm[i][c]) / (2.0 * h);
                }
            }
        }
        let (lambda, mu) = lame_or_zero(kset);
        apply_traction_rotational(kset.components(), lambda, mu, n_x, &g)
    }

    /// Fully nested finite-difference version of `T_x (T_y u*)^T`: both
    /// tractions come from difference quotients of `fundamental` alone.
    pub fn fd_traction_xy_nested(
        kset: &KernelSet,
        x: Point2,
        y: Point2,
        n_x: Point2,
        n_y: Point2,
        h_outer: f64,
        h_inner: f64,
    ) -> KernelMatrix {
        let (lambda, mu) = lame_or_zero(kset);
        let w = |p: Point2| -> KernelMatrix {
            let m = fd_traction_y(kset, p, y, n_y, h_inner);
            let mut t: KernelMatrix = Default::default();
            for i in 0..2 {
                for c in 0..2 {
                    t[i][c] = m[c][i];
                }
            }
            t
        };
        let mut g: FieldGrad = Default::default();
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h_outer;
            xm[k] -= h_outer;
            let (wp, wm) = (w(xp), w(xm));
            for i in 0..2 {
                for c in 0..2 {
                    g[k][i][c] = (wp[i][c] - wm[i][c]) / (2.0 * h_outer);
                }
            }
        }
        apply_traction_rotational(kset.components(), lambda, mu, n_x, &g)
    }

    /// Relative residual of the governing operator applied (by 5-point and
    /// cross stencils in x) to `x -> fundamental(x, y)`, scaled by the local
    /// kernel magnitude and the operator's natural stiffness scale.
    pub fn pde_residual(kset: &KernelSet, x: Point2, y: Point2, h: f64) -> f64 {
        let u = |p: Point2| kset.fundamental(p, y).expect("separated");
        let c = u(x);
        let xp = u([x[0] + h, x[1]]);
        let xm = u([x[0] - h, x[1]]);
        let yp = u([x[0], x[1] + h]);
        let ym = u([x[0], x[1] - h]);
        let pp = u([x[0] + h, x[1] + h]);
        let pm = u([x[0] + h, x[1] - h]);
        let mp = u([x[0] - h, x[1] + h]);
        let mm = u([x[0] - h, x[1] - h]);
        let h2 = h * h;
        let mut d11: KernelMatrix = Default::default();
        let mut d22: KernelMatrix = Default::default();
        let mut d12: KernelMatrix = Default::default();
        for i in 0..2 {
            for j in 0..2 {
                d11[i][j] = (xp[i][j] - 2.0 * c[i][j] + xm[i][j]) / h2;
                d22[i][j] = (yp[i][j] - 2.0 * c[i][j] + ym[i][j]) / h2;
                d12[i][j] = (pp[i][j] - pm[i][j] - mp[i][j] + mm[i][j]) / (4.0 * h2);
            }
        }
        let magnitude = c
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0f64, f64::max)
            .max(0.05);
        match *kset {
            KernelSet::Laplace => (d11[0][0] + d22[0][0]).norm() / magnitude,
            KernelSet::Helmholtz { k } => {
                let k2 = k * k;
                (d11[0][0] + d22[0][0] + k2 * c[0][0]).norm() / (k2.max(1.0) * magnitude)
            }
            KernelSet::Lame { lambda, mu } | KernelSet::Navier(NavierParams { lambda, mu, .. }) => {
                let inertial = match *kset {
                    KernelSet::Navier(p) => p.rho * p.omega * p.omega,
                    _ => 0.0,
                };
                let wavenumber2 = match *kset {
                    KernelSet::Navier(p) => p.ks2.max(1.0),
                    _ => 1.0,
                };
                let mut worst = 0.0f64;
                for col in 0..2 {
                    // grad(div u) for column col.
                    let gd = [
                        d11[0][col] + d12[1][col],
                        d12[0][col] + d22[1][col],
                    ];
                    for i in 0..2 {
                        let lap = d11[i][col] + d22[i][col];
                        let res = mu * lap + (lambda + mu) * gd[i] + inertial * c[i][col];
                        worst = worst.max(res.norm());
                    }
                }
                worst / ((lambda + 2.0 * mu) * wavenumber2 * magnitude)
            }
        }
    }
}
