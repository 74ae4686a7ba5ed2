//! Global identities tying all four kernels together.
//!
//! With a point source inside the obstacle, the induced exterior field `u`
//! satisfies the representation `u = D(u) - S(Tu)` outside the obstacle,
//! where S and D are the single and double layer potentials over the
//! obstacle boundary with its outward normal. Taking the Robin trace
//! `T - i alpha` on a separated outer circle yields the identity the
//! integral boundary condition is assembled from. Both are checked here by
//! dense quadrature for every operator; they exercise the fundamental
//! matrix, both one-sided tractions, the doubly-applied kernel, the layer
//! contraction orientation, and the normal conventions at once.

use annulus_core::curves::{build_quadrature, BoundaryQuadrature, ParametricCurve};
use annulus_core::kernels::KernelSet;
use annulus_core::{Complex64, Point2};

type C = Complex64;
type Vec2 = [C; 2];

fn zero() -> Vec2 {
    [C::new(0.0, 0.0); 2]
}

/// Column `col` of the fundamental matrix: the source field evaluated at x.
fn field(kset: &KernelSet, x: Point2, source: Point2, col: usize) -> Vec2 {
    let u = kset.fundamental(x, source).unwrap();
    [u[0][col], u[1][col]]
}

/// Column `col` of the traction (in x, normal n) of the source field.
fn field_traction(kset: &KernelSet, x: Point2, n: Point2, source: Point2, col: usize) -> Vec2 {
    let t = kset.traction_x(x, source, n).unwrap();
    [t[0][col], t[1][col]]
}

fn single_layer(
    kset: &KernelSet,
    quad: &BoundaryQuadrature,
    x: Point2,
    density: &dyn Fn(Point2, Point2) -> Vec2,
) -> Vec2 {
    let mut acc = zero();
    for node in &quad.nodes {
        let u = kset.fundamental(x, node.point).unwrap();
        let g = density(node.point, node.normal);
        for i in 0..2 {
            for b in 0..2 {
                acc[i] += node.weight * u[i][b] * g[b];
            }
        }
    }
    acc
}

fn double_layer(
    kset: &KernelSet,
    quad: &BoundaryQuadrature,
    x: Point2,
    density: &dyn Fn(Point2, Point2) -> Vec2,
) -> Vec2 {
    let mut acc = zero();
    for node in &quad.nodes {
        let m = kset.traction_y(x, node.point, node.normal).unwrap();
        let u = density(node.point, node.normal);
        for i in 0..2 {
            for b in 0..2 {
                // Contraction with the transposed traction matrix.
                acc[i] += node.weight * m[b][i] * u[b];
            }
        }
    }
    acc
}

fn single_layer_traction(
    kset: &KernelSet,
    quad: &BoundaryQuadrature,
    x: Point2,
    n_x: Point2,
    density: &dyn Fn(Point2, Point2) -> Vec2,
) -> Vec2 {
    let mut acc = zero();
    for node in &quad.nodes {
        let t = kset.traction_x(x, node.point, n_x).unwrap();
        let g = density(node.point, node.normal);
        for i in 0..2 {
            for b in 0..2 {
                acc[i] += node.weight * t[i][b] * g[b];
            }
        }
    }
    acc
}

fn double_layer_traction(
    kset: &KernelSet,
    quad: &BoundaryQuadrature,
    x: Point2,
    n_x: Point2,
    density: &dyn Fn(Point2, Point2) -> Vec2,
) -> Vec2 {
    let mut acc = zero();
    for node in &quad.nodes {
        let n = kset
            .traction_xy(x, node.point, n_x, node.normal, 0.1)
            .unwrap();
        let u = density(node.point, node.normal);
        for i in 0..2 {
            for b in 0..2 {
                acc[i] += node.weight * n[i][b] * u[b];
            }
        }
    }
    acc
}

fn norm2(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn all_sets() -> Vec<KernelSet> {
    vec![
        KernelSet::laplace(),
        KernelSet::helmholtz(1.0).unwrap(),
        KernelSet::helmholtz(3.0).unwrap(),
        KernelSet::lame(3.0, 2.0).unwrap(),
        KernelSet::navier(0.5, 3.0, 0.5, 2.0).unwrap(),
    ]
}

#[test]
fn representation_reproduces_exterior_fields() {
    let obstacle = ParametricCurve::circle(1.0, [0.0, 0.0]).unwrap();
    let quad = build_quadrature(&obstacle, 256, 8).unwrap();
    let source = [0.25, 0.1];
    let test_points: [Point2; 3] = [
        [1.5 * 0.3f64.cos(), 1.5 * 0.3f64.sin()],
        [2.2 * 2.0f64.cos(), 2.2 * 2.0f64.sin()],
        [0.0, -1.8],
    ];
    for kset in all_sets() {
        for col in 0..kset.components() {
            let trace = |y: Point2, _n: Point2| field(&kset, y, source, col);
            let neumann = |y: Point2, n: Point2| field_traction(&kset, y, n, source, col);
            for &x in &test_points {
                let exact = field(&kset, x, source, col);
                let d = double_layer(&kset, &quad, x, &trace);
                let s = single_layer(&kset, &quad, x, &neumann);
                let got = [d[0] - s[0], d[1] - s[1]];
                let err = norm2(&[got[0] - exact[0], got[1] - exact[1]]);
                let scale = norm2(&exact).max(1e-3);
                assert!(
                    err / scale < 1e-10,
                    "{kset:?} col {col} at {x:?}: relative error {}",
                    err / scale
                );
            }
        }
    }
}

#[test]
fn robin_trace_identity_holds_on_outer_circle() {
    let obstacle = ParametricCurve::circle(1.0, [0.0, 0.0]).unwrap();
    let quad = build_quadrature(&obstacle, 256, 8).unwrap();
    let source = [0.25, 0.1];
    let outer_radius = 3.0;
    for kset in all_sets() {
        let alpha = if kset.is_static() { 0.0 } else { 2.0 };
        let ia = C::new(0.0, alpha);
        for col in 0..kset.components() {
            let trace = |y: Point2, _n: Point2| field(&kset, y, source, col);
            let neumann = |y: Point2, n: Point2| field_traction(&kset, y, n, source, col);
            for angle in [0.5f64, 2.7, 4.4] {
                let n_x = [angle.cos(), angle.sin()];
                let x = [outer_radius * n_x[0], outer_radius * n_x[1]];
                // Robin trace of u itself.
                let u_val = field(&kset, x, source, col);
                let u_trac = field_traction(&kset, x, n_x, source, col);
                // Robin trace of D(u) - S(Tu).
                let d_val = double_layer(&kset, &quad, x, &trace);
                let d_trac = double_layer_traction(&kset, &quad, x, n_x, &trace);
                let s_val = single_layer(&kset, &quad, x, &neumann);
                let s_trac = single_layer_traction(&kset, &quad, x, n_x, &neumann);
                let mut residual = zero();
                let mut scale = 0.0f64;
                for i in 0..2 {
                    let lhs = u_trac[i] - ia * u_val[i];
                    let rhs = (d_trac[i] - ia * d_val[i]) - (s_trac[i] - ia * s_val[i]);
                    residual[i] = lhs - rhs;
                    scale = scale.max(lhs.norm());
                }
                assert!(
                    norm2(&residual) / scale.max(1e-3) < 1e-9,
                    "{kset:?} col {col} angle {angle}: residual {}",
                    norm2(&residual) / scale.max(1e-3)
                );
            }
        }
    }
}
