//! Numerical integration rules: Gauss–Legendre on `[-1, 1]` and symmetric
//! rules on the reference triangle.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// exact for polynomials of degree `2n - 1`.
///
/// Nodes are computed by Newton iteration on the Legendre recurrence, so any
/// order up to a few hundred is available without coefficient tables.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "rule order must be positive");
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-based initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// A quadrature point on the reference triangle `{(r, s) : r, s >= 0, r + s <= 1}`.
/// Weights sum to one; multiply by the physical triangle area.
#[derive(Debug, Clone, Copy)]
pub struct TrianglePoint {
    pub r: f64,
    pub s: f64,
    pub w: f64,
}

/// Symmetric triangle rule exact for polynomials of (at least) the requested
/// total degree. Available degrees: 1, 2, 4, 5; anything between is rounded up.
pub fn triangle_rule(degree: usize) -> Vec<TrianglePoint> {
    let orbit3 = |a: f64, w: f64| {
        let b = 1.0 - 2.0 * a;
        vec![
            TrianglePoint { r: a, s: a, w },
            TrianglePoint { r: b, s: a, w },
            TrianglePoint { r: a, s: b, w },
        ]
    };
    match degree {
        0 | 1 => vec![TrianglePoint {
            r: 1.0 / 3.0,
            s: 1.0 / 3.0,
            w: 1.0,
        }],
        2 => orbit3(1.0 / 6.0, 1.0 / 3.0),
        3 | 4 => {
            let mut pts = orbit3(0.445_948_490_915_965, 0.223_381_589_678_011);
            pts.extend(orbit3(0.091_576_213_509_771, 0.109_951_743_655_322));
            pts
        }
        _ => {
            let mut pts = vec![TrianglePoint {
                r: 1.0 / 3.0,
                s: 1.0 / 3.0,
                w: 0.225,
            }];
            pts.extend(orbit3(0.470_142_064_105_115, 0.132_394_152_788_506));
            pts.extend(orbit3(0.101_286_507_323_456, 0.125_939_180_544_827));
            pts
        }
    }
}
