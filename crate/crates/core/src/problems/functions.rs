//! Integrands `j(x, y)` and data functions with their derivatives.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt::Debug;
use std::sync::Arc;

use crate::mat2::{outer, Mat2, Vec2};

/// Smooth function of position with gradient and Hessian.
pub trait SourceData: Debug + Send + Sync {
    fn value(&self, x: Vec2) -> f64;
    fn gradient(&self, x: Vec2) -> Vec2;
    fn hessian(&self, x: Vec2) -> Mat2;
}

/// `j(x, y)` with all first and second partial derivatives.
pub trait Integrand: Debug + Send + Sync {
    fn j(&self, x: Vec2, y: f64) -> f64;
    fn j_x(&self, x: Vec2, y: f64) -> Vec2;
    fn j_y(&self, x: Vec2, y: f64) -> f64;
    fn j_yy(&self, x: Vec2, y: f64) -> f64;
    fn j_yx(&self, x: Vec2, y: f64) -> Vec2;
    fn j_xx(&self, x: Vec2, y: f64) -> Mat2;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constant(pub f64);

impl SourceData for Constant {
    fn value(&self, _: Vec2) -> f64 {
        self.0
    }
    fn gradient(&self, _: Vec2) -> Vec2 {
        Vec2::zeros()
    }
    fn hessian(&self, _: Vec2) -> Mat2 {
        Mat2::zeros()
    }
}

/// `2.5 (x₁ + 0.5 − x₂²)² + x₁² + x₂² − 1`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KidneySource;

impl SourceData for KidneySource {
    fn value(&self, x: Vec2) -> f64 {
        let u = x.x + 0.5 - x.y * x.y;
        2.5 * u * u + x.norm_squared() - 1.0
    }
    fn gradient(&self, x: Vec2) -> Vec2 {
        let u = x.x + 0.5 - x.y * x.y;
        let du = Vec2::new(1.0, -2.0 * x.y);
        5.0 * u * du + 2.0 * x
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        let u = x.x + 0.5 - x.y * x.y;
        let du = Vec2::new(1.0, -2.0 * x.y);
        5.0 * outer(&du, &du) + Mat2::new(0.0, 0.0, 0.0, -10.0 * u) + 2.0 * Mat2::identity()
    }
}

/// `c − |x|²`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Paraboloid {
    pub c: f64,
}

impl SourceData for Paraboloid {
    fn value(&self, x: Vec2) -> f64 {
        self.c - x.norm_squared()
    }
    fn gradient(&self, x: Vec2) -> Vec2 {
        -2.0 * x
    }
    fn hessian(&self, _: Vec2) -> Mat2 {
        -2.0 * Mat2::identity()
    }
}

/// Derivatives 0..=6 of `a(s) = (1 − s²)³`.
fn bump_1d(s: f64) -> [f64; 7] {
    let s2 = s * s;
    [
        (1.0 - s2).powi(3),
        -6.0 * s + 12.0 * s * s2 - 6.0 * s * s2 * s2,
        -6.0 + 36.0 * s2 - 30.0 * s2 * s2,
        72.0 * s - 120.0 * s * s2,
        72.0 - 360.0 * s2,
        -720.0 * s,
        -720.0,
    ]
}

/// `offset + (1 − x₁²)³ (1 − x₂²)³`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub offset: f64,
}

impl SourceData for Bump {
    fn value(&self, x: Vec2) -> f64 {
        self.offset + bump_1d(x.x)[0] * bump_1d(x.y)[0]
    }
    fn gradient(&self, x: Vec2) -> Vec2 {
        let (a, b) = (bump_1d(x.x), bump_1d(x.y));
        Vec2::new(a[1] * b[0], a[0] * b[1])
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        let (a, b) = (bump_1d(x.x), bump_1d(x.y));
        let xy = a[1] * b[1];
        Mat2::new(a[2] * b[0], xy, xy, a[0] * b[2])
    }
}

/// `Δ²((1 − x₁²)³ (1 − x₂²)³)`, expanded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiharmonicOfBump;

impl BiharmonicOfBump {
    /// `∂^i_1 ∂^k_2` of `Δ²w` for `i + k ≤ 2`, through `a⁽ⁱ⁺⁴⁾b⁽ᵏ⁾ + 2a⁽ⁱ⁺²⁾b⁽ᵏ⁺²⁾ + a⁽ⁱ⁾b⁽ᵏ⁺⁴⁾`.
    fn partial(a: &[f64; 7], b: &[f64; 7], i: usize, k: usize) -> f64 {
        let get = |d: &[f64; 7], n: usize| if n < 7 { d[n] } else { 0.0 };
        get(a, i + 4) * get(b, k) + 2.0 * get(a, i + 2) * get(b, k + 2) + get(a, i) * get(b, k + 4)
    }
}

impl SourceData for BiharmonicOfBump {
    fn value(&self, x: Vec2) -> f64 {
        Self::partial(&bump_1d(x.x), &bump_1d(x.y), 0, 0)
    }
    fn gradient(&self, x: Vec2) -> Vec2 {
        let (a, b) = (bump_1d(x.x), bump_1d(x.y));
        Vec2::new(Self::partial(&a, &b, 1, 0), Self::partial(&a, &b, 0, 1))
    }
    fn hessian(&self, x: Vec2) -> Mat2 {
        let (a, b) = (bump_1d(x.x), bump_1d(x.y));
        let xy = Self::partial(&a, &b, 1, 1);
        Mat2::new(Self::partial(&a, &b, 2, 0), xy, xy, Self::partial(&a, &b, 0, 2))
    }
}

/// `j = −Z(x)` with the piecewise plateau `Z`: a cosine cap on `[−1,1]²`
/// continued by quadratics outside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosinePlateau;

impl CosinePlateau {
    /// `(Z, ∇Z, D²Z)`. Points on a seam belong to the cosine region first,
    /// then to the strips.
    pub fn z(x: Vec2) -> (f64, Vec2, Mat2) {
        let (ax, ay) = (x.x.abs(), x.y.abs());
        if ax <= 1.0 && ay <= 1.0 {
            let (s1, c1) = (FRAC_PI_2 * x.x).sin_cos();
            let (s2, c2) = (FRAC_PI_2 * x.y).sin_cos();
            let k = FRAC_PI_2;
            (
                c1 * c2,
                Vec2::new(-k * s1 * c2, -k * c1 * s2),
                Mat2::new(-k * k * c1 * c2, k * k * s1 * s2, k * k * s1 * s2, -k * k * c1 * c2),
            )
        } else if ay <= 1.0 {
            (
                FRAC_PI_4 * (1.0 - x.x * x.x),
                Vec2::new(-FRAC_PI_2 * x.x, 0.0),
                Mat2::new(-FRAC_PI_2, 0.0, 0.0, 0.0),
            )
        } else if ax <= 1.0 {
            (
                FRAC_PI_4 * (1.0 - x.y * x.y),
                Vec2::new(0.0, -FRAC_PI_2 * x.y),
                Mat2::new(0.0, 0.0, 0.0, -FRAC_PI_2),
            )
        } else {
            (
                FRAC_PI_4 * (2.0 - x.norm_squared()),
                -FRAC_PI_2 * x,
                -FRAC_PI_2 * Mat2::identity(),
            )
        }
    }
}

impl Integrand for CosinePlateau {
    fn j(&self, x: Vec2, _: f64) -> f64 {
        -Self::z(x).0
    }
    fn j_x(&self, x: Vec2, _: f64) -> Vec2 {
        -Self::z(x).1
    }
    fn j_y(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn j_yy(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn j_yx(&self, _: Vec2, _: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn j_xx(&self, x: Vec2, _: f64) -> Mat2 {
        -Self::z(x).2
    }
}

/// `j = ½ Z²` with `Z = √((x₁+x₂)² + ε) + √((x₁−x₂)² + ε)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothedCross {
    pub eps: f64,
}

impl SmoothedCross {
    fn z(&self, x: Vec2) -> (f64, Vec2, Mat2) {
        let (s, d) = (x.x + x.y, x.x - x.y);
        let (r1, r2) = ((s * s + self.eps).sqrt(), (d * d + self.eps).sqrt());
        let e1 = Vec2::new(1.0, 1.0);
        let e2 = Vec2::new(1.0, -1.0);
        let grad = e1 * (s / r1) + e2 * (d / r2);
        let hess = outer(&e1, &e1) * (self.eps / (r1 * r1 * r1)) + outer(&e2, &e2) * (self.eps / (r2 * r2 * r2));
        (r1 + r2, grad, hess)
    }
}

impl Integrand for SmoothedCross {
    fn j(&self, x: Vec2, _: f64) -> f64 {
        0.5 * self.z(x).0.powi(2)
    }
    fn j_x(&self, x: Vec2, _: f64) -> Vec2 {
        let (z, g, _) = self.z(x);
        z * g
    }
    fn j_y(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn j_yy(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn j_yx(&self, _: Vec2, _: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn j_xx(&self, x: Vec2, _: f64) -> Mat2 {
        let (z, g, h) = self.z(x);
        outer(&g, &g) + z * h
    }
}

/// `j = y`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateValue;

impl Integrand for StateValue {
    fn j(&self, _: Vec2, y: f64) -> f64 {
        y
    }
    fn j_x(&self, _: Vec2, _: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn j_y(&self, _: Vec2, _: f64) -> f64 {
        1.0
    }
    fn j_yy(&self, _: Vec2, _: f64) -> f64 {
        0.0
    }
    fn j_yx(&self, _: Vec2, _: f64) -> Vec2 {
        Vec2::zeros()
    }
    fn j_xx(&self, _: Vec2, _: f64) -> Mat2 {
        Mat2::zeros()
    }
}

/// `j = ½ (y − y_d(x))²`
#[derive(Clone, Debug)]
pub struct Tracking {
    pub target: Arc<dyn SourceData>,
}

impl Tracking {
    pub fn new(target: impl SourceData + 'static) -> Self {
        Self {
            target: Arc::new(target),
        }
    }
}

impl Integrand for Tracking {
    fn j(&self, x: Vec2, y: f64) -> f64 {
        0.5 * (y - self.target.value(x)).powi(2)
    }
    fn j_x(&self, x: Vec2, y: f64) -> Vec2 {
        -(y - self.target.value(x)) * self.target.gradient(x)
    }
    fn j_y(&self, x: Vec2, y: f64) -> f64 {
        y - self.target.value(x)
    }
    fn j_yy(&self, _: Vec2, _: f64) -> f64 {
        1.0
    }
    fn j_yx(&self, x: Vec2, _: f64) -> Vec2 {
        -self.target.gradient(x)
    }
    fn j_xx(&self, x: Vec2, y: f64) -> Mat2 {
        let g = self.target.gradient(x);
        outer(&g, &g) - (y - self.target.value(x)) * self.target.hessian(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const H: f64 = 1e-4;

    fn close(fd: f64, exact: f64) -> bool {
        (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0)
    }

    /// Central difference at step `H`, Richardson-extrapolated with `H/2`.
    fn fd<T>(f: impl Fn(f64) -> T, pick: impl Fn(&T) -> f64) -> f64 {
        let cd = |h: f64| (pick(&f(h)) - pick(&f(-h))) / (2.0 * h);
        (4.0 * cd(H / 2.0) - cd(H)) / 3.0
    }

    fn check_source(f: &dyn SourceData, x: Vec2) {
        let e = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let g = f.gradient(x);
        let h = f.hessian(x);
        for k in 0..2 {
            let d = fd(|s| f.value(x + s * e[k]), |v| *v);
            assert!(close(d, g[k]), "grad {k}: {d} vs {} at {x:?}", g[k]);
            for i in 0..2 {
                let d = fd(|s| f.gradient(x + s * e[k]), |v| v[i]);
                assert!(close(d, h[(i, k)]), "hess ({i},{k}): {d} vs {}", h[(i, k)]);
            }
        }
    }

    fn check_integrand(j: &dyn Integrand, x: Vec2, y: f64) {
        let e = [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let jx = j.j_x(x, y);
        let jxx = j.j_xx(x, y);
        let jyx = j.j_yx(x, y);
        for k in 0..2 {
            let d = fd(|s| j.j(x + s * e[k], y), |v| *v);
            assert!(close(d, jx[k]), "j_x {k}: {d} vs {}", jx[k]);
            for i in 0..2 {
                let d = fd(|s| j.j_x(x + s * e[k], y), |v| v[i]);
                assert!(close(d, jxx[(i, k)]), "j_xx ({i},{k}): {d} vs {}", jxx[(i, k)]);
            }
            let d = fd(|s| j.j_y(x + s * e[k], y), |v| *v);
            assert!(close(d, jyx[k]));
        }
        assert!(close(fd(|s| j.j(x, y + s), |v| *v), j.j_y(x, y)));
        assert!(close(fd(|s| j.j_y(x, y + s), |v| *v), j.j_yy(x, y)));
    }

    /// Keeps FD stencils off the seams of the plateau.
    fn off_seams(x: Vec2) -> bool {
        (x.x.abs() - 1.0).abs() > 1e-3 && (x.y.abs() - 1.0).abs() > 1e-3
    }

    proptest! {
        #[test]
        fn sources_match_finite_differences(x1 in -2.0..2.0f64, x2 in -2.0..2.0f64) {
            let x = Vec2::new(x1, x2);
            check_source(&Constant(3.0), x);
            check_source(&KidneySource, x);
            check_source(&Paraboloid { c: 4.0 / std::f64::consts::PI }, x);
            check_source(&Bump { offset: 0.05 }, x);
            check_source(&BiharmonicOfBump, x);
        }

        #[test]
        fn integrands_match_finite_differences(x1 in -2.0..2.0f64, x2 in -2.0..2.0f64, y in -2.0..2.0f64) {
            let x = Vec2::new(x1, x2);
            if off_seams(x) {
                check_integrand(&CosinePlateau, x, y);
            }
            check_integrand(&SmoothedCross { eps: 1e-2 }, x, y);
            check_integrand(&StateValue, x, y);
            check_integrand(&Tracking::new(Paraboloid { c: 1.0 }), x, y);
            check_integrand(&Tracking::new(Bump { offset: 0.05 }), x, y);
        }
    }

    #[test]
    fn plateau_is_continuous_across_seams() {
        for &t in &[-1.7, -0.3, 0.0, 0.6, 1.4] {
            for p in [Vec2::new(1.0, t), Vec2::new(-1.0, t), Vec2::new(t, 1.0), Vec2::new(t, -1.0)] {
                let d = Vec2::new(1e-12 * p.x.signum(), 1e-12 * p.y.signum());
                assert!((CosinePlateau::z(p).0 - CosinePlateau::z(p + d).0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn biharmonic_matches_laplacian_of_laplacian() {
        // Δ²w by nested central differences of w
        let w = Bump { offset: 0.0 };
        let lap = |x: Vec2| {
            let h = 1e-3;
            (w.value(x + Vec2::new(h, 0.0)) + w.value(x - Vec2::new(h, 0.0)) + w.value(x + Vec2::new(0.0, h))
                + w.value(x - Vec2::new(0.0, h))
                - 4.0 * w.value(x))
                / (h * h)
        };
        for x in [Vec2::new(0.1, -0.4), Vec2::new(0.7, 0.2)] {
            let h = 1e-2;
            let bil = (lap(x + Vec2::new(h, 0.0)) + lap(x - Vec2::new(h, 0.0)) + lap(x + Vec2::new(0.0, h))
                + lap(x - Vec2::new(0.0, h))
                - 4.0 * lap(x))
                / (h * h);
            let exact = BiharmonicOfBump.value(x);
            assert!((bil - exact).abs() < 1e-2 * exact.abs().max(1.0), "{bil} vs {exact}");
        }
    }
}
