//! Closed-form 2×2 matrix helpers: singular values and the projection onto
//! the unit ball of the spectral norm.

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Mat2 = nalgebra::Matrix2<f64>;

/// Rotation/reflection split `M = q·Rot + r·Refl` of a 2×2 matrix.
///
/// With `e = (a+d)/2`, `f = (a-d)/2`, `g = (c+b)/2`, `h = (c-b)/2` the
/// singular values are `q + r` and `|q - r|` where `q = |(e,h)|` and
/// `r = |(f,g)|`.
struct Split {
    e: f64,
    f: f64,
    g: f64,
    h: f64,
    q: f64,
    r: f64,
}

impl Split {
    fn new(m: &Mat2) -> Self {
        let e = 0.5 * (m[(0, 0)] + m[(1, 1)]);
        let f = 0.5 * (m[(0, 0)] - m[(1, 1)]);
        let g = 0.5 * (m[(1, 0)] + m[(0, 1)]);
        let h = 0.5 * (m[(1, 0)] - m[(0, 1)]);
        Self {
            e,
            f,
            g,
            h,
            q: e.hypot(h),
            r: f.hypot(g),
        }
    }
}

/// Singular values `(σ_max, σ_min)`.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    let s = Split::new(m);
    (s.q + s.r, (s.q - s.r).abs())
}

/// Spectral (operator) norm.
pub fn spectral_norm(m: &Mat2) -> f64 {
    let s = Split::new(m);
    s.q + s.r
}

/// Frobenius-nearest point of `{A : |A| ≤ 1}`.
///
/// The signed singular values `q + r ≥ 0` and `q - r` are clipped to
/// `[-1, 1]` and the matrix is rebuilt from the same rotation and reflection
/// parts, so no angles are ever formed. For repeated singular values the
/// factors are not unique but the projected matrix is.
pub fn project_spectral_ball(m: &Mat2) -> Mat2 {
    let s = Split::new(m);
    let sx = s.q + s.r;
    let sy = s.q - s.r;
    if sx <= 1.0 {
        return *m;
    }
    let sx = sx.min(1.0);
    let sy = sy.clamp(-1.0, 1.0);
    let q_new = 0.5 * (sx + sy);
    let r_new = 0.5 * (sx - sy);
    let mut out = Mat2::zeros();
    if s.q > 0.0 {
        let c = q_new / s.q;
        out += c * Mat2::new(s.e, -s.h, s.h, s.e);
    }
    if s.r > 0.0 {
        let c = r_new / s.r;
        out += c * Mat2::new(s.f, s.g, s.g, -s.f);
    }
    out
}

/// Frobenius inner product `A : B`.
#[inline]
pub fn ddot(a: &Mat2, b: &Mat2) -> f64 {
    a.component_mul(b).sum()
}

/// Outer product `a ⊗ b` with `(a ⊗ b)_{ij} = a_i b_j`.
#[inline]
pub fn outer(a: &Vec2, b: &Vec2) -> Mat2 {
    a * b.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn svd_oracle(m: &Mat2) -> (f64, f64) {
        let svd = m.svd(false, false);
        let s = svd.singular_values;
        (s[0].max(s[1]), s[0].min(s[1]))
    }

    #[test]
    fn identity_and_scaled_identity() {
        assert_eq!(spectral_norm(&Mat2::identity()), 1.0);
        let p = project_spectral_ball(&(3.0 * Mat2::identity()));
        assert!((p - Mat2::identity()).norm() < 1e-15);
    }

    #[test]
    fn rotation_by_large_factor_is_scaled_down() {
        let th: f64 = 0.7;
        let rot = Mat2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        let p = project_spectral_ball(&(5.0 * rot));
        assert!((p - rot).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(spectral_norm(&Mat2::zeros()), 0.0);
        assert_eq!(project_spectral_ball(&Mat2::zeros()), Mat2::zeros());
    }

    proptest! {
        #[test]
        fn singular_values_match_nalgebra(a in -5.0..5.0f64, b in -5.0..5.0f64,
                                          c in -5.0..5.0f64, d in -5.0..5.0f64) {
            let m = Mat2::new(a, b, c, d);
            let (s1, s2) = singular_values(&m);
            let (o1, o2) = svd_oracle(&m);
            prop_assert!((s1 - o1).abs() < 1e-12 * (1.0 + o1));
            prop_assert!((s2 - o2).abs() < 1e-12 * (1.0 + o1));
        }

        #[test]
        fn projection_is_feasible_and_idempotent(a in -5.0..5.0f64, b in -5.0..5.0f64,
                                                 c in -5.0..5.0f64, d in -5.0..5.0f64) {
            let m = Mat2::new(a, b, c, d);
            let p = project_spectral_ball(&m);
            prop_assert!(spectral_norm(&p) <= 1.0 + 1e-12);
            let pp = project_spectral_ball(&p);
            prop_assert!((pp - p).norm() < 1e-12);
            // clipped singular values against the oracle
            let (o1, o2) = svd_oracle(&m);
            let (p1, p2) = singular_values(&p);
            prop_assert!((p1 - o1.min(1.0)).abs() < 1e-12);
            prop_assert!((p2 - o2.min(1.0)).abs() < 1e-12);
        }

        #[test]
        fn projection_satisfies_variational_inequality(a in -5.0..5.0f64, b in -5.0..5.0f64,
                                                       c in -5.0..5.0f64, d in -5.0..5.0f64,
                                                       e in -1.0..1.0f64, f in -1.0..1.0f64,
                                                       g in -1.0..1.0f64, h in -1.0..1.0f64) {
            // (M - P) : (Y - P) <= 0 for every feasible Y
            let m = Mat2::new(a, b, c, d);
            let p = project_spectral_ball(&m);
            let mut y = Mat2::new(e, f, g, h);
            let n = spectral_norm(&y);
            if n > 1.0 { y /= n; }
            prop_assert!(ddot(&(m - p), &(y - p)) <= 1e-10);
        }
    }
}
