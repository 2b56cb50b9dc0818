//! Element-constant matrix expressions of the expanded transport terms.

use crate::mat2::{outer, Mat2, Vec2};

/// `𝒜[V] = I div V − DV − DVᵀ`
pub fn cal_a(dv: &Mat2) -> Mat2 {
    Mat2::identity() * dv.trace() - dv - dv.transpose()
}

/// `𝔻[V,W] = div V div W − tr(DV DW)`
pub fn dbrack(dv: &Mat2, dw: &Mat2) -> f64 {
    dv.trace() * dw.trace() - (dv * dw).trace()
}

/// Second-order expansion matrix of `A(V) det(I + DV)`:
/// `𝔸[V,W] = 𝔻 I − div V (DW + DWᵀ) − div W (DV + DVᵀ) + DV DW + DW DV
/// + DV DWᵀ + DW DVᵀ + (DV DW + DW DV)ᵀ`.
pub fn abrack(dv: &Mat2, dw: &Mat2) -> Mat2 {
    let (a, b) = (dv, dw);
    let sym = a * b + b * a;
    Mat2::identity() * dbrack(a, b) - (b + b.transpose()) * a.trace() - (a + a.transpose()) * b.trace()
        + sym
        + a * b.transpose()
        + b * a.transpose()
        + sym.transpose()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatrixForms {
    pub cal_a: Mat2,
    pub dbrack: f64,
    pub abrack: Mat2,
}

pub fn matrix_forms(dv: &Mat2, dw: &Mat2) -> MatrixForms {
    MatrixForms {
        cal_a: cal_a(dv),
        dbrack: dbrack(dv, dw),
        abrack: abrack(dv, dw),
    }
}

/// `G` with `𝒜[W] a·b = G : DW`.
pub fn cal_a_coefficient(a: &Vec2, b: &Vec2) -> Mat2 {
    Mat2::identity() * a.dot(b) - outer(a, b) - outer(b, a)
}

/// `div V I − DVᵀ`, so that `𝔻[V,W] = (div V I − DVᵀ) : DW`.
pub fn dbrack_coefficient(dv: &Mat2) -> Mat2 {
    Mat2::identity() * dv.trace() - dv.transpose()
}

/// `C` with `𝔸[V,W] a·b = C : DW` (linear in `DW`, probed entrywise).
pub fn abrack_coefficient(dv: &Mat2, a: &Vec2, b: &Vec2) -> Mat2 {
    let mut c = Mat2::zeros();
    for k in 0..2 {
        for l in 0..2 {
            let mut e = Mat2::zeros();
            e[(k, l)] = 1.0;
            c[(k, l)] = (abrack(dv, &e) * b).dot(a);
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::ddot;
    use proptest::prelude::*;

    fn mat() -> impl Strategy<Value = Mat2> {
        prop::array::uniform4(-2.0..2.0f64).prop_map(|v| Mat2::new(v[0], v[1], v[2], v[3]))
    }

    fn vec() -> impl Strategy<Value = Vec2> {
        prop::array::uniform2(-2.0..2.0f64).prop_map(|v| Vec2::new(v[0], v[1]))
    }

    /// `A(V) det(I + DV)` evaluated directly.
    fn transported(dv: &Mat2) -> Mat2 {
        let f = Mat2::identity() + dv;
        let inv = f.try_inverse().unwrap();
        inv * inv.transpose() * f.determinant()
    }

    #[test]
    fn identity_cases() {
        let i = Mat2::identity();
        assert_eq!(cal_a(&i), Mat2::zeros());
        assert_eq!(dbrack(&i, &i), 2.0);
    }

    proptest! {
        #[test]
        fn symmetry(a in mat(), b in mat()) {
            let c = cal_a(&a);
            prop_assert!((c - c.transpose()).amax() < 1e-14);
            prop_assert!((dbrack(&a, &b) - dbrack(&b, &a)).abs() < 1e-12);
            prop_assert!((abrack(&a, &b) - abrack(&b, &a)).amax() < 1e-12);
        }

        #[test]
        fn coefficients_reproduce_forms(a in mat(), w in mat(), x in vec(), y in vec()) {
            prop_assert!((ddot(&cal_a_coefficient(&x, &y), &w) - (cal_a(&w) * y).dot(&x)).abs() < 1e-12);
            prop_assert!((ddot(&dbrack_coefficient(&a), &w) - dbrack(&a, &w)).abs() < 1e-12);
            let lhs = ddot(&abrack_coefficient(&a, &x, &y), &w);
            prop_assert!((lhs - (abrack(&a, &w) * y).dot(&x)).abs() < 1e-10);
        }

        /// `𝒜` and `𝔸` are the first and mixed second derivatives of
        /// `A(V) det(I + DV)` at zero.
        #[test]
        fn expansion_of_transported_matrix(a in mat(), b in mat()) {
            let h = 1e-3;
            let first = (transported(&(a * h)) - transported(&(a * -h))) / (2.0 * h);
            prop_assert!((first - cal_a(&a)).amax() < 1e-4 * (1.0 + a.amax().powi(3)));
            let f = |s: f64, t: f64| transported(&(a * s + b * t));
            let mixed = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
            prop_assert!((mixed - abrack(&a, &b)).amax() < 1e-3 * (1.0 + (a.amax() + b.amax()).powi(4)));
        }
    }
}
