use crate::mat2::Vec2;
use crate::mesh::Element;

/// Triangle quadrature in barycentric coordinates, weights normalised to
/// sum to one (multiply by the triangle area).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    /// Edge-midpoint rule, exact for quadratics. Used for reported energies.
    pub fn order2() -> Self {
        Self {
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
            order: 2,
        }
    }

    /// Six-point rule exact for quartics. Used for loads, shape derivatives
    /// and the energy seen by derivative checks.
    pub fn order4() -> Self {
        const A: f64 = 0.445_948_490_915_965;
        const B: f64 = 0.091_576_213_509_771;
        const WA: f64 = 0.223_381_589_678_011;
        const WB: f64 = 0.109_951_743_655_322;
        let a2 = 1.0 - 2.0 * A;
        let b2 = 1.0 - 2.0 * B;
        Self {
            points: vec![[A, A, a2], [A, a2, A], [a2, A, A], [B, B, b2], [B, b2, B], [b2, B, B]],
            weights: vec![WA, WA, WA, WB, WB, WB],
            order: 4,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `(x_q, w_q·|T|, bary_q)` for every point, on a physical triangle.
    pub fn on<'a>(&'a self, e: &'a Element) -> impl Iterator<Item = (Vec2, f64, &'a [f64; 3])> + 'a {
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(b, &w)| (e.point(b), w * e.area, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of `l0^a l1^b l2^c` over the reference simplex of
    /// area one: a! b! c! 2! / (a+b+c+2)!.
    fn monomial(a: u32, b: u32, c: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        f(a) * f(b) * f(c) * 2.0 / f(a + b + c + 2)
    }

    fn check_exactness(rule: &QuadratureRule) {
        let s: f64 = rule.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        for deg in 0..=rule.order() as u32 {
            for a in 0..=deg {
                for b in 0..=deg - a {
                    let c = deg - a - b;
                    let q: f64 = rule
                        .points()
                        .iter()
                        .zip(rule.weights())
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                        .sum();
                    assert!((q - monomial(a, b, c)).abs() < 1e-13, "deg {deg} ({a},{b},{c})");
                }
            }
        }
    }

    #[test]
    fn order2_exact_for_quadratics() {
        check_exactness(&QuadratureRule::order2());
    }

    #[test]
    fn order4_exact_for_quartics() {
        check_exactness(&QuadratureRule::order4());
    }

    #[test]
    fn order2_not_exact_for_cubics() {
        let r = QuadratureRule::order2();
        let q: f64 = r.points().iter().zip(r.weights()).map(|(p, w)| w * p[0].powi(3)).sum();
        assert!((q - monomial(3, 0, 0)).abs() > 1e-3);
    }
}
