use super::*;
use crate::problems::{experiment, transported_energy, EXPERIMENT_NAMES};

fn field(mesh: &Mesh, seed: u64) -> VectorField {
    let s = seed as f64;
    VectorField::from_fn(mesh, |x| {
        Vec2::new(
            (0.7 * x.x + 1.3 * x.y + s).sin() + 0.3 * (2.1 * x.y - 0.4 * s).cos(),
            (1.1 * x.x - 0.6 * x.y + 0.5 * s).cos() - 0.2 * (1.7 * x.x * x.y).sin(),
        ) * 0.3
    })
}

fn energy_at(problem: &ProblemSpec, mesh: &Mesh, v: &VectorField, t: f64) -> f64 {
    let (m, _) = mesh.deform(v, t);
    transported_energy(problem, &m).unwrap()
}

fn derivative_at(problem: &ProblemSpec, mesh: &Mesh, v: &VectorField, t: f64, w: &VectorField) -> f64 {
    let (m, _) = mesh.deform(v, t);
    ShapeContext::new(problem, &m).unwrap().first_derivative().pair(w)
}

fn presets(n: usize) -> Vec<(&'static str, ProblemSpec, Mesh)> {
    EXPERIMENT_NAMES
        .iter()
        .map(|name| {
            let e = experiment(name).unwrap();
            let m = e.initial_mesh(n).unwrap();
            (e.name, e.problem, m)
        })
        .collect()
}

#[test]
fn assembly_paths_agree() {
    for (name, p, m) in presets(8) {
        let ctx = ShapeContext::new(&p, &m).unwrap();
        let fused = ctx.first_derivative();
        let parts = ctx.first_derivative_parts().total();
        let scale = fused.norm().max(1e-300);
        let diff: f64 = fused
            .values()
            .iter()
            .zip(parts.values())
            .map(|(a, b)| (a - b).norm_squared())
            .sum::<f64>()
            .sqrt();
        assert!(diff <= 1e-10 * scale, "{name}: {diff:e} vs {scale:e}");
    }
}

#[test]
fn covector_vanishes_off_the_closure() {
    let (_, p, m) = presets(4).remove(3);
    let d = ShapeContext::new(&p, &m).unwrap().first_derivative();
    let closure = m.omega_closure_flags();
    for (v, val) in d.values().iter().enumerate() {
        if !closure[v] || m.is_on_hold_all_boundary(v) {
            assert_eq!(*val, Vec2::zeros());
        }
    }
}

#[test]
fn first_derivative_matches_central_differences() {
    for (name, p, m) in presets(4) {
        let v = field(&m, 1);
        let exact = ShapeContext::new(&p, &m).unwrap().first_derivative().pair(&v);
        let h = 1e-4;
        let fd = (energy_at(&p, &m, &v, h) - energy_at(&p, &m, &v, -h)) / (2.0 * h);
        let tol = 1e-6 * (1.0 + exact.abs());
        assert!((fd - exact).abs() <= tol, "{name}: fd {fd} exact {exact}");
    }
}

#[test]
fn sensitivity_matches_state_differences() {
    for (name, p, m) in presets(4) {
        let v = field(&m, 2);
        let sens = sensitivity(&p, &m, &crate::problems::solve_state(&p, &m).unwrap(), &v).unwrap();
        let h = 1e-5;
        let st = |t: f64| crate::problems::solve_state(&p, &m.deform(&v, t).0).unwrap();
        let (plus, minus) = (st(h), st(-h));
        let check = |a: &ScalarField, b: &ScalarField, s: &ScalarField| {
            for i in 0..s.len() {
                let fd = (a[i] - b[i]) / (2.0 * h);
                assert!((fd - s[i]).abs() <= 1e-5 * (1.0 + s[i].abs()), "{name} dof {i}: {fd} vs {}", s[i]);
            }
        };
        match (&sens, &plus, &minus) {
            (Sensitivity::NoPde, _, _) => {}
            (Sensitivity::Poisson { s }, State::Poisson { y: a }, State::Poisson { y: b }) => check(a, b, s),
            (Sensitivity::Coupled { s1, s2 }, State::Coupled { y1: a1, y2: a2 }, State::Coupled { y1: b1, y2: b2 }) => {
                check(a1, b1, s1);
                check(a2, b2, s2);
            }
            (
                Sensitivity::Eigen { s, dlambda },
                State::Eigen { z: a, lambda: la, .. },
                State::Eigen { z: b, lambda: lb, .. },
            ) => {
                check(a, b, s);
                let fd = (la - lb) / (2.0 * h);
                assert!((fd - dlambda).abs() <= 1e-6 * dlambda.abs().max(1.0), "{fd} vs {dlambda}");
            }
            _ => panic!("kind mismatch"),
        }
    }
}

#[test]
fn hessian_matches_differences_of_the_derivative() {
    for (name, p, m) in presets(4) {
        let v = field(&m, 3);
        let w = field(&m, 4);
        let ctx = ShapeContext::new(&p, &m).unwrap();
        let exact = ctx.hessian().bilin(&v, &w).unwrap();
        let h = 1e-4;
        let fd = (derivative_at(&p, &m, &v, h, &w) - derivative_at(&p, &m, &v, -h, &w)) / (2.0 * h);
        assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{name}: fd {fd} exact {exact}");
    }
}

#[test]
fn hessian_is_symmetric() {
    for (name, p, m) in presets(4) {
        let ctx = ShapeContext::new(&p, &m).unwrap();
        let hess = ctx.hessian();
        let (v, w) = (field(&m, 5), field(&m, 6));
        let a = hess.bilin(&v, &w).unwrap();
        let b = hess.bilin(&w, &v).unwrap();
        assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{name}: {a} vs {b}");
    }
}

#[test]
fn mismatched_adjoint_is_rejected() {
    let (_, p, m) = presets(4).remove(2);
    let state = crate::problems::solve_state(&p, &m).unwrap();
    assert!(matches!(
        ShapeContext::with_solution(&p, &m, state, Adjoint::NoPde),
        Err(Error::Contract(_))
    ));
}
