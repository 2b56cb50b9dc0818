//! The six benchmark experiments.

use std::f64::consts::PI;

use super::functions::{
    BiharmonicOfBump, Bump, Constant, CosinePlateau, KidneySource, Paraboloid, SmoothedCross, StateValue, Tracking,
};
use super::ProblemSpec;
use crate::mat2::Vec2;
use crate::mesh::{box_with_ellipse, box_with_rectangle, Mesh, Rect};
use crate::{Error, Result};

pub const EXPERIMENT_NAMES: [&str; 6] = ["nopde1", "nopde2", "poisson1", "poisson2", "coupled", "eigen"];

/// Starting shape inside the hold-all box `(−2, 2)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialDomain {
    Rectangle(Rect),
    Ellipse { center: Vec2, semiaxes: (f64, f64) },
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub name: &'static str,
    pub problem: ProblemSpec,
    pub initial: InitialDomain,
    /// Damping used for the Newton-type direction.
    pub newton_t: f64,
    /// Energy of the expected minimiser, when known.
    pub target_energy: Option<f64>,
}

pub fn hold_all() -> Rect {
    Rect::square(2.0)
}

impl Experiment {
    pub fn initial_mesh(&self, n: usize) -> Result<Mesh> {
        match self.initial {
            InitialDomain::Rectangle(r) => box_with_rectangle(hold_all(), r, n),
            InitialDomain::Ellipse { center, semiaxes } => box_with_ellipse(hold_all(), center, semiaxes, n),
        }
    }
}

pub fn builtin_experiments() -> Vec<Experiment> {
    EXPERIMENT_NAMES.iter().map(|n| experiment(n).unwrap()).collect()
}

pub fn experiment(name: &str) -> Result<Experiment> {
    let unit_square = InitialDomain::Rectangle(Rect::square(1.0));
    let disk_radius = 2.0 / PI.sqrt();
    let e = match name {
        "nopde1" => Experiment {
            name: "nopde1",
            problem: ProblemSpec::no_pde(CosinePlateau),
            initial: InitialDomain::Rectangle(Rect::new(-1.5, -1.0, -1.0, 1.0)),
            newton_t: 0.0625,
            target_energy: Some(-16.0 / (PI * PI)),
        },
        "nopde2" => Experiment {
            name: "nopde2",
            problem: ProblemSpec::no_pde(SmoothedCross { eps: 1e-4 }).with_area_constraint(4.0),
            initial: InitialDomain::Ellipse {
                center: Vec2::zeros(),
                semiaxes: (disk_radius, disk_radius),
            },
            newton_t: 0.125,
            target_energy: Some(4.0),
        },
        "poisson1" => Experiment {
            name: "poisson1",
            problem: ProblemSpec::poisson(StateValue, KidneySource),
            initial: InitialDomain::Ellipse {
                center: Vec2::zeros(),
                semiaxes: (2.0 / PI.sqrt(), 1.0 / PI.sqrt()),
            },
            newton_t: 0.125,
            target_energy: None,
        },
        "poisson2" => Experiment {
            name: "poisson2",
            problem: ProblemSpec::poisson(Tracking::new(Paraboloid { c: 4.0 / PI }), Constant(1.0))
                .with_area_constraint(4.0),
            initial: unit_square,
            newton_t: 0.125,
            target_energy: Some(6.0 / (PI * PI)),
        },
        "coupled" => Experiment {
            name: "coupled",
            problem: ProblemSpec::coupled(Tracking::new(Bump { offset: 0.05 }), BiharmonicOfBump)
                .with_area_constraint(4.0),
            initial: unit_square,
            newton_t: 0.0625,
            target_energy: Some(0.005),
        },
        "eigen" => Experiment {
            name: "eigen",
            problem: ProblemSpec::eigenvalue().with_area_constraint(4.0),
            initial: unit_square,
            newton_t: 0.125,
            target_energy: Some(4.54210),
        },
        other => {
            return Err(Error::Config(format!(
                "unknown experiment `{other}`; expected one of {}",
                EXPERIMENT_NAMES.join(", ")
            )))
        }
    };
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds_a_valid_mesh() {
        for e in builtin_experiments() {
            let m = e.initial_mesh(8).unwrap();
            assert!(m.is_valid(), "{}", e.name);
            if let Some(a) = e.problem.area_target() {
                assert!((m.omega_area() - a).abs() < 0.05 * a, "{}: {}", e.name, m.omega_area());
            }
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(experiment("nope"), Err(Error::Config(_))));
    }
}
