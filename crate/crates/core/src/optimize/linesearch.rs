use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmijoConfig {
    pub c1: f64,
    pub beta: f64,
    pub t_init: f64,
    pub t_min: f64,
}

impl Default for ArmijoConfig {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            beta: 0.5,
            t_init: 0.9,
            t_min: 1e-6,
        }
    }
}

impl ArmijoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::Config(format!("armijo c1 = {} must lie in (0, 1)", self.c1)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!("armijo beta = {} must lie in (0, 1)", self.beta)));
        }
        if !(self.t_init > 0.0 && self.t_init < 1.0) {
            return Err(Error::Config(format!("armijo t_init = {} must lie in (0, 1)", self.t_init)));
        }
        if !(self.t_min > 0.0 && self.t_min <= self.t_init) {
            return Err(Error::Config(format!("armijo t_min = {} must lie in (0, t_init]", self.t_min)));
        }
        Ok(())
    }
}

/// Largest `t = t_init βᵏ ≥ t_min` with
/// `energy_at(t) ≤ energy_at(0) + c1 t slope`. Invalid trial meshes are
/// expected to evaluate to `+∞`.
///
/// The last call to `energy_at` before a successful return is at the
/// accepted step.
pub fn armijo_step(mut energy_at: impl FnMut(f64) -> f64, slope: f64, cfg: &ArmijoConfig) -> Result<f64> {
    cfg.validate()?;
    if !(slope < 0.0) {
        return Err(Error::Direction(format!("slope {slope:e} is not negative")));
    }
    let e0 = energy_at(0.0);
    if !e0.is_finite() {
        return Err(Error::Direction(format!("energy {e0} at the current iterate")));
    }
    let mut t = cfg.t_init;
    while t >= cfg.t_min {
        let e = energy_at(t);
        if e <= e0 + cfg.c1 * t * slope {
            return Ok(t);
        }
        t *= cfg.beta;
    }
    Err(Error::LineSearch { t_min: cfg.t_min })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_the_initial_step_on_a_quadratic() {
        // −t + t² at 0.9: −0.09 ≤ −9e−5
        let t = armijo_step(|t| -t + t * t, -1.0, &ArmijoConfig::default()).unwrap();
        assert_eq!(t, 0.9);
    }

    #[test]
    fn backtracks_until_sufficient_decrease() {
        // −t + 10 t² needs t ≤ (1 − c1) / 10
        let cfg = ArmijoConfig::default();
        let t = armijo_step(|t| -t + 10.0 * t * t, -1.0, &cfg).unwrap();
        assert!(t <= (1.0 - cfg.c1) / 10.0);
        assert!(t / cfg.beta > (1.0 - cfg.c1) / 10.0);
    }

    #[test]
    fn rejects_ascent() {
        assert!(armijo_step(|t| t, 0.0, &ArmijoConfig::default()).is_err());
        assert!(armijo_step(|t| t, 1.0, &ArmijoConfig::default()).is_err());
    }

    #[test]
    fn infinite_trials_fail() {
        let r = armijo_step(|t| if t > 0.0 { f64::INFINITY } else { 0.0 }, -1.0, &ArmijoConfig::default());
        assert!(matches!(r, Err(Error::LineSearch { .. })));
    }

    #[test]
    fn last_evaluation_is_the_accepted_step() {
        let mut last = f64::NAN;
        let t = armijo_step(
            |t| {
                last = t;
                -t + 4.0 * t * t
            },
            -1.0,
            &ArmijoConfig::default(),
        )
        .unwrap();
        assert_eq!(t, last);
    }

    #[test]
    fn invalid_constants_are_rejected() {
        let bad = ArmijoConfig {
            beta: 1.0,
            ..ArmijoConfig::default()
        };
        assert!(matches!(armijo_step(|t| -t, -1.0, &bad), Err(Error::Config(_))));
        let bad = ArmijoConfig {
            t_init: 1.0,
            ..ArmijoConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
