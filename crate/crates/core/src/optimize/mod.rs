//! The outer loop: direction, Armijo step on the reported energy, mesh
//! update and area projection.

mod area;
mod linesearch;
mod output;

pub use area::project_area;
pub use linesearch::{armijo_step, ArmijoConfig};
pub use output::{energy_csv_row, energy_svg, ENERGY_CSV_HEADER};

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::descent::{admm_direction, p_direction, AdmmOptions, DirectionRequest};
use crate::fem::VectorField;
use crate::mesh::{Mesh, VtkExport};
use crate::problems::{evaluate, experiment, Experiment, ProblemSpec};
use crate::shape::ShapeContext;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Hilbert (`p = 2`) direction, normalised.
    P2,
    /// `p = 4` Laplacian direction, normalised.
    P4,
    /// Lipschitz steepest descent by ADMM.
    Inf,
    /// Damped Newton-type direction by ADMM.
    Newton,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::P2, Method::P4, Method::Inf, Method::Newton];

    pub fn name(self) -> &'static str {
        match self {
            Method::P2 => "p2",
            Method::P4 => "p4",
            Method::Inf => "inf",
            Method::Newton => "newton",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?} (expected p2, p4, inf or newton)")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: String,
    pub method: Method,
    /// Damping of the Newton-type direction; `None` takes the preset's.
    pub newton_t: Option<f64>,
    pub iterations: usize,
    pub armijo: ArmijoConfig,
    pub admm: AdmmOptions,
    /// Directory receiving `energy.csv`, the meshes and the plot.
    pub out: Option<PathBuf>,
    /// Cells per unit length of the hold-all mesh.
    pub n: usize,
}

impl RunConfig {
    pub fn new(experiment: impl Into<String>, method: Method) -> Self {
        Self {
            experiment: experiment.into(),
            method,
            newton_t: None,
            iterations: 20,
            armijo: ArmijoConfig::default(),
            admm: AdmmOptions::default(),
            out: None,
            n: 16,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.n < 1 {
            return Err(Error::Config("mesh resolution n must be at least 1".into()));
        }
        self.armijo.validate()?;
        if !(self.admm.tau0 > 0.0) {
            return Err(Error::Config(format!("tau0 = {} must be positive", self.admm.tau0)));
        }
        if let Some(tol) = self.admm.tol {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("ADMM tolerance {tol} must be positive")));
            }
        }
        if let Some(t) = self.newton_t {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("newton_t = {t} must lie in (0, 1)")));
            }
        }
        Ok(())
    }

    /// Damping actually used by a run on `exp`.
    pub fn resolved_newton_t(&self, exp: &Experiment) -> f64 {
        self.newton_t.unwrap_or(exp.newton_t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Reported energy of the iterate.
    pub energy: f64,
    /// Step that produced the iterate (0 for the initial shape).
    pub step: f64,
    /// Objective of the direction problem that produced the iterate.
    pub direction_objective: f64,
    pub admm_iterations: usize,
    pub area: f64,
    /// Smallest `4√3 |T| / Σ|e|²` over all triangles.
    pub min_quality: f64,
}

#[derive(Clone, Debug)]
pub struct History {
    pub experiment: String,
    pub method: Method,
    /// Initial shape followed by one record per accepted update.
    pub records: Vec<IterationRecord>,
    /// Why the loop ended before the iteration budget, if it did.
    pub stop: Option<String>,
    pub mesh: Mesh,
}

impl History {
    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.energy)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{ENERGY_CSV_HEADER}\n");
        for r in &self.records {
            s.push_str(&energy_csv_row(r));
            s.push('\n');
        }
        s
    }
}

/// Smallest triangle quality `4√3 |T| / Σ|e|²`, 1 for equilateral.
pub fn min_quality(mesh: &Mesh) -> f64 {
    mesh.elements()
        .map(|e| {
            let l2: f64 = (0..3).map(|k| (e.x[(k + 1) % 3] - e.x[k]).norm_squared()).sum();
            4.0 * 3f64.sqrt() * e.area / l2
        })
        .fold(f64::INFINITY, f64::min)
}

fn record(iteration: usize, energy: f64, mesh: &Mesh, step: f64, objective: f64, admm: usize) -> IterationRecord {
    IterationRecord {
        iteration,
        energy,
        step,
        direction_objective: objective,
        admm_iterations: admm,
        area: mesh.omega_area(),
        min_quality: min_quality(mesh),
    }
}

struct Sink {
    dir: PathBuf,
    csv: BufWriter<File>,
}

impl Sink {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut csv = BufWriter::new(File::create(dir.join("energy.csv"))?);
        writeln!(csv, "{ENERGY_CSV_HEADER}")?;
        Ok(Self {
            dir: dir.to_path_buf(),
            csv,
        })
    }

    fn push(&mut self, r: &IterationRecord, mesh: &Mesh, label: &str) -> Result<()> {
        writeln!(self.csv, "{}", energy_csv_row(r))?;
        self.csv.flush()?;
        VtkExport::new(mesh)
            .title(format!("{label} iteration {}", r.iteration))
            .write_file(self.dir.join(format!("mesh_{:04}.vtk", r.iteration)))
    }

    fn finish(self, history: &History, target: Option<f64>) -> Result<()> {
        let (offset, what) = match target {
            Some(t) => (t, "energy - target".to_string()),
            None => {
                let min = history.energies().into_iter().fold(f64::INFINITY, f64::min);
                (min, "energy - min".to_string())
            }
        };
        let label = format!("{} / {}: {what} (log10)", history.experiment, history.method);
        std::fs::write(self.dir.join("energy.svg"), energy_svg(history, offset, &label))?;
        Ok(())
    }
}

/// `(id + t V)(mesh)` followed by the area projection when constrained.
fn trial_mesh(problem: &ProblemSpec, mesh: &Mesh, v: &VectorField, t: f64) -> Result<Mesh> {
    let (m, report) = mesh.deform(v, t);
    if !report.valid {
        return Err(Error::InvalidMesh(format!(
            "step {t:e} inverts a triangle (min det {:e})",
            report.min_jacobian_det
        )));
    }
    match problem.area_target() {
        Some(a) => project_area(&m, a),
        None => Ok(m),
    }
}

/// Result of one accepted shape update.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub mesh: Mesh,
    pub energy: f64,
    pub step: f64,
    /// Direction on the previous mesh.
    pub direction: VectorField,
    pub objective: f64,
    pub admm_iterations: usize,
}

/// One iteration of the loop from `mesh`: derivative, direction of
/// `cfg.method`, Armijo step and, when constrained, area projection.
pub fn step(problem: &ProblemSpec, mesh: &Mesh, cfg: &RunConfig, newton_t: f64) -> Result<StepOutcome> {
    let ctx = ShapeContext::new(problem, mesh)?;
    let g = ctx.first_derivative();
    let area = problem.is_area_constrained();
    let (v, objective, admm_iterations) = match cfg.method {
        Method::P2 | Method::P4 => {
            let p = if cfg.method == Method::P2 { 2 } else { 4 };
            let v = p_direction(p, &DirectionRequest::first_order(mesh, &g, area))?;
            let obj = g.pair(&v);
            (v, obj, 0)
        }
        Method::Inf => {
            let r = admm_direction(&DirectionRequest::first_order(mesh, &g, area), &cfg.admm)?;
            (r.v, r.diagnostics.objective, r.diagnostics.iterations)
        }
        Method::Newton => {
            let h = ctx.hessian();
            let r = admm_direction(&DirectionRequest::newton(mesh, &g, &h, newton_t, area), &cfg.admm)?;
            (r.v, r.diagnostics.objective, r.diagnostics.iterations)
        }
    };
    let slope = g.pair(&v);
    let e0 = ctx.energy();
    let mut accepted = None;
    let t = armijo_step(
        |t| {
            if t == 0.0 {
                return e0;
            }
            accepted = None;
            let Ok(m) = trial_mesh(problem, mesh, &v, t) else {
                return f64::INFINITY;
            };
            let e = evaluate(problem, &m).unwrap_or(f64::INFINITY);
            accepted = Some((m, e));
            e
        },
        slope,
        &cfg.armijo,
    )?;
    let (mesh, energy) = accepted.ok_or_else(|| Error::Contract("accepted step has no trial mesh".into()))?;
    Ok(StepOutcome {
        mesh,
        energy,
        step: t,
        direction: v,
        objective,
        admm_iterations,
    })
}

/// Runs the configured optimisation. Failures inside the loop end it early
/// and are recorded in [`History::stop`]; setup and I/O failures are
/// returned.
pub fn run(cfg: &RunConfig) -> Result<History> {
    cfg.validate()?;
    let exp = experiment(&cfg.experiment)?;
    let newton_t = cfg.resolved_newton_t(&exp);
    let problem = &exp.problem;
    let label = format!("{} {}", exp.name, cfg.method);

    let mut mesh = exp.initial_mesh(cfg.n)?;
    if let Some(a) = problem.area_target() {
        mesh = project_area(&mesh, a)?;
    }
    let mut sink = cfg.out.as_deref().map(Sink::create).transpose()?;
    let first = record(0, evaluate(problem, &mesh)?, &mesh, 0.0, 0.0, 0);
    if let Some(s) = sink.as_mut() {
        s.push(&first, &mesh, &label)?;
    }
    let mut records = vec![first];
    let mut stop = None;

    for it in 1..=cfg.iterations {
        match step(problem, &mesh, cfg, newton_t) {
            Ok(u) => {
                let energy = u.energy;
                let r = record(it, energy, &u.mesh, u.step, u.objective, u.admm_iterations);
                log::info!(
                    "{label}: iteration {it} energy {energy:.10e} step {:.3e} admm {}",
                    u.step,
                    u.admm_iterations
                );
                mesh = u.mesh;
                if let Some(s) = sink.as_mut() {
                    s.push(&r, &mesh, &label)?;
                }
                records.push(r);
            }
            Err(e) => {
                log::warn!("{label}: stopping at iteration {it}: {e}");
                stop = Some(format!("iteration {it}: {e}"));
                break;
            }
        }
    }

    let history = History {
        experiment: exp.name.to_string(),
        method: cfg.method,
        records,
        stop,
        mesh,
    };
    if let Some(s) = sink {
        s.finish(&history, exp.target_energy)?;
    }
    Ok(history)
}

#[cfg(test)]
mod tests;
