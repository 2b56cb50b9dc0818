//! Flag/`key = value` merging and the run manifest.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use shapeopt::optimize::{Method, RunConfig};
use shapeopt::problems::experiment;

/// Settings given on the command line or in a config file; unset fields
/// take the defaults of [`RunConfig::new`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub method: Option<String>,
    pub newton_t: Option<f64>,
    pub iterations: Option<usize>,
    pub n: Option<usize>,
    pub out: Option<PathBuf>,
    pub tau0: Option<f64>,
    pub admm_tol: Option<f64>,
    pub seed: Option<u64>,
    pub admm_max_iter: Option<usize>,
    pub balance_every: Option<usize>,
    pub cg_tol: Option<f64>,
    pub cg_max_iter: Option<usize>,
    pub c1: Option<f64>,
    pub beta: Option<f64>,
    pub t_init: Option<f64>,
    pub t_min: Option<f64>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("invalid value {value:?} for {key}"))
}

impl Overrides {
    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key = value", no + 1))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            self.set(&key, value).map_err(|e| format!("config line {}: {e}", no + 1))?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "experiment" => self.experiment = Some(v.to_string()),
            "method" => self.method = Some(v.to_string()),
            "newton_t" => self.newton_t = Some(parse(key, v)?),
            "iters" | "iterations" => self.iterations = Some(parse(key, v)?),
            "n" => self.n = Some(parse(key, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            "tau0" => self.tau0 = Some(parse(key, v)?),
            "admm_tol" => self.admm_tol = Some(parse(key, v)?),
            "seed" => self.seed = Some(parse(key, v)?),
            "admm_max_iter" => self.admm_max_iter = Some(parse(key, v)?),
            "balance_every" => self.balance_every = Some(parse(key, v)?),
            "cg_tol" => self.cg_tol = Some(parse(key, v)?),
            "cg_max_iter" => self.cg_max_iter = Some(parse(key, v)?),
            "c1" => self.c1 = Some(parse(key, v)?),
            "beta" => self.beta = Some(parse(key, v)?),
            "t_init" => self.t_init = Some(parse(key, v)?),
            "t_min" => self.t_min = Some(parse(key, v)?),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }
}

/// Fully resolved run: every default made explicit.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub seed: u64,
}

impl Resolved {
    pub fn new(o: Overrides) -> shapeopt::Result<Self> {
        let name = o
            .experiment
            .ok_or_else(|| shapeopt::Error::Config("--experiment is required".into()))?;
        let exp = experiment(&name)?;
        let method: Method = o.method.as_deref().unwrap_or("inf").parse()?;
        let mut c = RunConfig::new(exp.name, method);
        c.newton_t = Some(o.newton_t.unwrap_or(exp.newton_t));
        c.iterations = o.iterations.unwrap_or(c.iterations);
        c.n = o.n.unwrap_or(c.n);
        c.admm.tau0 = o.tau0.unwrap_or(c.admm.tau0);
        c.admm.max_iter = o.admm_max_iter.unwrap_or(c.admm.max_iter);
        c.admm.balance_every = o.balance_every.unwrap_or(c.admm.balance_every);
        c.admm.cg_tol = o.cg_tol.unwrap_or(c.admm.cg_tol);
        c.admm.cg_max_iter = o.cg_max_iter.unwrap_or(c.admm.cg_max_iter);
        c.armijo.c1 = o.c1.unwrap_or(c.armijo.c1);
        c.armijo.beta = o.beta.unwrap_or(c.armijo.beta);
        c.armijo.t_init = o.t_init.unwrap_or(c.armijo.t_init);
        c.armijo.t_min = o.t_min.unwrap_or(c.armijo.t_min);
        c.validate()?;
        c.admm.tol = Some(match o.admm_tol {
            Some(t) => t,
            None => {
                let triangles = exp.initial_mesh(c.n)?.num_triangles();
                c.admm.tolerance(triangles)
            }
        });
        c.out = Some(
            o.out
                .unwrap_or_else(|| PathBuf::from("out").join(format!("{}-{}", exp.name, method))),
        );
        c.validate()?;
        Ok(Self {
            config: c,
            seed: o.seed.unwrap_or(0),
        })
    }

    /// `key = value` text that `--config` reads back into the same run.
    pub fn manifest(&self) -> String {
        let c = &self.config;
        let mut s = format!(
            "# shapeopt {} run manifest; `shapeopt run --config <this file>` repeats the run\n",
            env!("CARGO_PKG_VERSION")
        );
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment", c.experiment.clone());
        kv("method", c.method.to_string());
        kv("newton_t", fmt_f64(c.newton_t.expect("resolved")));
        kv("iters", c.iterations.to_string());
        kv("n", c.n.to_string());
        kv("out", c.out.as_ref().expect("resolved").display().to_string());
        kv("tau0", fmt_f64(c.admm.tau0));
        kv("admm_tol", fmt_f64(c.admm.tol.expect("resolved")));
        kv("admm_max_iter", c.admm.max_iter.to_string());
        kv("balance_every", c.admm.balance_every.to_string());
        kv("cg_tol", fmt_f64(c.admm.cg_tol));
        kv("cg_max_iter", c.admm.cg_max_iter.to_string());
        kv("c1", fmt_f64(c.armijo.c1));
        kv("beta", fmt_f64(c.armijo.beta));
        kv("t_init", fmt_f64(c.armijo.t_init));
        kv("t_min", fmt_f64(c.armijo.t_min));
        kv("seed", self.seed.to_string());
        s
    }
}

/// Shortest text that parses back to the same `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}
