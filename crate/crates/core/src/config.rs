//! Run configuration.
//!
//! A flat `key = value` text file. Blank lines and lines starting with `#`
//! are ignored; expression values may be wrapped in double quotes. Unknown
//! or repeated keys are rejected. Two configurations ship with the crate and
//! can be referred to by name: `paper_experiment` and `zero_source`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::expr::{parse, Expression};
use crate::field::{VectorFieldSpec, DEFAULT_EPS_FIELD};
use crate::geom::DomainRect;
use crate::problem::Problem;
use crate::reference::DEFAULT_CELLS;
use crate::stepper::{Discretization, Mode, SchemeParams};

pub const ROTATING_FLOW: &str = include_str!("../configs/paper_experiment.cfg");
pub const ZERO_SOURCE: &str = include_str!("../configs/zero_source.cfg");

/// Looks up a shipped configuration by name.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "paper_experiment" => Some(ROTATING_FLOW),
        "zero_source" => Some(ZERO_SOURCE),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    pub params: SchemeParams,
    pub mode: Mode,
    pub disc: Discretization,
    /// Cells per direction of the reference mesh.
    pub reference_cells: (usize, usize),
    /// Acceptance thresholds of `compare` (relative L-infinity, L1).
    pub tol_linf: f64,
    pub tol_l1: f64,
    /// Threshold of the divergence check.
    pub div_tol: f64,
    pub workers: usize,
    pub output: PathBuf,
    /// Write a snapshot every this many steps; 0 disables.
    pub snapshots: usize,
    pub vtk: bool,
}

const KEYS: &[&str] = &[
    "x_min",
    "x_max",
    "y_min",
    "y_max",
    "mu",
    "sigma",
    "beta1",
    "beta2",
    "f",
    "u0",
    "theta",
    "dt",
    "steps",
    "mode",
    "eps_stat",
    "n_beta",
    "n_gamma",
    "h_trace",
    "h_fem",
    "kx",
    "ky",
    "eps_field",
    "ref_kx",
    "ref_ky",
    "tol_linf",
    "tol_l1",
    "div_tol",
    "workers",
    "output",
    "snapshots",
    "vtk",
];

fn tokenize(text: &str) -> Result<HashMap<String, (usize, String)>> {
    let mut map = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ConfigSyntax {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::ConfigSyntax {
                line: line_no,
                msg: format!("unknown key `{key}`"),
            });
        }
        let mut value = value.trim();
        if let Some(inner) = value.strip_prefix('"') {
            value = inner.strip_suffix('"').ok_or_else(|| Error::ConfigSyntax {
                line: line_no,
                msg: format!("unterminated quote in `{key}`"),
            })?;
        }
        if map
            .insert(key.to_string(), (line_no, value.to_string()))
            .is_some()
        {
            return Err(Error::ConfigSyntax {
                line: line_no,
                msg: format!("duplicate key `{key}`"),
            });
        }
    }
    Ok(map)
}

struct Fields(HashMap<String, (usize, String)>);

impl Fields {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.0.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn number<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| Error::ConfigSyntax {
                line,
                msg: format!("`{key}` expects a number, got `{v}`"),
            }),
        }
    }

    fn optional_number(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|_| self.number(key, 0.0)).transpose()
    }

    fn expr(&self, key: &str, default: &str) -> Result<Expression> {
        let (line, src) = self.raw(key).unwrap_or((0, default));
        parse(src).map_err(|e| Error::ConfigSyntax {
            line,
            msg: format!("`{key}`: {e}"),
        })
    }
}

fn positive_count(name: &str, v: usize, min: usize) -> Result<usize> {
    if v < min {
        return Err(Error::Validation(format!(
            "`{name}` must be at least {min}, got {v}"
        )));
    }
    Ok(v)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Validation(format!("`{name}` must be positive, got {v}")));
    }
    Ok(v)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let f = Fields(tokenize(text)?);
        let domain = DomainRect::new(
            f.number("x_min", 0.0)?,
            f.number("x_max", 1.0)?,
            f.number("y_min", 0.0)?,
            f.number("y_max", 1.0)?,
        )?;
        let mut field = VectorFieldSpec::new(f.expr("beta1", "1")?, f.expr("beta2", "0")?);
        field.eps_field = positive("eps_field", f.number("eps_field", DEFAULT_EPS_FIELD)?)?;
        let problem = Problem {
            domain,
            mu: f.expr("mu", "1")?,
            sigma: f.expr("sigma", "0")?,
            field,
            source: f.expr("f", "0")?,
            initial: f.raw("u0").map(|_| f.expr("u0", "0")).transpose()?,
        };

        let params = SchemeParams {
            theta: f.number("theta", 0.5)?,
            dt: f.number("dt", 0.001)?,
            steps: f.number("steps", 50)?,
            eps_stat: f.number("eps_stat", 1e-4)?,
        };
        params.validate()?;

        let mode = match f.raw("mode") {
            None | Some((_, "transient")) => Mode::Transient,
            Some((_, "stationary")) => Mode::Stationary,
            Some((line, other)) => {
                return Err(Error::ConfigSyntax {
                    line,
                    msg: format!("`mode` must be `transient` or `stationary`, got `{other}`"),
                })
            }
        };

        let defaults = Discretization::default();
        let disc = Discretization {
            beta_curves: positive_count("n_beta", f.number("n_beta", defaults.beta_curves)?, 2)?,
            gamma_curves: positive_count("n_gamma", f.number("n_gamma", defaults.gamma_curves)?, 2)?,
            h_trace: f
                .optional_number("h_trace")?
                .map(|h| positive("h_trace", h))
                .transpose()?,
            h_fem: positive("h_fem", f.number("h_fem", defaults.h_fem)?)?,
            kx: positive_count("kx", f.number("kx", defaults.kx)?, 1)?,
            ky: positive_count("ky", f.number("ky", defaults.ky)?, 1)?,
        };

        let vtk = match f.raw("vtk") {
            None | Some((_, "false")) => false,
            Some((_, "true")) => true,
            Some((line, other)) => {
                return Err(Error::ConfigSyntax {
                    line,
                    msg: format!("`vtk` must be `true` or `false`, got `{other}`"),
                })
            }
        };

        Ok(RunConfig {
            problem,
            params,
            mode,
            disc,
            reference_cells: (
                positive_count("ref_kx", f.number("ref_kx", DEFAULT_CELLS)?, 2)?,
                positive_count("ref_ky", f.number("ref_ky", DEFAULT_CELLS)?, 2)?,
            ),
            tol_linf: positive("tol_linf", f.number("tol_linf", 0.10)?)?,
            tol_l1: positive("tol_l1", f.number("tol_l1", 0.05)?)?,
            div_tol: positive("div_tol", f.number("div_tol", 1e-8)?)?,
            workers: positive_count("workers", f.number("workers", 1)?, 1)?,
            output: PathBuf::from(f.raw("output").map_or("out", |(_, v)| v)),
            snapshots: f.number("snapshots", 0)?,
            vtk,
        })
    }
}

/// Reads a configuration file, falling back to the shipped configuration of
/// that name when no such file exists.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
        return RunConfig::parse(&text);
    }
    let name = path.to_str().unwrap_or_default();
    match builtin(name).or_else(|| builtin(name.trim_end_matches(".cfg"))) {
        Some(text) => RunConfig::parse(text),
        None => Err(Error::Validation(format!(
            "config {} not found (shipped configs: paper_experiment, zero_source)",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_experiment_data() {
        let c = load_config(Path::new("paper_experiment")).unwrap();
        let p = &c.problem;
        assert_eq!(p.domain, DomainRect::unit_square());
        for (x, y) in [(0.0, 0.0), (0.3, 0.8), (1.0, 0.25)] {
            assert_eq!(p.mu.evaluate(x, y).unwrap(), 1.0);
            assert_eq!(p.sigma.evaluate(x, y).unwrap(), 1.0);
            assert_eq!(p.source.evaluate(x, y).unwrap(), 5.0);
            assert_eq!(p.field.beta1.evaluate(x, y).unwrap(), -5.0 * (y + 1.0));
            assert_eq!(p.field.beta2.evaluate(x, y).unwrap(), 5.0 * (x + 1.0));
        }
        assert!(p.initial.is_none());
        assert_eq!(c.params.theta, 0.5);
        assert_eq!(c.params.dt, 0.001);
        assert_eq!(c.params.steps, 50);
        assert_eq!(c.mode, Mode::Transient);
        assert_eq!(c.reference_cells, (15, 15));
        assert_eq!((c.tol_linf, c.tol_l1), (0.10, 0.05));
    }

    #[test]
    fn rejects_theta_out_of_range() {
        let err = RunConfig::parse("theta = 1.5").unwrap_err();
        assert!(err.is_validation());
        assert!(err.to_string().contains("theta"));
    }

    #[test]
    fn defaults_applied() {
        let c = RunConfig::parse("mu = 2\n").unwrap();
        assert_eq!(c.disc.kx, 64);
        assert_eq!(c.disc.ky, 64);
        assert_eq!(c.disc.beta_curves, 129);
        assert_eq!(c.workers, 1);
        assert!(c.disc.h_trace.is_none());
    }

    #[test]
    fn syntax_errors_name_the_line_and_field() {
        match RunConfig::parse("mu = 1\nbeta1 = \"-5*(y+\"\n") {
            Err(Error::ConfigSyntax { line, msg }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("beta1"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            RunConfig::parse("colour = red"),
            Err(Error::ConfigSyntax { line: 1, .. })
        ));
        assert!(matches!(
            RunConfig::parse("mu = 1\nmu = 2"),
            Err(Error::ConfigSyntax { line: 2, .. })
        ));
        assert!(matches!(
            RunConfig::parse("kx = -3"),
            Err(Error::ConfigSyntax { .. })
        ));
        assert!(RunConfig::parse("kx = 0").unwrap_err().is_validation());
        assert!(RunConfig::parse("x_min = 2").unwrap_err().is_validation());
    }

    #[test]
    fn missing_config_is_validation_error() {
        let err = load_config(Path::new("/nonexistent/run.cfg")).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn zero_source_config() {
        let c = load_config(Path::new("zero_source")).unwrap();
        assert_eq!(c.problem.source.evaluate(0.4, 0.4).unwrap(), 0.0);
        assert_eq!(
            c.problem.initial.as_ref().unwrap().evaluate(0.4, 0.4).unwrap(),
            0.0
        );
    }
}
