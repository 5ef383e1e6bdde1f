//! Run configuration: a JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use choquard_core::grid::{DEFAULT_NODES, DEFAULT_R_MAX, DEFAULT_R_MIN};
use choquard_core::solver::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use choquard_core::{Error, ProblemParams, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            r_min: DEFAULT_R_MIN,
            r_max: DEFAULT_R_MAX,
            n: DEFAULT_NODES,
        }
    }
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("choquard-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ProblemParams,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Values given on the command line; each one present replaces the file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dim: Option<u32>,
    pub alpha: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub k: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub n: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Builds a configuration from an optional file and the overrides. Without
    /// a file, `N`, `alpha`, `p` and `q` must all be given as flags.
    pub fn resolve(file: Option<&Path>, o: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(path) => Self::load(path)?,
            None => {
                let (Some(dim), Some(alpha), Some(p), Some(q)) = (o.dim, o.alpha, o.p, o.q) else {
                    return Err(Error::Configuration(
                        "give --config or all of --dim, --alpha, --p and --q".into(),
                    ));
                };
                Self {
                    params: ProblemParams {
                        dim,
                        alpha,
                        p,
                        q,
                        k: 0.0,
                    },
                    grid: GridConfig::default(),
                    tol: DEFAULT_TOL,
                    max_iter: DEFAULT_MAX_ITER,
                    seed: 0,
                    output_dir: default_output_dir(),
                }
            }
        };
        let pr = &mut cfg.params;
        pr.dim = o.dim.unwrap_or(pr.dim);
        pr.alpha = o.alpha.unwrap_or(pr.alpha);
        pr.p = o.p.unwrap_or(pr.p);
        pr.q = o.q.unwrap_or(pr.q);
        pr.k = o.k.unwrap_or(pr.k);
        cfg.grid.r_min = o.r_min.unwrap_or(cfg.grid.r_min);
        cfg.grid.r_max = o.r_max.unwrap_or(cfg.grid.r_max);
        cfg.grid.n = o.n.unwrap_or(cfg.grid.n);
        cfg.tol = o.tol.unwrap_or(cfg.tol);
        cfg.max_iter = o.max_iter.unwrap_or(cfg.max_iter);
        cfg.seed = o.seed.unwrap_or(cfg.seed);
        if let Some(dir) = &o.output_dir {
            cfg.output_dir = dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Domain(format!("tol = {} must lie in (0, 1)", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be positive".into()));
        }
        let g = &self.grid;
        if !(g.r_min > 0.0 && g.r_max > g.r_min && g.n >= 16) {
            return Err(Error::Domain(format!(
                "grid needs 0 < r_min < r_max and n ≥ 16; got ({}, {}, {})",
                g.r_min, g.r_max, g.n
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = r#"{"params": {"N": 3, "alpha": 2, "p": 2, "q": 0.5}, "tolerance": 1e-6}"#;
        assert!(RunConfig::from_json(bad).is_err());
        let bad = r#"{"params": {"N": 3, "alpha": 2, "p": 2, "q": 0.5, "kk": 1}}"#;
        assert!(RunConfig::from_json(bad).is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::from_json(r#"{"params": {"N": 3, "alpha": 2, "p": 2, "q": 0.5}}"#).unwrap();
        assert_eq!(cfg.grid, GridConfig::default());
        assert_eq!(cfg.tol, DEFAULT_TOL);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"params": {"N": 3, "alpha": 2, "p": 2, "q": 0.5, "k": 0.1}, "tol": 1e-6}"#)
            .unwrap();
        let o = Overrides {
            k: Some(0.2),
            n: Some(512),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Some(&path), &o).unwrap();
        assert_eq!(cfg.params.k, 0.2);
        assert_eq!(cfg.grid.n, 512);
        assert_eq!(cfg.tol, 1e-6);
    }

    #[test]
    fn flags_alone_need_the_four_exponents() {
        let o = Overrides {
            dim: Some(3),
            alpha: Some(2.0),
            ..Default::default()
        };
        assert!(RunConfig::resolve(None, &o).is_err());
    }
}
