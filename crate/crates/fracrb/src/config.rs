//! Run configuration: a flat key-value file with two built-in presets and
//! command-line overrides.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{Preconditioner, RhsDescription, SolverOptions};
use crate::model_io::rhs_from_string;
use crate::param::Subdomain;
use crate::rbm::{FirstSnapshot, GreedyMode, GreedyOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Laptop-sized runs: `n = 16`, `M = 40`, 257-point grids.
    Desk,
    /// Production scale: 5000 elements, `M = 158`, 1025-point grids.
    Paper,
}

impl Preset {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }
}

/// All tunables of the experiment drivers.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: Preset,
    /// Square grid resolution (2 n^2 triangles).
    pub n: usize,
    /// Extension-direction subintervals.
    pub m_fe: usize,
    pub gamma_d1: f64,
    pub gamma_d2: f64,
    pub y_plus: f64,
    /// Interpolation grid refinement relative to the FE partition.
    pub eim_refine: usize,
    pub eim_s_points: usize,
    pub eim_q_max: usize,
    pub eim_tol: f64,
    /// Training points in `s` per subdomain (one-parameter problem).
    pub train_s_points: usize,
    /// Per-axis training points for the two-parameter tensor grid.
    pub tensor_points: usize,
    /// Test points in `s` per subdomain including the endpoints that are
    /// dropped to keep the set disjoint from training.
    pub test_points: usize,
    /// Per-axis test points for the two-parameter problem (endpoints
    /// dropped likewise).
    pub test_tensor_points: usize,
    pub n_max: usize,
    pub greedy_tol: f64,
    pub greedy_mode: GreedyMode,
    pub random_first: bool,
    pub with_certification: bool,
    pub with_scm: bool,
    pub scm_constraints: usize,
    /// Retained sine modes per direction in the spectral oracle.
    pub modes_j: usize,
    pub rhs: RhsDescription,
    pub solver_tol: f64,
    pub solver_max_iter_factor: f64,
    pub solver_precond: Preconditioner,
    pub seed: u64,
    pub threads: usize,
    pub out_dir: String,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Desk => RunConfig {
                preset,
                n: 16,
                m_fe: 40,
                gamma_d1: 6.0,
                gamma_d2: 2.0,
                y_plus: 2.233,
                eim_refine: 16,
                eim_s_points: 257,
                eim_q_max: 25,
                eim_tol: 1e-12,
                train_s_points: 257,
                tensor_points: 33,
                test_points: 80,
                test_tensor_points: 12,
                n_max: 15,
                greedy_tol: 0.0,
                greedy_mode: GreedyMode::ResidualFree,
                random_first: false,
                with_certification: true,
                with_scm: true,
                scm_constraints: 12,
                modes_j: 20,
                rhs: RhsDescription::Example1,
                solver_tol: 1e-10,
                solver_max_iter_factor: 20.0,
                solver_precond: Preconditioner::Tensor,
                seed: 42,
                threads: 0,
                out_dir: "out".to_string(),
            },
            Preset::Paper => RunConfig {
                n: 50,
                m_fe: 158,
                eim_s_points: 1025,
                train_s_points: 1025,
                tensor_points: 257,
                test_points: 314,
                test_tensor_points: 32,
                modes_j: 32,
                ..RunConfig {
                    preset,
                    ..RunConfig::preset(Preset::Desk)
                }
            },
        }
    }

    pub fn gamma(&self, subdomain: Subdomain) -> f64 {
        match subdomain {
            Subdomain::D1 => self.gamma_d1,
            Subdomain::D2 => self.gamma_d2,
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.solver_tol,
            max_iter_factor: self.solver_max_iter_factor,
            preconditioner: self.solver_precond,
        }
    }

    pub fn greedy_options(&self) -> GreedyOptions {
        GreedyOptions {
            n_max: self.n_max,
            tol: self.greedy_tol,
            mode: self.greedy_mode,
            first: if self.random_first {
                FirstSnapshot::SeededRandom(self.seed)
            } else {
                FirstSnapshot::Midpoint
            },
            with_certification: self.with_certification,
        }
    }

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |key: &str, value: &str| {
            Error::Config(format!("invalid value `{value}` for key `{key}`"))
        };
        macro_rules! parse {
            ($field:expr, $key:expr, $value:expr) => {
                $field = $value.parse().map_err(|_| bad($key, $value))?
            };
        }
        match key {
            "preset" => *self = RunConfig::preset(Preset::parse(value)?),
            "n" => parse!(self.n, key, value),
            "m_fe" => parse!(self.m_fe, key, value),
            "gamma_d1" => parse!(self.gamma_d1, key, value),
            "gamma_d2" => parse!(self.gamma_d2, key, value),
            "y_plus" => parse!(self.y_plus, key, value),
            "eim_refine" => parse!(self.eim_refine, key, value),
            "eim_s_points" => parse!(self.eim_s_points, key, value),
            "eim_q_max" => parse!(self.eim_q_max, key, value),
            "eim_tol" => parse!(self.eim_tol, key, value),
            "train_s_points" => parse!(self.train_s_points, key, value),
            "tensor_points" => parse!(self.tensor_points, key, value),
            "test_points" => parse!(self.test_points, key, value),
            "test_tensor_points" => parse!(self.test_tensor_points, key, value),
            "n_max" => parse!(self.n_max, key, value),
            "greedy_tol" => parse!(self.greedy_tol, key, value),
            "greedy_mode" => {
                self.greedy_mode = match value {
                    "residual_free" => GreedyMode::ResidualFree,
                    "residual_based" => GreedyMode::ResidualBased,
                    _ => return Err(bad(key, value)),
                }
            }
            "random_first" => parse!(self.random_first, key, value),
            "with_certification" => parse!(self.with_certification, key, value),
            "with_scm" => parse!(self.with_scm, key, value),
            "scm_constraints" => parse!(self.scm_constraints, key, value),
            "modes_j" => parse!(self.modes_j, key, value),
            "rhs" => self.rhs = rhs_from_string(value).map_err(|_| bad(key, value))?,
            "solver_tol" => parse!(self.solver_tol, key, value),
            "solver_max_iter_factor" => parse!(self.solver_max_iter_factor, key, value),
            "solver_precond" => {
                self.solver_precond = match value {
                    "tensor" => Preconditioner::Tensor,
                    "jacobi" => Preconditioner::Jacobi,
                    _ => return Err(bad(key, value)),
                }
            }
            "seed" => parse!(self.seed, key, value),
            "threads" => parse!(self.threads, key, value),
            "out_dir" => self.out_dir = value.to_string(),
            other => return Err(Error::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Reads a key-value file (`#` comments, blank lines allowed). A
    /// `preset=` line resets every key it precedes, so it should come first.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config = RunConfig::preset(Preset::Desk);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config("n must be at least 2".into()));
        }
        if self.m_fe < 1 {
            return Err(Error::Config("m_fe must be at least 1".into()));
        }
        if self.gamma_d1 <= 0.0 || self.gamma_d2 <= 0.0 || self.y_plus <= 0.0 {
            return Err(Error::Config(
                "grading exponents and y_plus must be positive".into(),
            ));
        }
        if self.eim_q_max == 0 || self.eim_s_points < 2 || self.eim_refine == 0 {
            return Err(Error::Config("interpolation grids are degenerate".into()));
        }
        if self.train_s_points < 2 || self.test_points < 3 {
            return Err(Error::Config("training/test grids are degenerate".into()));
        }
        if self.n_max == 0 {
            return Err(Error::Config("n_max must be positive".into()));
        }
        Ok(())
    }

    /// Canonical serialization (sorted keys), used for hashing and echoed
    /// into output metadata.
    pub fn canonical(&self) -> String {
        let mut map = BTreeMap::new();
        map.insert("n", self.n.to_string());
        map.insert("m_fe", self.m_fe.to_string());
        map.insert("gamma_d1", self.gamma_d1.to_string());
        map.insert("gamma_d2", self.gamma_d2.to_string());
        map.insert("y_plus", self.y_plus.to_string());
        map.insert("eim_refine", self.eim_refine.to_string());
        map.insert("eim_s_points", self.eim_s_points.to_string());
        map.insert("eim_q_max", self.eim_q_max.to_string());
        map.insert("eim_tol", self.eim_tol.to_string());
        map.insert("train_s_points", self.train_s_points.to_string());
        map.insert("tensor_points", self.tensor_points.to_string());
        map.insert("test_points", self.test_points.to_string());
        map.insert("test_tensor_points", self.test_tensor_points.to_string());
        map.insert("n_max", self.n_max.to_string());
        map.insert("greedy_tol", self.greedy_tol.to_string());
        map.insert(
            "greedy_mode",
            match self.greedy_mode {
                GreedyMode::ResidualFree => "residual_free".to_string(),
                GreedyMode::ResidualBased => "residual_based".to_string(),
            },
        );
        map.insert("random_first", self.random_first.to_string());
        map.insert("with_certification", self.with_certification.to_string());
        map.insert("with_scm", self.with_scm.to_string());
        map.insert("scm_constraints", self.scm_constraints.to_string());
        map.insert("modes_j", self.modes_j.to_string());
        map.insert(
            "rhs",
            match &self.rhs {
                RhsDescription::Example1 => "example1".to_string(),
                RhsDescription::Example2 => "example2".to_string(),
                RhsDescription::Modal(modes) => format!(
                    "modal:{}",
                    modes
                        .iter()
                        .map(|(j, k, c)| format!("{j},{k},{c}"))
                        .collect::<Vec<_>>()
                        .join(";")
                ),
            },
        );
        map.insert("solver_tol", self.solver_tol.to_string());
        map.insert(
            "solver_max_iter_factor",
            self.solver_max_iter_factor.to_string(),
        );
        map.insert(
            "solver_precond",
            match self.solver_precond {
                Preconditioner::Tensor => "tensor".to_string(),
                Preconditioner::Jacobi => "jacobi".to_string(),
            },
        );
        map.insert("seed", self.seed.to_string());
        let mut out = String::new();
        for (k, v) in map {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Hash of the canonical configuration (thread count and output paths
    /// excluded: they do not affect the numbers).
    pub fn hash(&self) -> u64 {
        let text = self.canonical();
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        for &b in text.as_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100_0000_01b3);
        }
        hash
    }
}
