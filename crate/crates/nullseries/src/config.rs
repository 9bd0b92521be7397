use std::path::{Path, PathBuf};

use nullseries_core::pla::{DepthPolicy, PlaConfig};
use nullseries_core::uniqueness::{Arc, BoundaryTarget, Domain, PrivalovDomain};
use nullseries_core::weights::{derive_omega2, WeightSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Numerical tolerances recorded with every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub triviality: f64,
    pub c_hat_min: f64,
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { triviality: 1e-9, c_hat_min: 0.05, quadrature: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega: WeightSpec,
    pub n_max: usize,
    pub grid_exp: u32,
    pub seed: u64,
    pub m_max: usize,
    pub tolerances: Tolerances,
    pub out: PathBuf,
    pub moment_trials: usize,
    pub beta: f64,
    pub depth_constant: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega: WeightSpec::t_log2(),
            n_max: 10,
            grid_exp: 18,
            seed: 0,
            m_max: 1 << 14,
            tolerances: Tolerances::default(),
            out: PathBuf::from("out"),
            moment_trials: 32,
            beta: 32.0,
            depth_constant: 2.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn grid(&self) -> usize {
        1usize << self.grid_exp
    }

    pub fn run_id(&self) -> String {
        format!("seed{}-n{}-g{}", self.seed, self.n_max, self.grid_exp)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out.join(self.run_id())
    }

    pub fn pla(&self) -> PlaConfig {
        PlaConfig {
            beta: self.beta,
            depth_constant: self.depth_constant,
            policy: DepthPolicy::Capped,
            triviality_tol: self.tolerances.triviality,
        }
    }

    /// Admission rules checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        derive_omega2(&self.omega).map_err(|e| CliError::Config(format!("omega: {e}")))?;
        if self.n_max == 0 || self.n_max > 16 {
            return Err(CliError::Config(format!("n_max = {} outside 1..=16", self.n_max)));
        }
        if !(8..=22).contains(&self.grid_exp) {
            return Err(CliError::Config(format!("grid_exp = {} outside 8..=22", self.grid_exp)));
        }
        if self.m_max == 0 {
            return Err(CliError::Config("m_max must be positive".into()));
        }
        if !(self.beta > 0.0 && self.depth_constant > 0.0) {
            return Err(CliError::Config("beta and depth_constant must be positive".into()));
        }
        Ok(())
    }
}

/// Domain description file for `hm`.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainFile {
    Disk,
    Annulus { inner: f64 },
    Privalov { arcs: Vec<Arc>, inner: Option<f64> },
}

impl DomainFile {
    pub fn load(path: &Path) -> Result<Domain, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let d: DomainFile =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        match d {
            DomainFile::Disk => Ok(Domain::Disk),
            DomainFile::Annulus { inner } if (0.0..1.0).contains(&inner) => Ok(Domain::Annulus { inner }),
            DomainFile::Annulus { inner } => {
                Err(CliError::Config(format!("annulus inner radius {inner} outside [0, 1)")))
            }
            DomainFile::Privalov { arcs, inner } => Ok(Domain::Privalov(
                PrivalovDomain::new(arcs, inner).map_err(|e| CliError::Config(format!("domain: {e}")))?,
            )),
        }
    }
}

/// all | unit | inner | privalov | arc:START,LEN
pub fn parse_target(s: &str) -> Result<BoundaryTarget, String> {
    match s {
        "all" => Ok(BoundaryTarget::All),
        "unit" => Ok(BoundaryTarget::UnitCircle),
        "inner" => Ok(BoundaryTarget::InnerCircle),
        "privalov" => Ok(BoundaryTarget::PrivalovCircles),
        _ => {
            let rest = s.strip_prefix("arc:").ok_or_else(|| format!("unknown target '{s}'"))?;
            let (a, b) = parse_pair(rest)?;
            Ok(BoundaryTarget::UnitArc { arc: Arc { start: a, len: b } })
        }
    }
}

pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'x,y', got '{s}'"))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    Ok((p(a)?, p(b)?))
}

pub fn parse_omega(s: &str) -> Result<WeightSpec, String> {
    match s {
        "t_log2" => Ok(WeightSpec::t_log2()),
        _ => {
            if let Some(p) = s.strip_prefix("power:") {
                let p: f64 = p.parse().map_err(|e| format!("'{p}': {e}"))?;
                return WeightSpec::power(p).map_err(|e| e.to_string());
            }
            if let Some(p) = s.strip_prefix("t_log_pow:") {
                let p: f64 = p.parse().map_err(|e| format!("'{p}': {e}"))?;
                return WeightSpec::t_log_pow(p).map_err(|e| e.to_string());
            }
            serde_json::from_str(s).map_err(|e| format!("omega '{s}': {e}"))
        }
    }
}
