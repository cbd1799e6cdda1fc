//! Run configuration shared by the CLI and the C interface.

use std::path::PathBuf;
use std::time::Duration;

use crate::engine::Config;
use crate::qgen::QGenMode;
use crate::smt::{find_solver, DomainBound, EnumerationSolver, ExternalSolver, SmtError, Solver};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("invalid backend `{0}` (expected external[:PATH] or enumeration[:LO..HI])")]
    Backend(String),
    #[error("{0} must be positive")]
    NotPositive(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    /// An SMT-LIB2 solver process; `None` means discover one.
    External { path: Option<PathBuf>, flags: Vec<String> },
    /// Brute force over a bounded domain (only sound for bounded problems).
    Enumeration(DomainBound),
}

impl std::str::FromStr for Backend {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        match (kind, arg) {
            ("external", None) => Ok(Backend::External { path: None, flags: Vec::new() }),
            ("external", Some(a)) => {
                let mut parts = a.split_whitespace();
                let path = parts.next().ok_or_else(|| ConfigError::Backend(s.into()))?;
                Ok(Backend::External { path: Some(path.into()), flags: parts.map(String::from).collect() })
            }
            ("enumeration", None) => Ok(Backend::Enumeration(DomainBound::default())),
            ("enumeration", Some(a)) => {
                let (lo, hi) = a.split_once("..").ok_or_else(|| ConfigError::Backend(s.into()))?;
                let lo: i64 = lo.parse().map_err(|_| ConfigError::Backend(s.into()))?;
                let hi: i64 = hi.parse().map_err(|_| ConfigError::Backend(s.into()))?;
                if lo > hi {
                    return Err(ConfigError::Backend(s.into()));
                }
                Ok(Backend::Enumeration(DomainBound { ints: lo..=hi, values: lo..=hi, ..DomainBound::default() }))
            }
            _ => Err(ConfigError::Backend(s.into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub max_depth: usize,
    pub query_timeout: Duration,
    pub qgen: QGenMode,
    pub max_instances: usize,
    pub push_pobs: bool,
    pub backend: Backend,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_depth: 32,
            query_timeout: Duration::from_secs(10),
            qgen: QGenMode::Off,
            max_instances: 64,
            push_pobs: false,
            backend: Backend::External { path: None, flags: Vec::new() },
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_depth == 0 {
            return Err(ConfigError::NotPositive("max depth"));
        }
        if self.query_timeout.is_zero() {
            return Err(ConfigError::NotPositive("query timeout"));
        }
        if self.max_instances == 0 {
            return Err(ConfigError::NotPositive("max instances"));
        }
        Ok(())
    }

    pub fn engine_config(&self) -> Config {
        Config {
            max_depth: self.max_depth,
            qgen: self.qgen,
            max_instances: self.max_instances,
            push_pobs: self.push_pobs,
            ..Config::default()
        }
    }

    pub fn make_solver(&self) -> Result<Box<dyn Solver>, SmtError> {
        Ok(match &self.backend {
            Backend::External { path, flags } => {
                let path = match path {
                    Some(p) => p.clone(),
                    None => find_solver()?,
                };
                Box::new(ExternalSolver::with_flags(path, self.query_timeout, flags)?)
            }
            Backend::Enumeration(b) => Box::new(EnumerationSolver::new(b.clone())),
        })
    }
}
