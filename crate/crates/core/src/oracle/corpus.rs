//! Benchmark directories: `name.tsys` problem files with `name.expected`
//! sidecars holding `safe`, `unsafe` or `unsafe <k>`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::frontend::{ProblemError, SafetyProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    Safe,
    /// Unsafe, optionally with the length of a shortest counterexample.
    Unsafe(Option<usize>),
    Unknown,
}

impl Expected {
    pub fn parse(s: &str) -> Expected {
        let mut words = s.split_whitespace();
        match (words.next(), words.next()) {
            (Some("safe"), _) => Expected::Safe,
            (Some("unsafe"), k) => Expected::Unsafe(k.and_then(|k| k.parse().ok())),
            _ => Expected::Unknown,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    pub problem: SafetyProblem,
    pub expected: Expected,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Problem(PathBuf, ProblemError),
}

/// All `.tsys` files of `dir`, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let rd = fs::read_dir(dir).map_err(|e| CorpusError::Io(dir.to_path_buf(), e))?;
    let mut paths: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "tsys"))
        .collect();
    paths.sort();
    let mut out = Vec::new();
    for path in paths {
        let src = fs::read_to_string(&path).map_err(|e| CorpusError::Io(path.clone(), e))?;
        let problem = SafetyProblem::parse(&src).map_err(|e| CorpusError::Problem(path.clone(), e))?;
        let expected = fs::read_to_string(path.with_extension("expected")).map(|s| Expected::parse(&s)).unwrap_or(Expected::Unknown);
        let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        out.push(CorpusEntry { name, path, problem, expected });
    }
    Ok(out)
}
