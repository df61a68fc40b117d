//! Set arguments: the core mini-language plus `file:PATH`.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use steinhaus_core::{FactorTable, IndexSet, SetSpec};

use crate::LabError;

#[derive(Debug, Clone, PartialEq)]
pub enum SetArg {
    Builtin(SetSpec),
    /// Newline-separated integers in `[1, N]`; blank lines and `#` comments
    /// are skipped.
    File(PathBuf),
}

impl FromStr for SetArg {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, LabError> {
        match s.strip_prefix("file:") {
            Some("") => Err(LabError::Usage("invalid set spec `file:`: missing PATH".into())),
            Some(path) => Ok(SetArg::File(PathBuf::from(path))),
            None => s.parse().map(SetArg::Builtin).map_err(|e| LabError::Usage(e.to_string())),
        }
    }
}

impl fmt::Display for SetArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetArg::Builtin(spec) => spec.fmt(f),
            SetArg::File(path) => write!(f, "file:{}", path.display()),
        }
    }
}

impl SetArg {
    pub fn build(&self, table: &FactorTable) -> Result<IndexSet, LabError> {
        match self {
            SetArg::Builtin(spec) => Ok(spec.build(table)?),
            SetArg::File(path) => {
                let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
                let mut members = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let line = line.split('#').next().unwrap_or("").trim();
                    if line.is_empty() {
                        continue;
                    }
                    let n = line.parse::<u32>().map_err(|_| LabError::Schema {
                        path: path.clone(),
                        message: format!("line {}: `{line}` is not a positive integer", i + 1),
                    })?;
                    members.push(n);
                }
                let limit = table.limit();
                let density = {
                    let mut distinct = members.clone();
                    distinct.sort_unstable();
                    distinct.dedup();
                    distinct.len() as f64 / limit as f64
                };
                IndexSet::from_members(limit, members, density.min(1.0)).map_err(|e| {
                    LabError::Schema { path: path.clone(), message: e.to_string() }
                })
            }
        }
    }
}
