use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Classify,
    Factorize,
    Decompress,
    Als,
    Dmrg,
    Stats,
    Rrdeg,
    Enumerate,
    Realcount,
    Tables,
}

impl ExperimentKind {
    fn randomized(self) -> bool {
        !matches!(
            self,
            ExperimentKind::Classify | ExperimentKind::Factorize | ExperimentKind::Decompress
        )
    }
}

/// Where the Hamiltonian comes from. Random matrices have dimension `prod k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum HamSource {
    Random,
    File { path: PathBuf },
    SecondQuantized { path: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableScale {
    Small,
    Stretch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub k: Option<Vec<usize>>,
    pub r: Option<Vec<usize>>,
    pub ham: HamSource,
    pub seed: Option<u64>,
    /// Tensor or train JSON for factorize / decompress.
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub budget_secs: Option<u64>,
    /// Restarts for `stats`.
    pub trials: usize,
    /// Random matrices for `realcount`.
    pub samples: usize,
    /// `rnc`, `p1xp1` or `tt` for `realcount`.
    pub family: Option<String>,
    pub d: Option<usize>,
    /// Stop monodromy at this many sphere solutions.
    pub target: Option<usize>,
    pub scale: TableScale,
    pub max_sweeps: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentConfig {
            kind,
            k: None,
            r: None,
            ham: HamSource::Random,
            seed: None,
            input: None,
            out: None,
            threads: None,
            budget_secs: None,
            trials: 100,
            samples: 200,
            family: None,
            d: None,
            target: None,
            scale: TableScale::Small,
            max_sweeps: None,
        }
    }

    pub fn k(&self) -> Result<&[usize], CliError> {
        self.k
            .as_deref()
            .ok_or_else(|| CliError::config("k", "required for this experiment"))
    }

    pub fn r(&self) -> Result<&[usize], CliError> {
        self.r
            .as_deref()
            .ok_or_else(|| CliError::config("r", "required for this experiment"))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        use ExperimentKind::*;
        if let Some(k) = &self.k {
            if k.is_empty() || k.contains(&0) {
                return Err(CliError::config(
                    "k",
                    "physical dimensions must be a nonempty list of positive integers",
                ));
            }
        }
        if let Some(r) = &self.r {
            if r.contains(&0) {
                return Err(CliError::config("r", "bond dimensions must be positive"));
            }
            if let Some(k) = &self.k {
                if r.len() + 1 != k.len() {
                    return Err(CliError::config(
                        "r",
                        format!(
                            "expected {} bond dimensions for {} physical dimensions",
                            k.len() - 1,
                            k.len()
                        ),
                    ));
                }
            }
        }
        if self.kind.randomized() && self.seed.is_none() {
            return Err(CliError::config(
                "seed",
                "a seed is required for randomized experiments",
            ));
        }
        if self.threads == Some(0) {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        if self.budget_secs == Some(0) {
            return Err(CliError::config("budget", "must be positive"));
        }
        match &self.ham {
            HamSource::File { path } | HamSource::SecondQuantized { path } if !path.exists() => {
                return Err(CliError::config(
                    "ham",
                    format!("file {} does not exist", path.display()),
                ));
            }
            _ => {}
        }
        if let Some(p) = &self.input {
            if !p.exists() {
                return Err(CliError::config(
                    "input",
                    format!("file {} does not exist", p.display()),
                ));
            }
        }
        match self.kind {
            Classify => {
                self.k()?;
                self.r()?;
            }
            Factorize => {
                self.r()?;
                if self.input.is_none() {
                    return Err(CliError::config("input", "a tensor JSON file is required"));
                }
            }
            Decompress => {
                if self.input.is_none() {
                    return Err(CliError::config("input", "a train JSON file is required"));
                }
            }
            Als | Stats | Rrdeg | Enumerate => {
                self.k()?;
                self.r()?;
            }
            Dmrg => {
                self.k()?;
            }
            Realcount => match self.family.as_deref() {
                Some("rnc") => {
                    if !self.d.is_some_and(|d| d >= 1) {
                        return Err(CliError::config("d", "the rnc family needs --d >= 1"));
                    }
                }
                Some("p1xp1") => {}
                Some("tt") => {
                    self.k()?;
                    self.r()?;
                }
                Some(other) => {
                    return Err(CliError::config(
                        "family",
                        format!("unknown family `{other}`"),
                    ))
                }
                None => {
                    return Err(CliError::config(
                        "family",
                        "one of rnc, p1xp1, tt is required",
                    ))
                }
            },
            Tables => {}
        }
        if matches!(self.kind, Stats) && self.trials == 0 {
            return Err(CliError::config("trials", "must be at least 1"));
        }
        if matches!(self.kind, Realcount) && self.samples == 0 {
            return Err(CliError::config("samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Parses `2,2,2` into a list.
pub fn parse_list(s: &str) -> Result<Vec<usize>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists() {
        assert_eq!(parse_list("2,3, 4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_list("").unwrap(), Vec::<usize>::new());
        assert!(parse_list("2,x").is_err());
    }

    #[test]
    fn field_level_errors() {
        let mut c = ExperimentConfig::new(ExperimentKind::Rrdeg);
        c.k = Some(vec![2, 2]);
        c.r = Some(vec![1]);
        let err = c.validate().unwrap_err();
        assert!(matches!(err, CliError::Config { ref field, .. } if field == "seed"));
        c.seed = Some(1);
        c.validate().unwrap();
        c.r = Some(vec![1, 1]);
        assert!(
            matches!(c.validate().unwrap_err(), CliError::Config { ref field, .. } if field == "r")
        );
        let mut c = ExperimentConfig::new(ExperimentKind::Als);
        c.seed = Some(0);
        c.k = Some(vec![2]);
        c.r = Some(vec![]);
        c.ham = HamSource::File {
            path: "/nonexistent/h.json".into(),
        };
        assert!(
            matches!(c.validate().unwrap_err(), CliError::Config { ref field, .. } if field == "ham")
        );
    }
}
