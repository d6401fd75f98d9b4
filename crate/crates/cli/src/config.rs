use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use spinqaoa_core::{Ensemble, Family};

use crate::CliError;

/// Every flag of every subcommand; a JSON config file uses the same field
/// names plus `command`.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Circuit depth.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,

    /// Interaction order of a pure model.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,

    /// Mixture weights c_1, c_2, ... (repeatable or comma separated).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub cq: Vec<f64>,

    /// `gaussian` or `er:<d>`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,

    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gamma: Vec<f64>,

    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<f64>,

    /// Optimize the angles before evaluating.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub optimize: bool,

    /// Optimize every depth from 1 to p, warm-starting each from the last.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub ladder: bool,

    /// Number of optimizer starts.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub starts: Option<usize>,

    /// System sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<u32>,

    /// Average degrees for the universality sweep.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub d_ladder: Vec<f64>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// Work cap for enumeration-based computations.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget_ops: Option<f64>,

    /// Use the direct-enumeration solver instead of the transform solver.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub reference: bool,

    /// Plant the odd kernel h(λ) = λ in `wellplayed`.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub odd: bool,

    /// Canonical polynomial (JSON) to check in `wellplayed`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poly: Option<PathBuf>,

    /// Problem file for `genmulti`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<PathBuf>,

    /// Also write the records as a CSV table.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,

    /// JSON-lines destination; stdout when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Flags set on the command line win over the file.
    pub fn merged_over(self, file: RunConfig) -> RunConfig {
        fn vec<T>(a: Vec<T>, b: Vec<T>) -> Vec<T> {
            if a.is_empty() {
                b
            } else {
                a
            }
        }
        RunConfig {
            command: self.command.or(file.command),
            p: self.p.or(file.p),
            q: self.q.or(file.q),
            cq: vec(self.cq, file.cq),
            family: self.family.or(file.family),
            gamma: vec(self.gamma, file.gamma),
            beta: vec(self.beta, file.beta),
            optimize: self.optimize || file.optimize,
            ladder: self.ladder || file.ladder,
            starts: self.starts.or(file.starts),
            n: vec(self.n, file.n),
            d_ladder: vec(self.d_ladder, file.d_ladder),
            instances: self.instances.or(file.instances),
            seed: self.seed.or(file.seed),
            budget_ops: self.budget_ops.or(file.budget_ops),
            reference: self.reference || file.reference,
            odd: self.odd || file.odd,
            poly: self.poly.or(file.poly),
            problem: self.problem.or(file.problem),
            csv: self.csv.or(file.csv),
            out: self.out.or(file.out),
        }
    }

    pub fn require_p(&self) -> Result<usize, CliError> {
        match self.p {
            Some(0) => Err(CliError::Usage("--p must be positive".into())),
            Some(p) => Ok(p),
            None if !self.gamma.is_empty() => Ok(self.gamma.len()),
            None => Err(CliError::Usage("--p is required".into())),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn family(&self) -> Result<Family, CliError> {
        match &self.family {
            None => Ok(Family::Gaussian),
            Some(s) => s.parse().map_err(|e: spinqaoa_core::Error| CliError::Usage(e.to_string())),
        }
    }

    /// `--cq` gives a mixture over orders `1..=len`; otherwise a pure model
    /// of order `--q` (default 2) with unit weight.
    pub fn ensemble(&self) -> Result<Ensemble, CliError> {
        let family = self.family()?;
        if self.cq.is_empty() {
            let q = self.q.unwrap_or(2);
            if q == 0 {
                return Err(CliError::Usage("--q must be positive".into()));
            }
            let mut c = vec![0.0; q];
            c[q - 1] = 1.0;
            return Ensemble::new(c, vec![family; q]).map_err(CliError::from_setup);
        }
        if self.q.is_some_and(|q| q != self.cq.len()) {
            return Err(CliError::Usage(format!("--q {} disagrees with {} --cq weights", self.q.unwrap(), self.cq.len())));
        }
        Ensemble::new(self.cq.clone(), vec![family; self.cq.len()]).map_err(CliError::from_setup)
    }

    /// Explicit angles, checked against `p`.
    pub fn angles(&self, p: usize) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        if self.gamma.len() != p || self.beta.len() != p {
            return Err(CliError::Usage(format!("need {p} gammas and {p} betas, got {} and {}", self.gamma.len(), self.beta.len())));
        }
        Ok((self.gamma.clone(), self.beta.clone()))
    }

    pub fn budget(&self, default: f64) -> Result<f64, CliError> {
        match self.budget_ops {
            Some(b) if b.is_nan() || b <= 0.0 => Err(CliError::Usage("--budget-ops must be positive".into())),
            Some(b) => Ok(b),
            None => Ok(default),
        }
    }
}
