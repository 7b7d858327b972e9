//! Experiment configuration: defaults, a key=value config-file format,
//! and merging of command-line overrides on top of file values.

use std::path::PathBuf;
use std::str::FromStr;

use ced_core::policy::{PolicyKind, SelectionMode};

use crate::HarnessError;

pub const DEFAULT_TRIALS: usize = 60;
pub const DEFAULT_SAMPLES: usize = 1_000;
pub const DEFAULT_SPARSE_C: f64 = 2.0;

/// How many interventions a run may spend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetRule {
    /// Budget equals the number of variables of the instance.
    MatchNodes,
    Fixed(usize),
}

impl BudgetRule {
    pub fn for_nodes(&self, n: usize) -> usize {
        match *self {
            BudgetRule::MatchNodes => n,
            BudgetRule::Fixed(k) => k,
        }
    }
}

impl FromStr for BudgetRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "n" {
            return Ok(BudgetRule::MatchNodes);
        }
        match s.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(BudgetRule::Fixed(k)),
            _ => Err(format!("budget must be \"n\" or a positive integer, got {s:?}")),
        }
    }
}

/// How instance graphs are wired.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeMode {
    /// Edge probability c/n: expected in-degree stays at c as n grows.
    Sparse { c: f64 },
    /// Fixed edge probability, independent of n.
    Dense { p: f64 },
}

impl EdgeMode {
    pub fn probability(&self, n: usize) -> f64 {
        match *self {
            EdgeMode::Sparse { c } => c / n as f64,
            EdgeMode::Dense { p } => p,
        }
    }
}

impl FromStr for EdgeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || format!("edge mode must look like sparse:c=2.0 or dense:p=0.2, got {s:?}");
        let (kind, param) = s.split_once(':').ok_or_else(err)?;
        match (kind, param.split_once('=')) {
            ("sparse", Some(("c", v))) => {
                let c: f64 = v.parse().map_err(|_| err())?;
                if c > 0.0 && c.is_finite() {
                    Ok(EdgeMode::Sparse { c })
                } else {
                    Err(format!("sparse constant must be positive, got {v}"))
                }
            }
            ("dense", Some(("p", v))) => {
                let p: f64 = v.parse().map_err(|_| err())?;
                if p > 0.0 && p <= 1.0 {
                    Ok(EdgeMode::Dense { p })
                } else {
                    Err(format!("dense probability must lie in (0, 1], got {v}"))
                }
            }
            _ => Err(err()),
        }
    }
}

fn parse_mode(s: &str) -> Result<&'static str, String> {
    match s {
        "exact" => Ok("exact"),
        "sample" | "sampled" => Ok("sample"),
        other => Err(format!("mode must be exact or sample, got {other:?}")),
    }
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub node_counts: Vec<usize>,
    pub trials_per_size: usize,
    pub budget: BudgetRule,
    pub edge_mode: EdgeMode,
    pub strategies: Vec<PolicyKind>,
    pub mode: SelectionMode,
    pub master_seed: u64,
    pub fvs_enabled: bool,
    /// Fills the wall_ms CSV column. Off by default: timing values
    /// differ between runs, which would break byte-level reproducibility.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            node_counts: vec![6, 8, 10, 12],
            trials_per_size: DEFAULT_TRIALS,
            budget: BudgetRule::MatchNodes,
            edge_mode: EdgeMode::Sparse { c: DEFAULT_SPARSE_C },
            strategies: PolicyKind::ALL.to_vec(),
            mode: SelectionMode::Exact,
            master_seed: 0,
            fvs_enabled: true,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.node_counts.is_empty() {
            return Err(HarnessError::Config("node counts must be nonempty".into()));
        }
        if self.trials_per_size == 0 {
            return Err(HarnessError::Config("trials per size must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(HarnessError::Config("at least one strategy is required".into()));
        }
        for (i, kind) in self.strategies.iter().enumerate() {
            if self.strategies[i + 1..].contains(kind) {
                return Err(HarnessError::Config(format!("strategy {kind} listed twice")));
            }
        }
        for &n in &self.node_counts {
            if n < 2 {
                return Err(HarnessError::Config(format!("node count {n} is too small")));
            }
            let p = self.edge_mode.probability(n);
            if !(p > 0.0 && p <= 1.0) {
                return Err(HarnessError::Config(format!(
                    "edge probability {p} at n = {n} falls outside (0, 1]"
                )));
            }
        }
        if let SelectionMode::Sampled { samples } = self.mode {
            if samples == 0 {
                return Err(HarnessError::Config("sample count must be at least 1".into()));
            }
        }
        if let BudgetRule::Fixed(0) = self.budget {
            return Err(HarnessError::Config("budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// Option-valued configuration fields as they arrive from a config file
/// or from command-line flags; later sources override earlier ones
/// field by field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub node_counts: Option<Vec<usize>>,
    pub trials_per_size: Option<usize>,
    pub budget: Option<BudgetRule>,
    pub edge_mode: Option<EdgeMode>,
    pub strategies: Option<Vec<PolicyKind>>,
    pub mode: Option<&'static str>,
    pub samples: Option<usize>,
    pub master_seed: Option<u64>,
    pub fvs_enabled: Option<bool>,
    pub record_wall_time: Option<bool>,
    pub out: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl PartialConfig {
    /// Parses the key=value config-file format. Blank lines and lines
    /// starting with '#' are skipped; keys match the long CLI flags.
    pub fn from_file_text(text: &str) -> Result<Self, HarnessError> {
        let mut partial = PartialConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| HarnessError::Config(format!("line {}: {msg}", idx + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "nodes" => partial.node_counts = Some(parse_node_list(value).map_err(bad)?),
                "trials" => {
                    partial.trials_per_size =
                        Some(value.parse().map_err(|_| bad(format!("bad trials {value:?}")))?)
                }
                "budget" => partial.budget = Some(value.parse().map_err(bad)?),
                "edge" => partial.edge_mode = Some(value.parse().map_err(bad)?),
                "strategies" => partial.strategies = Some(parse_strategies(value).map_err(bad)?),
                "mode" => partial.mode = Some(parse_mode(value).map_err(bad)?),
                "samples" => {
                    partial.samples =
                        Some(value.parse().map_err(|_| bad(format!("bad samples {value:?}")))?)
                }
                "seed" => {
                    partial.master_seed =
                        Some(value.parse().map_err(|_| bad(format!("bad seed {value:?}")))?)
                }
                "fvs" => partial.fvs_enabled = Some(parse_switch(value).map_err(bad)?),
                "wall-ms" => partial.record_wall_time = Some(parse_switch(value).map_err(bad)?),
                "out" => partial.out = Some(PathBuf::from(value)),
                "summary" => partial.summary = Some(PathBuf::from(value)),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(partial)
    }

    /// Applies `overrides` on top of `self`, field by field.
    pub fn merged_with(self, overrides: PartialConfig) -> PartialConfig {
        PartialConfig {
            node_counts: overrides.node_counts.or(self.node_counts),
            trials_per_size: overrides.trials_per_size.or(self.trials_per_size),
            budget: overrides.budget.or(self.budget),
            edge_mode: overrides.edge_mode.or(self.edge_mode),
            strategies: overrides.strategies.or(self.strategies),
            mode: overrides.mode.or(self.mode),
            samples: overrides.samples.or(self.samples),
            master_seed: overrides.master_seed.or(self.master_seed),
            fvs_enabled: overrides.fvs_enabled.or(self.fvs_enabled),
            record_wall_time: overrides.record_wall_time.or(self.record_wall_time),
            out: overrides.out.or(self.out),
            summary: overrides.summary.or(self.summary),
        }
    }

    /// Fills unset fields with defaults and validates the result.
    pub fn finish(self) -> Result<ExperimentConfig, HarnessError> {
        let defaults = ExperimentConfig::default();
        let mode = match (self.mode, self.samples) {
            (Some("sample"), samples) => {
                SelectionMode::Sampled { samples: samples.unwrap_or(DEFAULT_SAMPLES) }
            }
            (Some("exact") | None, _) => SelectionMode::Exact,
            (Some(other), _) => {
                return Err(HarnessError::Config(format!("unknown mode {other:?}")))
            }
        };
        let cfg = ExperimentConfig {
            node_counts: self.node_counts.unwrap_or(defaults.node_counts),
            trials_per_size: self.trials_per_size.unwrap_or(defaults.trials_per_size),
            budget: self.budget.unwrap_or(defaults.budget),
            edge_mode: self.edge_mode.unwrap_or(defaults.edge_mode),
            strategies: self.strategies.unwrap_or(defaults.strategies),
            mode,
            master_seed: self.master_seed.unwrap_or(defaults.master_seed),
            fvs_enabled: self.fvs_enabled.unwrap_or(defaults.fvs_enabled),
            record_wall_time: self.record_wall_time.unwrap_or(defaults.record_wall_time),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_node_list(s: &str) -> Result<Vec<usize>, String> {
    let counts: Result<Vec<usize>, _> = s.split(',').map(|t| t.trim().parse::<usize>()).collect();
    match counts {
        Ok(c) if !c.is_empty() => Ok(c),
        _ => Err(format!("expected a comma-separated list of node counts, got {s:?}")),
    }
}

pub fn parse_strategies(s: &str) -> Result<Vec<PolicyKind>, String> {
    s.split(',').map(|t| t.trim().parse::<PolicyKind>()).collect()
}

pub fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        other => Err(format!("expected on or off, got {other:?}")),
    }
}
