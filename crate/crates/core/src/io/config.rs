//! Run configuration: one `key = value` pair per line, `#` starts a comment.
//! Unknown keys are errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::analysis::bayes::HypothesisWindows;
use crate::error::ParseError;
use crate::likelihood::AscertainmentMode;
use crate::mcmc::{Param, ProposalWeights};
use crate::model::{TreePriorKind, DEFAULT_FAMILY_SIZE, DEFAULT_ROOT_BOUNDS};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub calibrations: Option<PathBuf>,
    pub tree_prior: TreePriorKind,
    /// Number of extant languages in the whole family (N in ρ = n/N).
    pub n_extant_family: usize,
    pub chain_length: u64,
    pub thin: u64,
    pub n_runs: usize,
    pub n_chains: usize,
    pub heat_delta: f64,
    pub seed: u64,
    pub root_bounds: (f64, f64),
    pub prior_only: bool,
    pub output: String,
    pub burn_in: f64,
    pub ascertainment: AscertainmentMode,
    pub allow_polymorphism: bool,
    pub print_every: u64,
    pub audit_every: u64,
    /// Window tuning during burn-in.
    pub tune: bool,
    pub weights: ProposalWeights,
    /// Parameters held at a fixed value.
    pub fixed: BTreeMap<Param, f64>,
    pub fix_topology: bool,
    pub start_tree: Option<PathBuf>,
    pub windows: HypothesisWindows,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            calibrations: None,
            tree_prior: TreePriorKind::Fbd,
            n_extant_family: DEFAULT_FAMILY_SIZE,
            chain_length: 1_000_000,
            thin: 1000,
            n_runs: 2,
            n_chains: 3,
            heat_delta: 0.1,
            seed: 1,
            root_bounds: DEFAULT_ROOT_BOUNDS,
            prior_only: false,
            output: "glottochron".into(),
            burn_in: 0.25,
            ascertainment: AscertainmentMode::Global,
            allow_polymorphism: false,
            print_every: 10_000,
            audit_every: 10_000,
            tune: true,
            weights: ProposalWeights::default(),
            fixed: BTreeMap::new(),
            fix_topology: false,
            start_tree: None,
            windows: HypothesisWindows::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ParseError> {
        if self.chain_length == 0 {
            return Err(ParseError::config("chain_length", "must be positive"));
        }
        if self.thin == 0 {
            return Err(ParseError::config("thin", "must be positive"));
        }
        if self.n_runs == 0 {
            return Err(ParseError::config("n_runs", "must be positive"));
        }
        if self.n_chains == 0 {
            return Err(ParseError::config("n_chains", "must be positive"));
        }
        if !(self.heat_delta >= 0.0 && self.heat_delta.is_finite()) {
            return Err(ParseError::config("heat_delta", "must be non-negative"));
        }
        if !(self.root_bounds.0 >= 0.0 && self.root_bounds.0 < self.root_bounds.1) {
            return Err(ParseError::config("root_bounds", "need 0 <= min < max"));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(ParseError::config("burn_in", "must lie in [0, 1)"));
        }
        if self.n_extant_family == 0 {
            return Err(ParseError::config("n_extant_family", "must be positive"));
        }
        if self.windows.steppe.0 >= self.windows.steppe.1
            || self.windows.anatolian.0 >= self.windows.anatolian.1
        {
            return Err(ParseError::config("steppe/anatolian", "windows need min < max"));
        }
        Ok(())
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ParseError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ParseError::config(key, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ParseError> {
    v.parse()
        .map_err(|_| ParseError::config(key, format!("cannot parse `{v}`")))
}

fn parse_pair(key: &str, v: &str) -> Result<(f64, f64), ParseError> {
    let parts: Vec<&str> = v
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .collect();
    if parts.len() != 2 {
        return Err(ParseError::config(key, "expected two numbers `min, max`"));
    }
    Ok((parse_num(key, parts[0])?, parse_num(key, parts[1])?))
}

pub fn parse_config(text: &str) -> Result<RunConfig, ParseError> {
    let mut cfg = RunConfig::default();
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ParseError::line(lineno, "expected `key = value`"))?;
        let (key, v) = (key.trim(), value.trim());
        if seen.insert(key.to_string(), lineno).is_some() {
            return Err(ParseError::config(key, format!("repeated on line {lineno}")));
        }
        if v.is_empty() {
            return Err(ParseError::config(key, "missing value"));
        }
        match key {
            "dataset" => cfg.dataset = Some(PathBuf::from(v)),
            "calibrations" => cfg.calibrations = Some(PathBuf::from(v)),
            "tree_prior" => {
                cfg.tree_prior = v.parse().map_err(|e: String| ParseError::config(key, e))?
            }
            "n_extant_family" => cfg.n_extant_family = parse_num(key, v)?,
            "chain_length" => cfg.chain_length = parse_num(key, v)?,
            "thin" => cfg.thin = parse_num(key, v)?,
            "n_runs" => cfg.n_runs = parse_num(key, v)?,
            "n_chains" => cfg.n_chains = parse_num(key, v)?,
            "heat_delta" => cfg.heat_delta = parse_num(key, v)?,
            "seed" => cfg.seed = parse_num(key, v)?,
            "root_bounds" => cfg.root_bounds = parse_pair(key, v)?,
            "prior_only" => cfg.prior_only = parse_bool(key, v)?,
            "output" => cfg.output = v.to_string(),
            "burn_in" => cfg.burn_in = parse_num(key, v)?,
            "ascertainment" => {
                cfg.ascertainment = match v {
                    "global" => AscertainmentMode::Global,
                    "per_block" => AscertainmentMode::PerBlock,
                    "none" => AscertainmentMode::None,
                    _ => {
                        return Err(ParseError::config(
                            key,
                            "expected `global`, `per_block` or `none`",
                        ))
                    }
                }
            }
            "allow_polymorphism" => cfg.allow_polymorphism = parse_bool(key, v)?,
            "print_every" => cfg.print_every = parse_num(key, v)?,
            "audit_every" => cfg.audit_every = parse_num(key, v)?,
            "tune" => cfg.tune = parse_bool(key, v)?,
            "fix_topology" => cfg.fix_topology = parse_bool(key, v)?,
            "start_tree" => cfg.start_tree = Some(PathBuf::from(v)),
            "steppe" => cfg.windows.steppe = parse_pair(key, v)?,
            "anatolian" => cfg.windows.anatolian = parse_pair(key, v)?,
            "weight.topology" => cfg.weights.topology = parse_num(key, v)?,
            "weight.node_ages" => cfg.weights.node_ages = parse_num(key, v)?,
            "weight.tip_ages" => cfg.weights.tip_ages = parse_num(key, v)?,
            "weight.scalars" => cfg.weights.scalars = parse_num(key, v)?,
            "weight.branch_rates" => cfg.weights.branch_rates = parse_num(key, v)?,
            "weight.ancestor_toggle" => cfg.weights.ancestor_toggle = parse_num(key, v)?,
            _ => {
                if let Some(name) = key.strip_prefix("fix.") {
                    let param: Param = name
                        .parse()
                        .map_err(|e: String| ParseError::config(key, e))?;
                    cfg.fixed.insert(param, parse_num(key, v)?);
                } else {
                    return Err(ParseError::config(key, "unknown key"));
                }
            }
        }
    }
    if cfg.tree_prior == TreePriorKind::Fbd && !seen.contains_key("n_extant_family") {
        return Err(ParseError::config(
            "n_extant_family",
            "required when tree_prior = fbd (the family size sets the extant sampling fraction)",
        ));
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_keeps_defaults() {
        let cfg = parse_config(
            "dataset = data.txt\ntree_prior = uniform # comment\nchain_length = 5000\nthin = 10\nroot_bounds = 4000, 25000\nfix.alpha = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.dataset, Some(PathBuf::from("data.txt")));
        assert_eq!(cfg.tree_prior, TreePriorKind::Uniform);
        assert_eq!(cfg.chain_length, 5000);
        assert_eq!(cfg.n_runs, 2);
        assert_eq!(cfg.n_chains, 3);
        assert_eq!(cfg.root_bounds, (4000.0, 25000.0));
        assert_eq!(cfg.fixed.get(&Param::Alpha), Some(&0.5));
    }

    #[test]
    fn unknown_and_invalid_keys_are_named() {
        let e = parse_config("colour = blue").unwrap_err();
        assert!(e.to_string().contains("colour"));
        let e = parse_config("tree_prior = uniform\nthin = 0").unwrap_err();
        assert!(e.to_string().contains("thin"));
        let e = parse_config("tree_prior = uniform\nroot_bounds = 5000 100").unwrap_err();
        assert!(e.to_string().contains("root_bounds"));
    }

    #[test]
    fn fbd_requires_family_size() {
        let e = parse_config("tree_prior = fbd\n").unwrap_err();
        assert!(e.to_string().contains("n_extant_family"));
        let cfg = parse_config("tree_prior = fbd\nn_extant_family = 400\n").unwrap();
        assert_eq!(cfg.n_extant_family, 400);
    }
}
