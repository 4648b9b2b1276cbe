//! Command-line plumbing for the `relufw` experiment drivers: flag
//! definitions, the flat `key = value` config format, and resolution of
//! defaults < config file < flags into an [`ExperimentConfig`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use relufw::experiments::{self, ExperimentConfig, ExperimentKind, NRange};

#[derive(Debug, Parser)]
#[command(name = "relufw", version, about = "Frank-Wolfe training of shallow ReLU networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Empirical probability that the cone {θ : Aθ ≥ 0} is nontrivial.
    PhaseTransition(Settings),
    /// Deterministic Frank-Wolfe on a noiseless teacher.
    TrainFw(Settings),
    /// Stochastic Frank-Wolfe on a noiseless teacher.
    TrainSfw(Settings),
    /// Spike-free certification study.
    Certify(Settings),
    /// Single-instance oracle diagnostic.
    LmoCheck(Settings),
}

impl Command {
    pub fn split(&self) -> (ExperimentKind, &Settings) {
        match self {
            Command::PhaseTransition(s) => (ExperimentKind::PhaseTransition, s),
            Command::TrainFw(s) => (ExperimentKind::TrainFw, s),
            Command::TrainSfw(s) => (ExperimentKind::TrainSfw, s),
            Command::Certify(s) => (ExperimentKind::Certify, s),
            Command::LmoCheck(s) => (ExperimentKind::LmoCheck, s),
        }
    }
}

/// Every setting is optional so that unset flags fall through to the
/// config file and then to the per-experiment defaults.
#[derive(Debug, Default, Clone, PartialEq, Args)]
pub struct Settings {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Inclusive range A:B:STEP.
    #[arg(long = "n-range", value_name = "A:B:STEP")]
    pub n_range: Option<NRange>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long, overrides_with = "no_whiten")]
    pub whiten: bool,
    #[arg(long = "no-whiten", overrides_with = "whiten")]
    pub no_whiten: bool,
    #[arg(long = "teacher-neurons")]
    pub teacher_neurons: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub budget: Option<usize>,
    /// Gradient bound for the minibatch schedule.
    #[arg(long = "G")]
    pub sfw_g: Option<f64>,
    /// Smoothness constant for the minibatch schedule.
    #[arg(long = "L")]
    pub sfw_l: Option<f64>,
    /// Diameter of the constraint set for the minibatch schedule.
    #[arg(long = "D")]
    pub sfw_d: Option<f64>,
    #[arg(long = "m-a-hint")]
    pub m_a_hint: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

impl Settings {
    fn whiten_choice(&self) -> Option<bool> {
        match (self.whiten, self.no_whiten) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }

    fn apply(&self, cfg: &mut ExperimentConfig) {
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field.clone() { cfg.$field = v; } )* };
        }
        set!(d, trials, seed, delta, epsilon, max_iters, teacher_neurons, rho, budget);
        if let Some(n) = self.n {
            cfg.n = Some(n);
            cfg.n_range = None;
        }
        if let Some(r) = self.n_range {
            cfg.n_range = Some(r);
        }
        if let Some(w) = self.whiten_choice() {
            cfg.whiten = w;
        }
        for (dst, src) in [(&mut cfg.sfw_g, self.sfw_g), (&mut cfg.sfw_l, self.sfw_l), (&mut cfg.sfw_d, self.sfw_d)] {
            if src.is_some() {
                *dst = src;
            }
        }
        if self.m_a_hint.is_some() {
            cfg.m_a_hint = self.m_a_hint;
        }
        if self.out.is_some() {
            cfg.out.clone_from(&self.out);
        }
    }
}

/// Flag name with `-` and `_` removed. Case is kept because `d` and `D`
/// are different settings.
fn normalize_key(key: &str) -> String {
    key.chars().filter(|c| *c != '-' && *c != '_').collect()
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| anyhow::anyhow!("config line {line}: bad value {value:?} for {key}: {e}"))
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => bail!("config line {line}: bad boolean {value:?} for {key}"),
    }
}

/// Parses the flat config format: one `key = value` per line, `#` starts a
/// comment, keys are flag names with or without dashes.
pub fn parse_config(text: &str) -> Result<Settings> {
    let mut s = Settings::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            bail!("config line {line}: expected `key = value`, got {raw:?}");
        };
        let (key, value) = (key.trim(), value.trim());
        match normalize_key(key).as_str() {
            "d" => s.d = Some(parse_value(key, value, line)?),
            "n" => s.n = Some(parse_value(key, value, line)?),
            "nrange" => s.n_range = Some(parse_value(key, value, line)?),
            "trials" => s.trials = Some(parse_value(key, value, line)?),
            "seed" => s.seed = Some(parse_value(key, value, line)?),
            "delta" => s.delta = Some(parse_value(key, value, line)?),
            "epsilon" => s.epsilon = Some(parse_value(key, value, line)?),
            "maxiters" => s.max_iters = Some(parse_value(key, value, line)?),
            "whiten" => {
                let w = parse_bool(key, value, line)?;
                (s.whiten, s.no_whiten) = (w, !w);
            }
            "nowhiten" => {
                let w = !parse_bool(key, value, line)?;
                (s.whiten, s.no_whiten) = (w, !w);
            }
            "teacherneurons" => s.teacher_neurons = Some(parse_value(key, value, line)?),
            "rho" => s.rho = Some(parse_value(key, value, line)?),
            "budget" => s.budget = Some(parse_value(key, value, line)?),
            "G" => s.sfw_g = Some(parse_value(key, value, line)?),
            "L" => s.sfw_l = Some(parse_value(key, value, line)?),
            "D" => s.sfw_d = Some(parse_value(key, value, line)?),
            "mahint" => s.m_a_hint = Some(parse_value(key, value, line)?),
            "out" => s.out = Some(PathBuf::from(value)),
            "config" => bail!("config line {line}: nested config files are not supported"),
            other => bail!("config line {line}: unknown key {other:?}"),
        }
    }
    Ok(s)
}

pub fn load_config(path: &Path) -> Result<Settings> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in config {}", path.display()))
}

/// Defaults for `kind`, overridden by the config file, overridden by flags.
pub fn resolve(kind: ExperimentKind, flags: &Settings) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(kind);
    if let Some(path) = &flags.config {
        load_config(path)?.apply(&mut cfg);
    }
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves and runs one command, writing CSV to `--out` or `stdout`.
pub fn execute(command: &Command) -> Result<ExperimentConfig> {
    let (kind, settings) = command.split();
    let cfg = resolve(kind, settings)?;
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(file);
            experiments::run(&cfg, &mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            experiments::run(&cfg, &mut w)?;
            w.flush()?;
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_keys_with_and_without_dashes() {
        let s = parse_config("max-iters = 7\nmaxiters=9 # later wins\n  teacher_neurons = 3\n").unwrap();
        assert_eq!(s.max_iters, Some(9));
        assert_eq!(s.teacher_neurons, Some(3));
    }

    #[test]
    fn d_and_capital_d_are_distinct() {
        let s = parse_config("d = 12\nD = 0.5\nG = 3\nL = 2").unwrap();
        assert_eq!(s.d, Some(12));
        assert_eq!(s.sfw_d, Some(0.5));
        assert_eq!(s.sfw_g, Some(3.0));
        assert_eq!(s.sfw_l, Some(2.0));
    }

    #[test]
    fn comments_blank_lines_and_booleans() {
        let s = parse_config("# header\n\nwhiten = false\nn-range = 5:10:5\n").unwrap();
        assert_eq!(s.whiten_choice(), Some(false));
        assert_eq!(s.n_range, Some(NRange { start: 5, end: 10, step: 5 }));
        let s = parse_config("no-whiten = false").unwrap();
        assert_eq!(s.whiten_choice(), Some(true));
    }

    #[test]
    fn malformed_config_is_rejected() {
        assert!(parse_config("d 12").is_err());
        assert!(parse_config("d = twelve").is_err());
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("whiten = maybe").is_err());
    }

    #[test]
    fn flags_override_config_override_defaults() {
        let dir = std::env::temp_dir().join(format!("relufw-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "seed = 5\nmax-iters = 40\nwhiten = false\n").unwrap();
        let flags = Settings { config: Some(path), max_iters: Some(10), ..Default::default() };
        let cfg = resolve(ExperimentKind::TrainFw, &flags).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.max_iters, 10);
        assert!(!cfg.whiten);
        assert_eq!(cfg.d, 25);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn single_n_flag_replaces_default_range() {
        let flags = Settings { n: Some(5), ..Default::default() };
        let cfg = resolve(ExperimentKind::Certify, &flags).unwrap();
        assert_eq!(cfg.n_values().unwrap(), vec![5]);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["relufw", "train-sfw", "--G", "2", "--D", "1.5", "--d", "7", "--no-whiten"]).unwrap();
        let (kind, s) = cli.command.split();
        assert_eq!(kind, ExperimentKind::TrainSfw);
        assert_eq!((s.sfw_g, s.sfw_d, s.d), (Some(2.0), Some(1.5), Some(7)));
        assert_eq!(s.whiten_choice(), Some(false));
        let cli = Cli::try_parse_from(["relufw", "certify", "--no-whiten", "--whiten"]).unwrap();
        assert_eq!(cli.command.split().1.whiten_choice(), Some(true));
    }
}
