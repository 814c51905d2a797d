//! Run configuration: a flat `key = value` file merged under command-line
//! flags. Precedence is flag, then file, then built-in default.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use metacost::models::ParamRange;
use serde::Serialize;

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "METACOST_OUT";
pub const DEFAULT_OUT: &str = "metacost-out";

const KNOWN_KEYS: &[&str] = &[
    "dataset",
    "model",
    "samples",
    "behavioural",
    "seed",
    "skip",
    "jobs",
    "out",
    "clamp_nonneg",
    "behavioural_vs_rest",
    "space",
    "budget",
    "draws",
    "epochs",
    "params",
    "preset",
    "target",
    "subjects",
];

/// Parsed config file. Keys use underscores; `range.<param>` keys hold
/// `lo:hi` overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub values: BTreeMap<String, String>,
    pub ranges: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = ConfigFile::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", n + 1)))?;
            let key = k.trim().replace('-', "_");
            let value = v.trim().to_string();
            if let Some(p) = key.strip_prefix("range.") {
                cfg.ranges.insert(p.to_string(), value);
            } else if KNOWN_KEYS.contains(&key.as_str()) {
                cfg.values.insert(key, value);
            } else {
                return Err(CliError::Config(format!("config line {}: unknown key {key:?}", n + 1)));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Flag values as given on the command line; `None` when absent.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dataset: Option<PathBuf>,
    pub model: Option<String>,
    pub samples: Option<usize>,
    pub behavioural: Option<usize>,
    pub seed: Option<u64>,
    pub skip: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub clamp_nonneg: bool,
    pub behavioural_vs_rest: bool,
    pub ranges: Vec<String>,
    pub space: Option<String>,
    pub budget: Option<String>,
    pub draws: Option<usize>,
    pub epochs: Option<usize>,
    pub params: Option<String>,
    pub preset: Option<String>,
    pub target: Option<String>,
    pub subjects: Option<usize>,
}

/// Fully resolved settings, echoed into every output artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    /// `None` selects every registered model.
    pub model: Option<String>,
    pub ranges: BTreeMap<String, ParamRange>,
    pub samples: usize,
    pub behavioural: usize,
    pub seed: u64,
    pub skip: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub clamp_nonneg: bool,
    pub behavioural_vs_rest: bool,
    pub space: String,
    pub budget: String,
    pub draws: Option<usize>,
    pub epochs: Option<usize>,
    pub params: Option<Vec<f64>>,
    pub preset: String,
    pub target: String,
    pub subjects: Option<usize>,
}

fn parse_value<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Config(format!("invalid value {v:?} for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("invalid boolean {v:?} for {key}"))),
    }
}

pub fn parse_range(v: &str) -> Result<ParamRange, CliError> {
    let (lo, hi) = v
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("range {v:?} must be lo:hi")))?;
    let lo: f64 = parse_value("range", lo.trim())?;
    let hi: f64 = parse_value("range", hi.trim())?;
    if !(lo < hi) {
        return Err(CliError::Config(format!("range {v:?} needs lo < hi")));
    }
    Ok(ParamRange::new(lo, hi))
}

fn parse_params(v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|x| parse_value("params", x.trim())).collect()
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

impl RunConfig {
    /// Merges flags over the file over defaults. `env_out` is the value of
    /// [`OUT_ENV`], which replaces the built-in output directory.
    pub fn resolve(flags: &Overrides, file: &ConfigFile, env_out: Option<String>) -> Result<Self, CliError> {
        let f = |k: &str| file.values.get(k).map(String::as_str);
        fn pick<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, key: &str, default: T) -> Result<T, CliError> {
            match (flag, file) {
                (Some(v), _) => Ok(v),
                (None, Some(s)) => parse_value(key, s),
                (None, None) => Ok(default),
            }
        }
        fn pick_opt<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, key: &str) -> Result<Option<T>, CliError> {
            match (flag, file) {
                (Some(v), _) => Ok(Some(v)),
                (None, Some(s)) => parse_value(key, s).map(Some),
                (None, None) => Ok(None),
            }
        }
        let flag_or_file_bool = |flag: bool, key: &str| -> Result<bool, CliError> {
            if flag {
                Ok(true)
            } else {
                f(key).map(|v| parse_bool(key, v)).transpose().map(|b| b.unwrap_or(false))
            }
        };

        let mut ranges = BTreeMap::new();
        for (name, v) in &file.ranges {
            ranges.insert(name.clone(), parse_range(v)?);
        }
        for r in &flags.ranges {
            let (name, v) = r
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--range {r:?} must be name=lo:hi")))?;
            ranges.insert(name.trim().to_string(), parse_range(v)?);
        }

        let model = flags.model.clone().or_else(|| f("model").map(String::from)).filter(|m| !m.eq_ignore_ascii_case("all"));
        let params = match flags.params.as_deref().or(f("params")) {
            Some(p) => Some(parse_params(p)?),
            None => None,
        };
        let out = match (&flags.out, f("out"), env_out.filter(|s| !s.is_empty())) {
            (Some(p), _, _) => p.clone(),
            (None, Some(p), _) => PathBuf::from(p),
            (None, None, Some(e)) => PathBuf::from(e),
            (None, None, None) => PathBuf::from(DEFAULT_OUT),
        };

        let cfg = RunConfig {
            dataset: flags.dataset.clone().or_else(|| f("dataset").map(PathBuf::from)),
            model,
            ranges,
            samples: pick(flags.samples, f("samples"), "samples", 100_000)?,
            behavioural: pick(flags.behavioural, f("behavioural"), "behavioural", 100)?,
            seed: pick(flags.seed, f("seed"), "seed", 0)?,
            skip: pick(flags.skip, f("skip"), "skip", 1)?,
            jobs: pick(flags.jobs, f("jobs"), "jobs", default_jobs())?,
            out,
            clamp_nonneg: flag_or_file_bool(flags.clamp_nonneg, "clamp_nonneg")?,
            behavioural_vs_rest: flag_or_file_bool(flags.behavioural_vs_rest, "behavioural_vs_rest")?,
            space: pick(flags.space.clone(), f("space"), "space", "muscle".to_string())?,
            budget: pick(flags.budget.clone(), f("budget"), "budget", "full".to_string())?,
            draws: pick_opt(flags.draws, f("draws"), "draws")?,
            epochs: pick_opt(flags.epochs, f("epochs"), "epochs")?,
            params,
            preset: pick(flags.preset.clone(), f("preset"), "preset", "full".to_string())?,
            target: pick(flags.target.clone(), f("target"), "target", "MARG68".to_string())?,
            subjects: pick_opt(flags.subjects, f("subjects"), "subjects")?,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.behavioural < 1 || self.samples < self.behavioural {
            return Err(CliError::Config(format!(
                "need samples >= behavioural >= 1 (samples {}, behavioural {})",
                self.samples, self.behavioural
            )));
        }
        if self.jobs < 1 {
            return Err(CliError::Config("jobs must be >= 1".into()));
        }
        Ok(())
    }

    pub fn dataset_path(&self) -> Result<&Path, CliError> {
        self.dataset.as_deref().ok_or_else(|| CliError::Config("no dataset given (--dataset or dataset = ...)".into()))
    }

    /// One-line `key=value` rendering for CSV comment headers.
    pub fn echo_line(&self) -> String {
        let v = serde_json::to_value(self).unwrap_or_default();
        let mut parts = Vec::new();
        if let serde_json::Value::Object(map) = v {
            for (k, v) in map {
                let s = match v {
                    serde_json::Value::String(s) => s,
                    serde_json::Value::Null => continue,
                    other => other.to_string(),
                };
                parts.push(format!("{k}={s}"));
            }
        }
        format!("# config: {}", parts.join("; "))
    }
}
