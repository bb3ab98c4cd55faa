//! Run configuration with flat dotted keys.
//!
//! A config file is TOML. Keys may be written dotted at top level (`train.clip = 0.1`) or
//! grouped under `[train]` tables; both flatten to the same key. Every key can also be set
//! from the command line with `--set key=value`.

use std::path::{Path, PathBuf};

use toml::Value;

use crate::env::{EnvConfig, HandicapMode};
use crate::error::{Error, Result};
use crate::probe::{BaseMode, ProbeSpec};
use crate::trainer::{Schedule, TrainConfig};

/// Every recognized key, in the order `config.resolved` lists them.
pub const KEYS: &[&str] = &[
    "env.turns_per_episode",
    "env.reward_low",
    "env.reward_high",
    "env.handicap_mode",
    "env.handicap_a",
    "env.handicap_b",
    "env.handicap_min",
    "env.handicap_max",
    "env.observe_own_handicap",
    "env.strict_observation",
    "env.seed",
    "train.generations",
    "train.episodes_per_generation",
    "train.gamma",
    "train.gae_lambda",
    "train.clip",
    "train.learning_rate",
    "train.epochs_per_generation",
    "train.minibatch_count",
    "train.entropy_coefficient",
    "train.value_coefficient",
    "train.hidden",
    "train.seeds",
    "train.checkpoint_interval",
    "train.trace_interval",
    "probe.n_values",
    "probe.d_values",
    "probe.base_mode",
    "probe.samples",
    "probe.mirror",
    "probe.interval",
    "probe.seed",
    "run.out",
    "run.jobs",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HandicapKind {
    Fixed,
    Randomized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub handicap_kind: HandicapKind,
    pub handicap_a: f64,
    pub handicap_b: f64,
    pub handicap_min: f64,
    pub handicap_max: f64,
    pub train: TrainConfig,
    pub probe: ProbeSpec,
    pub probe_samples: u32,
    pub schedule: Schedule,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            handicap_kind: HandicapKind::Fixed,
            handicap_a: 2.0,
            handicap_b: 2.0,
            handicap_min: 0.0,
            handicap_max: 5.0,
            train: TrainConfig::default(),
            probe: ProbeSpec::default(),
            probe_samples: 32,
            schedule: Schedule::default(),
            out: PathBuf::from("run"),
        }
    }
}

fn bad(key: &str, value: &Value, want: &str) -> Error {
    Error::config(key, format!("expected {want}, got `{value}`"))
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    v.as_integer()
        .filter(|i| *i >= 0)
        .map(|i| i as u64)
        .ok_or_else(|| bad(key, v, "a non-negative integer"))
}

fn as_u32(key: &str, v: &Value) -> Result<u32> {
    let x = as_u64(key, v)?;
    u32::try_from(x).map_err(|_| bad(key, v, "an integer below 2^32"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, v, "a number")),
    }
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| bad(key, v, "true or false"))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(key, v, "a string"))
}

fn as_list<T>(key: &str, v: &Value, item: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    match v {
        Value::Array(items) => items.iter().map(|x| item(key, x)).collect(),
        // a scalar is a one-element list
        other => Ok(vec![item(key, other)?]),
    }
}

fn num(x: f64) -> Value {
    Value::Float(x)
}

fn int(x: impl Into<i64>) -> Value {
    Value::Integer(x.into())
}

/// Parse the text of a `--set` value as a TOML value, falling back to a bare string.
pub fn parse_value(text: &str) -> Value {
    let doc = format!("v = {text}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(text.into())),
        Err(_) => Value::String(text.into()),
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, out),
            other => out.push((key, other.clone())),
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "env.turns_per_episode" => self.env.turns_per_episode = as_u32(key, v)?,
            "env.reward_low" => self.env.reward_low = as_f64(key, v)?,
            "env.reward_high" => self.env.reward_high = as_f64(key, v)?,
            "env.handicap_mode" => {
                self.handicap_kind = match as_str(key, v)? {
                    "fixed" => HandicapKind::Fixed,
                    "randomized" => HandicapKind::Randomized,
                    _ => return Err(bad(key, v, "\"fixed\" or \"randomized\"")),
                }
            }
            "env.handicap_a" => self.handicap_a = as_f64(key, v)?,
            "env.handicap_b" => self.handicap_b = as_f64(key, v)?,
            "env.handicap_min" => self.handicap_min = as_f64(key, v)?,
            "env.handicap_max" => self.handicap_max = as_f64(key, v)?,
            "env.observe_own_handicap" => self.env.observe_own_handicap = as_bool(key, v)?,
            "env.strict_observation" => self.env.strict_observation = as_bool(key, v)?,
            "env.seed" => self.env.seed = as_u64(key, v)?,
            "train.generations" => self.train.generations = as_u32(key, v)?,
            "train.episodes_per_generation" => self.train.episodes_per_generation = as_u32(key, v)?,
            "train.gamma" => self.train.gamma = as_f64(key, v)?,
            "train.gae_lambda" => self.train.gae_lambda = as_f64(key, v)?,
            "train.clip" => self.train.clip = as_f64(key, v)?,
            "train.learning_rate" => self.train.learning_rate = as_f64(key, v)?,
            "train.epochs_per_generation" => self.train.epochs_per_generation = as_u32(key, v)?,
            "train.minibatch_count" => self.train.minibatch_count = as_u32(key, v)?,
            "train.entropy_coefficient" => self.train.entropy_coefficient = as_f64(key, v)?,
            "train.value_coefficient" => self.train.value_coefficient = as_f64(key, v)?,
            "train.hidden" => self.train.hidden = as_u32(key, v)? as usize,
            "train.seeds" => self.train.seeds = as_list(key, v, as_u64)?,
            "train.checkpoint_interval" => self.schedule.checkpoint_interval = as_u32(key, v)?,
            "train.trace_interval" => self.schedule.trace_interval = as_u32(key, v)?,
            "probe.n_values" => self.probe.n_values = as_list(key, v, as_u32)?,
            "probe.d_values" => self.probe.d_values = as_list(key, v, as_f64)?,
            "probe.base_mode" => {
                self.probe.base_mode = match as_str(key, v)? {
                    "symmetric" => BaseMode::Symmetric,
                    "averaged" => BaseMode::Averaged {
                        samples: self.probe_samples,
                    },
                    _ => return Err(bad(key, v, "\"symmetric\" or \"averaged\"")),
                }
            }
            "probe.samples" => {
                self.probe_samples = as_u32(key, v)?;
                if let BaseMode::Averaged { samples } = &mut self.probe.base_mode {
                    *samples = self.probe_samples;
                }
            }
            "probe.mirror" => self.probe.mirror = as_bool(key, v)?,
            "probe.interval" => self.schedule.probe_interval = as_u32(key, v)?,
            "probe.seed" => self.probe.seed = as_u64(key, v)?,
            "run.out" => self.out = PathBuf::from(as_str(key, v)?),
            "run.jobs" => self.train.jobs = as_u32(key, v)?.max(1) as usize,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<Value> {
        let kind = match self.handicap_kind {
            HandicapKind::Fixed => "fixed",
            HandicapKind::Randomized => "randomized",
        };
        Some(match key {
            "env.turns_per_episode" => int(self.env.turns_per_episode),
            "env.reward_low" => num(self.env.reward_low),
            "env.reward_high" => num(self.env.reward_high),
            "env.handicap_mode" => Value::String(kind.into()),
            "env.handicap_a" => num(self.handicap_a),
            "env.handicap_b" => num(self.handicap_b),
            "env.handicap_min" => num(self.handicap_min),
            "env.handicap_max" => num(self.handicap_max),
            "env.observe_own_handicap" => Value::Boolean(self.env.observe_own_handicap),
            "env.strict_observation" => Value::Boolean(self.env.strict_observation),
            "env.seed" => int(self.env.seed as i64),
            "train.generations" => int(self.train.generations),
            "train.episodes_per_generation" => int(self.train.episodes_per_generation),
            "train.gamma" => num(self.train.gamma),
            "train.gae_lambda" => num(self.train.gae_lambda),
            "train.clip" => num(self.train.clip),
            "train.learning_rate" => num(self.train.learning_rate),
            "train.epochs_per_generation" => int(self.train.epochs_per_generation),
            "train.minibatch_count" => int(self.train.minibatch_count),
            "train.entropy_coefficient" => num(self.train.entropy_coefficient),
            "train.value_coefficient" => num(self.train.value_coefficient),
            "train.hidden" => int(self.train.hidden as i64),
            "train.seeds" => Value::Array(self.train.seeds.iter().map(|&s| int(s as i64)).collect()),
            "train.checkpoint_interval" => int(self.schedule.checkpoint_interval),
            "train.trace_interval" => int(self.schedule.trace_interval),
            "probe.n_values" => Value::Array(self.probe.n_values.iter().map(|&n| int(n)).collect()),
            "probe.d_values" => Value::Array(self.probe.d_values.iter().map(|&d| num(d)).collect()),
            "probe.base_mode" => Value::String(
                match self.probe.base_mode {
                    BaseMode::Symmetric => "symmetric",
                    BaseMode::Averaged { .. } => "averaged",
                }
                .into(),
            ),
            "probe.samples" => int(self.probe_samples),
            "probe.mirror" => Value::Boolean(self.probe.mirror),
            "probe.interval" => int(self.schedule.probe_interval),
            "probe.seed" => int(self.probe.seed as i64),
            "run.out" => Value::String(self.out.display().to_string()),
            "run.jobs" => int(self.train.jobs as i64),
            _ => return None,
        })
    }

    /// Apply every key of a TOML document.
    pub fn apply_toml(&mut self, text: &str, origin: &Path) -> Result<()> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut entries = Vec::new();
        flatten("", &table, &mut entries);
        // base_mode reads probe.samples, so apply samples first
        entries.sort_by_key(|(k, _)| k != "probe.samples");
        for (key, value) in entries {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_toml(&text, path)?;
        Ok(cfg)
    }

    /// Apply a `key=value` override.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "expected key=value"))?;
        self.set(key.trim(), &parse_value(value.trim()))
    }

    /// Environment config with the handicap settings folded in.
    pub fn env_config(&self) -> EnvConfig {
        let handicap_mode = match self.handicap_kind {
            HandicapKind::Fixed => HandicapMode::Fixed {
                a: self.handicap_a,
                b: self.handicap_b,
            },
            HandicapKind::Randomized => HandicapMode::Randomized {
                min: self.handicap_min,
                max: self.handicap_max,
            },
        };
        EnvConfig {
            handicap_mode,
            ..self.env.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env_config().validate()?;
        self.train.validate()?;
        self.probe.validate()
    }

    /// Effective configuration as flat `key = value` lines. The output directory is left out
    /// so identical experiments produce identical files wherever they are written.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        for key in KEYS.iter().filter(|k| **k != "run.out") {
            let value = self.get(key).expect("every listed key is readable");
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_round_trips() {
        let cfg = RunConfig::default();
        for key in KEYS {
            let v = cfg.get(key).unwrap();
            let mut other = RunConfig::default();
            other.set(key, &v).unwrap();
            assert_eq!(other, cfg, "{key}");
        }
    }

    #[test]
    fn resolved_text_reloads_to_the_same_config() {
        let mut cfg = RunConfig::default();
        cfg.set_assignment("train.clip=0.1").unwrap();
        cfg.set_assignment("probe.n_values=[0, 2]").unwrap();
        cfg.set_assignment("env.handicap_mode=randomized").unwrap();
        cfg.set_assignment("probe.base_mode=averaged").unwrap();
        cfg.set_assignment("probe.samples=7").unwrap();
        let mut back = RunConfig::default();
        back.apply_toml(&cfg.resolved(), Path::new("resolved")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.probe.base_mode, BaseMode::Averaged { samples: 7 });
    }

    #[test]
    fn dotted_and_table_forms_agree() {
        let mut a = RunConfig::default();
        a.apply_toml("train.generations = 3\nenv.handicap_a = 0", Path::new("a")).unwrap();
        let mut b = RunConfig::default();
        b.apply_toml("[train]\ngenerations = 3\n[env]\nhandicap_a = 0.0", Path::new("b")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.generations, 3);
    }

    #[test]
    fn unknown_key_is_named() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply_toml("train.clipp = 0.1", Path::new("c")).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "train.clipp"));
        assert!(err.to_string().contains("train.clipp"));
    }

    #[test]
    fn wrong_type_is_reported() {
        let mut cfg = RunConfig::default();
        let err = cfg.set_assignment("train.generations=many").unwrap_err();
        assert!(err.to_string().contains("train.generations"));
    }

    #[test]
    fn scalar_seed_is_a_list() {
        let mut cfg = RunConfig::default();
        cfg.set_assignment("train.seeds=9").unwrap();
        assert_eq!(cfg.train.seeds, vec![9]);
    }
}
