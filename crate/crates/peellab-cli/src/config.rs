//! Experiment configuration: a key-value file with `[common]` and per-experiment
//! sections, overridden by command-line flags of the same names.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn key_error(key: &str, msg: &str) -> ConfigError {
    ConfigError(format!("`{key}`: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Calibrate,
    Peel,
    Layers,
    Eden,
    Perco,
    WalkTau,
    Gof,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Calibrate => "calibrate",
            Experiment::Peel => "peel",
            Experiment::Layers => "layers",
            Experiment::Eden => "eden",
            Experiment::Perco => "perco",
            Experiment::WalkTau => "walk-tau",
            Experiment::Gof => "gof",
        }
    }

    /// Keys that may be set for this experiment.
    fn allowed(self) -> &'static [&'static str] {
        match self {
            Experiment::Calibrate => &["beta", "beta_bracket", "cutoff", "out", "check"],
            Experiment::Peel => &[
                "law", "beta", "cutoff", "n_steps", "mode", "stride", "volume", "replicas", "seed", "workers", "out",
                "format", "tolerance", "check",
            ],
            Experiment::Layers => &[
                "law", "beta", "cutoff", "n_steps", "r_max", "cap", "volume", "replicas", "seed", "workers", "out",
                "format", "tolerance", "check",
            ],
            Experiment::Eden => &[
                "law", "beta", "cutoff", "n_steps", "t_max", "cap", "stride", "volume", "replicas", "seed", "workers",
                "out", "format", "tolerance", "check",
            ],
            Experiment::Perco => &[
                "law", "beta", "cutoff", "p", "n_grid", "cap", "replicas", "seed", "workers", "out", "format",
                "tolerance", "check",
            ],
            Experiment::WalkTau => &[
                "c_plus", "c_minus", "b", "n_grid", "replicas", "seed", "workers", "out", "format", "tolerance", "check",
            ],
            Experiment::Gof => &[
                "law", "beta", "cutoff", "n_steps", "replicas", "seed", "workers", "out", "format", "tolerance", "check",
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKey {
    #[default]
    Plane,
    HalfPlane,
}

/// Comma-separated list on the command line; a number, string or array in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse::<T>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<Vec<T>, String>>()
            .map(List)
    }
}

impl<T: Serialize> Serialize for List<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de, T> Deserialize<'de> for List<T>
where
    T: Deserialize<'de> + FromStr,
    T::Err: fmt::Display,
{
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Many(Vec<T>),
            One(T),
            Text(String),
        }
        match Raw::<T>::deserialize(d)? {
            Raw::Many(v) => Ok(List(v)),
            Raw::One(x) => Ok(List(vec![x])),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

macro_rules! keys {
    ($( $(#[$m:meta])* $name:ident : $ty:ty ),* $(,)?) => {
        /// Every configurable key. Flags and file keys share these names (`n_steps` ↔ `--n-steps`).
        #[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct Keys {
            $( $(#[$m])* #[serde(default, skip_serializing_if = "Option::is_none")] pub $name: Option<$ty>, )*
        }

        impl Keys {
            /// Field-wise `other` over `self`.
            pub fn overlay(self, other: Keys) -> Keys {
                Keys { $( $name: other.$name.or(self.$name), )* }
            }

            /// Names of the keys that are set.
            pub fn set_keys(&self) -> Vec<&'static str> {
                let mut v = Vec::new();
                $( if self.$name.is_some() { v.push(stringify!($name)); } )*
                v
            }
        }
    };
}

keys! {
    /// Serialized step law to load.
    #[arg(long)]
    law: PathBuf,
    /// Calibrate inline with this shape parameter instead of loading a law.
    #[arg(long)]
    beta: f64,
    /// Shape-parameter bracket for `calibrate`, as `lo,hi`.
    #[arg(long)]
    beta_bracket: List<f64>,
    /// Table size of the negative side.
    #[arg(long)]
    cutoff: usize,
    #[arg(long)]
    mode: ModeKey,
    #[arg(long)]
    n_steps: u64,
    #[arg(long)]
    r_max: u64,
    #[arg(long)]
    t_max: f64,
    /// Percolation parameters, comma-separated.
    #[arg(long)]
    p: List<f64>,
    /// Survival grid, comma-separated.
    #[arg(long)]
    n_grid: List<u64>,
    /// Step cap for a single chain.
    #[arg(long)]
    cap: u64,
    #[arg(long)]
    replicas: u64,
    #[arg(long)]
    stride: u64,
    #[arg(long, env = "PEELLAB_SEED")]
    seed: u64,
    /// Worker threads; 0 means one per core.
    #[arg(long)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    format: Format,
    /// Track vertex and face counts (fills every finite hole).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    volume: bool,
    #[arg(long)]
    c_plus: f64,
    #[arg(long)]
    c_minus: f64,
    #[arg(long = "b", allow_hyphen_values = true)]
    b: f64,
    /// Replaces the tolerance of every relative or absolute gate.
    #[arg(long)]
    tolerance: f64,
    /// Exit with status 4 when a gate fails.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    check: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    common: Option<Keys>,
    calibrate: Option<Keys>,
    peel: Option<Keys>,
    layers: Option<Keys>,
    eden: Option<Keys>,
    perco: Option<Keys>,
    #[serde(rename = "walk-tau")]
    walk_tau: Option<Keys>,
    gof: Option<Keys>,
}

impl FileConfig {
    fn take(&mut self, e: Experiment) -> Option<Keys> {
        match e {
            Experiment::Calibrate => self.calibrate.take(),
            Experiment::Peel => self.peel.take(),
            Experiment::Layers => self.layers.take(),
            Experiment::Eden => self.eden.take(),
            Experiment::Perco => self.perco.take(),
            Experiment::WalkTau => self.walk_tau.take(),
            Experiment::Gof => self.gof.take(),
        }
    }
}

fn check_allowed(e: Experiment, keys: &Keys, origin: &str) -> Result<(), ConfigError> {
    let allowed = e.allowed();
    for k in keys.set_keys() {
        if !allowed.contains(&k) {
            return Err(key_error(k, &format!("not a key of `{}` ({origin})", e.name())));
        }
    }
    Ok(())
}

/// Merge `[common]`, the experiment's section and the flags, in that order.
///
/// Keys in `[common]` that do not apply to the experiment are ignored; in the
/// experiment section or on the command line they are an error.
pub fn resolve(e: Experiment, file: Option<&Path>, flags: Keys) -> Result<Keys, ConfigError> {
    check_allowed(e, &flags, "command line")?;
    let mut base = Keys::default();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path).map_err(|err| key_error("config", &format!("{}: {err}", path.display())))?;
        let mut fc: FileConfig = toml::from_str(&text).map_err(|err| ConfigError(format!("{}: {}", path.display(), err.message())))?;
        if let Some(common) = fc.common.take() {
            let allowed = e.allowed();
            let mut c = common;
            for k in c.set_keys() {
                if !allowed.contains(&k) {
                    c = clear(c, k);
                }
            }
            base = base.overlay(c);
        }
        if let Some(section) = fc.take(e) {
            check_allowed(e, &section, "config file")?;
            base = base.overlay(section);
        }
    }
    Ok(base.overlay(flags))
}

fn clear(mut k: Keys, name: &str) -> Keys {
    // round-trip through JSON to drop one field without a per-field match
    let mut v = serde_json::to_value(&k).expect("keys serialize");
    if let Some(map) = v.as_object_mut() {
        map.remove(name);
    }
    k = serde_json::from_value(v).expect("keys deserialize");
    k
}

/// Value of a required key.
pub fn required<T: Clone>(v: &Option<T>, key: &str) -> Result<T, ConfigError> {
    v.clone().ok_or_else(|| key_error(key, "required but missing"))
}

pub fn invalid(key: &str, msg: &str) -> ConfigError {
    key_error(key, msg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_prefers_later() {
        let a = Keys { replicas: Some(3), seed: Some(1), ..Default::default() };
        let b = Keys { seed: Some(9), ..Default::default() };
        let c = a.overlay(b);
        assert_eq!(c.replicas, Some(3));
        assert_eq!(c.seed, Some(9));
    }

    #[test]
    fn lists_parse_from_text_and_arrays() {
        let k: Keys = toml::from_str("p = [0.25, 0.5]\nn_grid = \"10,100\"\nbeta_bracket = 0.5").unwrap();
        assert_eq!(k.p.unwrap().0, vec![0.25, 0.5]);
        assert_eq!(k.n_grid.unwrap().0, vec![10, 100]);
        assert_eq!(k.beta_bracket.unwrap().0, vec![0.5]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = toml::from_str::<Keys>("n_stepz = 3").unwrap_err();
        assert!(err.message().contains("n_stepz"));
    }

    #[test]
    fn inapplicable_flag_is_rejected() {
        let k = Keys { r_max: Some(3), ..Default::default() };
        let err = resolve(Experiment::Gof, None, k).unwrap_err();
        assert!(err.0.contains("r_max"));
    }
}
