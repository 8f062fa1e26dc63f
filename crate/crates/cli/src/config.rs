//! Run configuration: flags override a key=value config file, which
//! overrides `CORANK_PREC` and built-in defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use corank::scalar::parse_ratio;
use corank::{Error, Precision, Result};
use serde::Serialize;

pub const PREC_ENV: &str = "CORANK_PREC";

/// Everything a run depends on. Two runs with equal configs produce
/// byte-identical output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub precision_bits: u32,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::domain(format!(
                "{}:{}: expected key=value",
                path.display(),
                lineno + 1
            ))
        })?;
        out.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(out)
}

/// Global settings as given on the command line.
#[derive(Debug, Default)]
pub struct GlobalFlags {
    pub seed: Option<u64>,
    pub prec: Option<u32>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

const GLOBAL_KEYS: [&str; 4] = ["seed", "prec", "workers", "out"];

/// Merge flags over the file over defaults. `keys` lists
/// `(name, flag value, default)` for the subcommand.
pub fn resolve(
    command: &str,
    keys: &[(&str, Option<String>, Option<&str>)],
    globals: GlobalFlags,
    file: BTreeMap<String, String>,
) -> Result<RunConfig> {
    for k in file.keys() {
        if !GLOBAL_KEYS.contains(&k.as_str()) && !keys.iter().any(|(name, _, _)| name == k) {
            return Err(Error::domain(format!(
                "unknown config key {k:?} for {command}"
            )));
        }
    }
    let mut params = BTreeMap::new();
    for (name, flag, default) in keys {
        let v = flag
            .clone()
            .or_else(|| file.get(*name).cloned())
            .or(default.map(str::to_string));
        if let Some(v) = v {
            params.insert(name.to_string(), v);
        }
    }
    let seed = match globals.seed {
        Some(s) => s,
        None => file
            .get("seed")
            .map(|s| parse_num::<u64>("seed", s))
            .transpose()?
            .unwrap_or(0),
    };
    let prec_bits = match globals.prec {
        Some(p) => p,
        None => match file.get("prec") {
            Some(s) => parse_num("prec", s)?,
            None => match std::env::var(PREC_ENV) {
                Ok(s) => parse_num(PREC_ENV, &s)?,
                Err(_) => Precision::default().bits(),
            },
        },
    };
    let precision_bits = Precision::new(prec_bits)?.bits();
    let workers = match globals.workers {
        Some(w) => Some(w),
        None => file
            .get("workers")
            .map(|s| parse_num("workers", s))
            .transpose()?,
    };
    let output = globals.out.or_else(|| file.get("out").map(PathBuf::from));
    Ok(RunConfig {
        command: command.to_string(),
        params,
        seed,
        precision_bits,
        workers,
        output,
    })
}

fn parse_num<T: FromStr>(key: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::domain(format!("{key}: cannot parse {s:?}")))
}

impl RunConfig {
    pub fn precision(&self) -> Precision {
        Precision::new(self.precision_bits).expect("validated in resolve")
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::domain(format!("missing --{key}")))
    }

    pub fn num<T: FromStr>(&self, key: &str) -> Result<T> {
        parse_num(key, self.require(key)?)
    }

    pub fn ratio(&self, key: &str) -> Result<num_rational::BigRational> {
        let s = self.require(key)?;
        parse_ratio(s)
            .ok_or_else(|| Error::domain(format!("{key}: {s:?} is not a rational number")))
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.get(key), Some("true" | "1" | "yes"))
    }

    /// `a..b`, both ends included.
    pub fn range(&self, key: &str) -> Result<std::ops::RangeInclusive<u32>> {
        let s = self.require(key)?;
        let (a, b) = s
            .split_once("..=")
            .or_else(|| s.split_once(".."))
            .ok_or_else(|| {
                Error::domain(format!("{key}: expected a range like 1..8, got {s:?}"))
            })?;
        let (a, b): (u32, u32) = (parse_num(key, a)?, parse_num(key, b)?);
        if a > b {
            return Err(Error::domain(format!("{key}: empty range {s:?}")));
        }
        Ok(a..=b)
    }

    pub fn header_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
