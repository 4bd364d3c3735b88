//! Drivers behind the command-line subcommands.
//!
//! Each subcommand has a config struct, a `run_*` function returning plain
//! data, and a `write_*` step producing the CSV reports. Every report starts
//! with the effective configuration as `# key = value` comment lines.

pub mod bench;
pub mod estimate;
pub mod rank;
pub mod rolling;
pub mod simulate;

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Layered settings: command-line flag, then config file, then built-in default.
///
/// Every value looked up is remembered so the effective configuration can be
/// echoed into reports.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    effective: Vec<(String, String)>,
}

impl Settings {
    /// Settings with no config file.
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses a `key = value` config file (TOML syntax, flat table).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| Error::Config(format!("invalid config file: {e}")))?;
        let mut file = BTreeMap::new();
        for (k, v) in table {
            let s = match v {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                toml::Value::Array(items) => items
                    .iter()
                    .map(|i| match i {
                        toml::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                other => {
                    return Err(Error::Config(format!(
                        "config key `{k}` has unsupported value {other}"
                    )))
                }
            };
            file.insert(k, s);
        }
        Ok(Settings {
            file,
            effective: Vec::new(),
        })
    }

    fn resolve<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(raw.parse::<T>().map_err(|e| {
                    Error::Config(format!("config key `{key}` = `{raw}`: {e}"))
                })?),
                None => None,
            },
        };
        Ok(value)
    }

    /// Resolves `key`, falling back to `default`, and records it.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.resolve(key, flag)?.unwrap_or(default);
        self.effective.push((key.to_string(), v.to_string()));
        Ok(v)
    }

    /// Resolves an optional `key`; recorded only when present.
    pub fn get_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let v = self.resolve(key, flag)?;
        if let Some(v) = &v {
            self.effective.push((key.to_string(), v.to_string()));
        }
        Ok(v)
    }

    /// Resolves `key` without echoing it (execution-only settings such as
    /// thread counts or output paths, which must not change report bytes).
    pub fn get_quiet<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        Ok(self.resolve(key, flag)?.unwrap_or(default))
    }

    /// `key = value` lines for every recorded setting.
    pub fn echo(&self) -> Vec<String> {
        self.effective
            .iter()
            .map(|(k, v)| format!("{k} = {v}"))
            .collect()
    }
}

/// Comma-separated list wrapper usable with [`Settings`].
#[derive(Debug, Clone, PartialEq)]
pub struct CsvList<T>(pub Vec<T>);

impl<T: FromStr> FromStr for CsvList<T>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<T>().map_err(|e| e.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err("empty list".to_string())
                } else {
                    Ok(CsvList(v))
                }
            })
    }
}

impl<T: Display> Display for CsvList<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Runs `f` on a rayon pool with exactly `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    if threads == 0 {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Table cell in the `mean(sd)` style, e.g. `0.0384(0.0041)`.
pub fn mean_sd_cell(mean: f64, sd: f64, decimals: usize) -> String {
    format!("{mean:.decimals$}({sd:.decimals$})")
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
        ))
    }
}
