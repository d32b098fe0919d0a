//! Run configuration: defaults, overridden by a flat key=value config file,
//! overridden by `DBASE_*` environment variables (reserved for CI),
//! overridden by command-line flags.

use anyhow::{bail, Context, Result};
use std::collections::HashMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Text,
    Json,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub memory_budget_bytes: u64,
    pub max_abs_summand: u64,
    pub max_abs_partial: Option<u64>,
    pub pool: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
    pub format: OutFormat,
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            memory_budget_bytes: 8 << 30,
            max_abs_summand: 1 << 61,
            max_abs_partial: None,
            pool: None,
            checkpoint_dir: None,
            format: OutFormat::Text,
            parallelism: std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        }
    }
}

/// Parse integers in plain decimal or `2^k` form.
pub fn parse_int_pow(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let base: u64 = base.trim().parse().context("bad base")?;
        let exp: u32 = exp.trim().parse().context("bad exponent")?;
        return base
            .checked_pow(exp)
            .with_context(|| format!("{s} overflows 64 bits"));
    }
    Ok(s.replace('_', "").parse::<u64>()?)
}

fn parse_kv_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut map = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), lineno + 1);
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

const ENV_PREFIX: &str = "DBASE_";
const KEYS: [&str; 7] = [
    "memory_budget_bytes",
    "max_abs_summand",
    "max_abs_partial",
    "pool",
    "checkpoint_dir",
    "format",
    "parallelism",
];

impl RunConfig {
    /// Layer file and environment settings over the defaults.
    pub fn load(config_file: Option<&Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut layers: Vec<HashMap<String, String>> = Vec::new();
        if let Some(path) = config_file {
            layers.push(parse_kv_file(path)?);
        }
        let mut env_layer = HashMap::new();
        for key in KEYS {
            let env_key = format!("{ENV_PREFIX}{}", key.to_uppercase());
            if let Ok(v) = std::env::var(&env_key) {
                env_layer.insert(key.to_string(), v);
            }
        }
        layers.push(env_layer);
        for layer in layers {
            cfg.apply(&layer)?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, kv: &HashMap<String, String>) -> Result<()> {
        for (k, v) in kv {
            match k.as_str() {
                "memory_budget_bytes" => self.memory_budget_bytes = parse_int_pow(v)?,
                "max_abs_summand" => self.max_abs_summand = parse_int_pow(v)?,
                "max_abs_partial" => self.max_abs_partial = Some(parse_int_pow(v)?),
                "pool" => self.pool = Some(PathBuf::from(v)),
                "checkpoint_dir" => self.checkpoint_dir = Some(PathBuf::from(v)),
                "format" => {
                    self.format = match v.as_str() {
                        "text" => OutFormat::Text,
                        "json" => OutFormat::Json,
                        other => bail!("unknown format {other:?} (expected text or json)"),
                    }
                }
                "parallelism" => self.parallelism = v.parse()?,
                other => bail!("unknown config key {other:?}"),
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory_budget_bytes < (64 << 20) {
            bail!("memory budget must be at least 64 MiB");
        }
        if self.parallelism < 1 {
            bail!("parallelism must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_syntax() {
        assert_eq!(parse_int_pow("2^61").unwrap(), 1 << 61);
        assert_eq!(parse_int_pow("1000").unwrap(), 1000);
        assert_eq!(parse_int_pow("1_000").unwrap(), 1000);
        assert!(parse_int_pow("2^70").is_err());
    }

    #[test]
    fn file_layering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dbase.conf");
        std::fs::write(&path, "# comment\nmemory_budget_bytes = 2^30\nformat=json\n").unwrap();
        let cfg = RunConfig::load(Some(&path)).unwrap();
        assert_eq!(cfg.memory_budget_bytes, 1 << 30);
        assert_eq!(cfg.format, OutFormat::Json);
        assert_eq!(cfg.max_abs_summand, 1 << 61);
    }

    #[test]
    fn bad_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dbase.conf");
        std::fs::write(&path, "no_such_key=1\n").unwrap();
        assert!(RunConfig::load(Some(&path)).is_err());
    }
}
