//! Application configuration.
//!
//! Values are layered: command-line flags override environment variables,
//! which override the TOML config file, which overrides built-in defaults.
//!
//! ```toml
//! listen_addr = "127.0.0.1:8088"
//! log_level = "info"
//!
//! [embedder]
//! backend = "remote"
//! remote_url = "http://127.0.0.1:9000/embed"
//! dim = 1024
//!
//! [reward]
//! theta = 0.8
//! beta = 0.85
//!
//! [tables]
//! dir = "tables"          # relative to this file
//! homophone = "extra/homophone.tsv"
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use cec_core::embedding::EMBED_URL_ENV;
use cec_core::perturb::TableKind;
use cec_core::{Backend, ConfusionTables, EmbedderConfig, RewardParams, TablePaths};
use serde::Deserialize;

pub const LISTEN_ADDR_ENV: &str = "CEC_LISTEN_ADDR";
pub const LOG_LEVEL_ENV: &str = "CEC_LOG_LEVEL";
pub const DEFAULT_LISTEN_ADDR: &str = "127.0.0.1:8088";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogLevel {
    Error,
    Warn,
    #[default]
    Info,
    Debug,
    Trace,
}

impl LogLevel {
    pub fn as_filter(self) -> tracing::Level {
        match self {
            LogLevel::Error => tracing::Level::ERROR,
            LogLevel::Warn => tracing::Level::WARN,
            LogLevel::Info => tracing::Level::INFO,
            LogLevel::Debug => tracing::Level::DEBUG,
            LogLevel::Trace => tracing::Level::TRACE,
        }
    }
}

impl FromStr for LogLevel {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "error" => LogLevel::Error,
            "warn" | "warning" => LogLevel::Warn,
            "info" => LogLevel::Info,
            "debug" => LogLevel::Debug,
            "trace" => LogLevel::Trace,
            other => bail!("unknown log level {other:?}"),
        })
    }
}

impl fmt::Display for LogLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogLevel::Error => "error",
            LogLevel::Warn => "warn",
            LogLevel::Info => "info",
            LogLevel::Debug => "debug",
            LogLevel::Trace => "trace",
        })
    }
}

/// Where to find confusion tables. `dir` supplies every conventionally named
/// file it contains; explicit per-table paths win over `dir`. With nothing
/// set, the builtin starter tables are used.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TablesConfig {
    pub dir: Option<PathBuf>,
    pub homophone: Option<PathBuf>,
    pub visual: Option<PathBuf>,
    pub split: Option<PathBuf>,
    pub merge: Option<PathBuf>,
    pub symbol_insert: Option<PathBuf>,
    pub symbol_substitute: Option<PathBuf>,
}

impl TablesConfig {
    fn files_mut(&mut self) -> [&mut Option<PathBuf>; 7] {
        [
            &mut self.dir,
            &mut self.homophone,
            &mut self.visual,
            &mut self.split,
            &mut self.merge,
            &mut self.symbol_insert,
            &mut self.symbol_substitute,
        ]
    }

    pub fn is_builtin(&self) -> bool {
        self == &TablesConfig::default()
    }

    pub fn paths(&self) -> TablePaths {
        let mut paths = self.dir.as_deref().map(TablePaths::from_dir).unwrap_or_default();
        let explicit = [
            (&mut paths.homophone, &self.homophone),
            (&mut paths.visual, &self.visual),
            (&mut paths.split, &self.split),
            (&mut paths.merge, &self.merge),
            (&mut paths.symbol_insert, &self.symbol_insert),
            (&mut paths.symbol_substitute, &self.symbol_substitute),
        ];
        for (slot, value) in explicit {
            if value.is_some() {
                slot.clone_from(value);
            }
        }
        paths
    }

    pub fn load(&self) -> Result<ConfusionTables> {
        if self.is_builtin() {
            return Ok(ConfusionTables::builtin());
        }
        if let Some(dir) = &self.dir {
            if !dir.is_dir() {
                bail!("table directory {} does not exist", dir.display());
            }
        }
        let paths = self.paths();
        for kind in TableKind::ALL {
            if let Some(p) = paths.get(kind) {
                if !p.is_file() {
                    bail!("{kind} table {} does not exist", p.display());
                }
            }
        }
        if paths.is_empty() {
            bail!("no table files found in {}", self.dir.as_deref().unwrap_or(Path::new("")).display());
        }
        Ok(ConfusionTables::load(&paths)?)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub embedder: EmbedderConfig,
    pub reward: RewardParams,
    pub tables: TablesConfig,
    pub listen_addr: String,
    pub log_level: LogLevel,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            embedder: EmbedderConfig::default(),
            reward: RewardParams::default(),
            tables: TablesConfig::default(),
            listen_addr: DEFAULT_LISTEN_ADDR.to_string(),
            log_level: LogLevel::default(),
        }
    }
}

/// Values given on the command line. `None` leaves the lower layers alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub embedder: Option<Backend>,
    pub embed_url: Option<String>,
    pub theta: Option<f64>,
    pub beta: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub tables_dir: Option<PathBuf>,
    pub listen_addr: Option<String>,
    pub log_level: Option<LogLevel>,
}

impl AppConfig {
    /// Parse a TOML document. Relative table paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: AppConfig = toml::from_str(text)?;
        for slot in cfg.tables.files_mut() {
            if let Some(p) = slot.as_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Build the effective configuration from all layers. `env` looks up
    /// environment variables.
    pub fn resolve(file: Option<&Path>, env: impl Fn(&str) -> Option<String>, flags: &Overrides) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        cfg.apply_env(env)?;
        cfg.apply_flags(flags);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<()> {
        let non_empty = |k: &str| env(k).filter(|v| !v.trim().is_empty());
        if let Some(url) = non_empty(EMBED_URL_ENV) {
            self.embedder.remote_url = Some(url);
        }
        if let Some(addr) = non_empty(LISTEN_ADDR_ENV) {
            self.listen_addr = addr;
        }
        if let Some(level) = non_empty(LOG_LEVEL_ENV) {
            self.log_level = level.parse().context(LOG_LEVEL_ENV)?;
        }
        Ok(())
    }

    pub fn apply_flags(&mut self, o: &Overrides) {
        if let Some(b) = o.embedder {
            self.embedder.backend = b;
        }
        if let Some(url) = &o.embed_url {
            self.embedder.remote_url = Some(url.clone());
        }
        let reward = &mut self.reward;
        for (slot, value) in [
            (&mut reward.theta, o.theta),
            (&mut reward.beta, o.beta),
            (&mut reward.alpha, o.alpha),
            (&mut reward.gamma, o.gamma),
        ] {
            if let Some(v) = value {
                *slot = v;
            }
        }
        if let Some(dir) = &o.tables_dir {
            self.tables = TablesConfig { dir: Some(dir.clone()), ..Default::default() };
        }
        if let Some(addr) = &o.listen_addr {
            self.listen_addr = addr.clone();
        }
        if let Some(level) = o.log_level {
            self.log_level = level;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.embedder.validate().context("embedder config")?;
        self.reward.validate().context("reward config")?;
        Ok(())
    }
}
