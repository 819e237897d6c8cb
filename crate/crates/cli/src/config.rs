use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use tabqa_core::{EndpointConfig, PipelineConfig};

pub const CONFIG_FILE: &str = "tabqa.toml";
/// Names an alternative config file.
pub const CONFIG_ENV: &str = "TABQA_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ExecutorKind {
    Process,
    Stub,
}

/// Everything the commands need once files, environment and flags are merged.
#[derive(Debug, Clone, Serialize)]
pub struct AppConfig {
    pub data_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub out_dir: PathBuf,
    pub endpoint: EndpointConfig,
    pub pipeline: PipelineConfig,
    pub backend: BackendKind,
    pub mock_fixture: Option<PathBuf>,
    pub executor: ExecutorKind,
    /// Command line of the sandbox runner for the process executor.
    pub runner: String,
    pub stub_fixture: Option<PathBuf>,
    pub max_concurrent: usize,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            data_dir: "data".into(),
            cache_dir: ".tabqa/cache".into(),
            out_dir: "runs".into(),
            endpoint: EndpointConfig::default(),
            pipeline: PipelineConfig::default(),
            backend: BackendKind::Http,
            mock_fixture: None,
            executor: ExecutorKind::Process,
            runner: "sandbox-runner".into(),
            stub_fixture: None,
            max_concurrent: tabqa_core::exec::DEFAULT_MAX_CONCURRENT,
        }
    }
}

/// On-disk form. Every key is optional; relative paths resolve against the
/// file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    data_dir: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    endpoint: Option<EndpointConfig>,
    pipeline: Option<PipelineConfig>,
    backend: Option<BackendKind>,
    mock_fixture: Option<PathBuf>,
    executor: Option<ExecutorKind>,
    runner: Option<String>,
    stub_fixture: Option<PathBuf>,
    max_concurrent: Option<usize>,
}

/// Values given on the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub data_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub backend: Option<BackendKind>,
    pub mock_fixture: Option<PathBuf>,
    pub executor: Option<ExecutorKind>,
    pub runner: Option<String>,
    pub stub_fixture: Option<PathBuf>,
    pub base_url: Option<String>,
    pub model: Option<String>,
    pub max_repairs: Option<usize>,
    pub parallelism: Option<usize>,
}

impl AppConfig {
    /// Picks the config file from `--config`, then `$TABQA_CONFIG`, then
    /// `./tabqa.toml` if present, and applies flag overrides on top.
    pub fn load(explicit: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        let path = match (explicit, from_env) {
            (Some(p), _) => Some(p.to_path_buf()),
            (None, Some(p)) => Some(p),
            (None, None) => Some(PathBuf::from(CONFIG_FILE)).filter(|p| p.is_file()),
        };
        let mut config = match path {
            Some(path) => Self::from_file(&path)?,
            None => Self::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let file: FileConfig = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };

        let mut config = Self::default();
        if let Some(p) = file.pipeline {
            config.pipeline = p;
        }
        config.endpoint = file.endpoint.unwrap_or_else(|| config.pipeline.endpoint.clone());
        config.data_dir = file.data_dir.map(resolve).unwrap_or(config.data_dir);
        config.cache_dir = file.cache_dir.map(resolve).unwrap_or(config.cache_dir);
        config.out_dir = file.out_dir.map(resolve).unwrap_or(config.out_dir);
        config.mock_fixture = file.mock_fixture.map(resolve);
        config.stub_fixture = file.stub_fixture.map(resolve);
        config.backend = file.backend.unwrap_or(config.backend);
        config.executor = file.executor.unwrap_or(config.executor);
        config.runner = file.runner.unwrap_or(config.runner);
        config.max_concurrent = file.max_concurrent.unwrap_or(config.max_concurrent);
        Ok(config)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let o = o.clone();
        self.data_dir = o.data_dir.unwrap_or(std::mem::take(&mut self.data_dir));
        self.cache_dir = o.cache_dir.unwrap_or(std::mem::take(&mut self.cache_dir));
        self.out_dir = o.out_dir.unwrap_or(std::mem::take(&mut self.out_dir));
        self.backend = o.backend.unwrap_or(self.backend);
        self.mock_fixture = o.mock_fixture.or(self.mock_fixture.take());
        self.executor = o.executor.unwrap_or(self.executor);
        self.runner = o.runner.unwrap_or(std::mem::take(&mut self.runner));
        self.stub_fixture = o.stub_fixture.or(self.stub_fixture.take());
        if let Some(url) = o.base_url {
            self.endpoint.base_url = url;
        }
        if let Some(model) = o.model {
            self.endpoint.model_id = model;
        }
        if let Some(n) = o.max_repairs {
            self.pipeline.max_repairs = n;
        }
        if let Some(n) = o.parallelism {
            self.pipeline.parallelism = n;
        }
        self.pipeline.endpoint = self.endpoint.clone();
    }

    pub fn validate(&self) -> Result<()> {
        match (self.backend, &self.mock_fixture) {
            (BackendKind::Mock, None) => bail!("backend \"mock\" needs mock_fixture"),
            (BackendKind::Http, Some(_)) => bail!("mock_fixture is only valid with backend \"mock\""),
            _ => {}
        }
        if self.executor == ExecutorKind::Stub && self.stub_fixture.is_none() {
            bail!("executor \"stub\" needs stub_fixture");
        }
        if self.executor == ExecutorKind::Process && self.runner.trim().is_empty() {
            bail!("executor \"process\" needs a runner command");
        }
        if self.pipeline.parallelism == 0 {
            bail!("parallelism must be at least 1");
        }
        if self.max_concurrent == 0 {
            bail!("max_concurrent must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let path = dir.join(CONFIG_FILE);
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn file_values_resolve_against_its_directory() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            dir.path(),
            "data_dir = \"datasets\"\nbackend = \"mock\"\nmock_fixture = \"/abs/mock.jsonl\"\n\
             [endpoint]\nmodel_id = \"m\"\n[pipeline]\nmax_repairs = 3\n",
        );
        let config = AppConfig::from_file(&path).unwrap();
        assert_eq!(config.data_dir, dir.path().join("datasets"));
        assert_eq!(config.mock_fixture.as_deref(), Some(Path::new("/abs/mock.jsonl")));
        assert_eq!(config.endpoint.model_id, "m");
        assert_eq!(config.endpoint.max_tokens, 4096);
        assert_eq!(config.pipeline.max_repairs, 3);
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "out_dir = \"/from/file\"\n[pipeline]\nmax_repairs = 3\nparallelism = 8\n");
        let overrides = Overrides {
            out_dir: Some("/from/flag".into()),
            max_repairs: Some(1),
            model: Some("flagged".into()),
            ..Overrides::default()
        };
        let config = AppConfig::load(Some(&path), &overrides).unwrap();
        assert_eq!(config.out_dir, Path::new("/from/flag"));
        assert_eq!(config.pipeline.max_repairs, 1);
        assert_eq!(config.pipeline.parallelism, 8);
        assert_eq!(config.pipeline.endpoint.model_id, "flagged");
    }

    #[test]
    fn mock_fixture_required_iff_mock() {
        let mut config = AppConfig {
            backend: BackendKind::Mock,
            ..AppConfig::default()
        };
        assert!(config.validate().is_err());
        config.mock_fixture = Some("m.jsonl".into());
        assert!(config.validate().is_ok());
        config.backend = BackendKind::Http;
        assert!(config.validate().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "datadir = \"x\"\n");
        assert!(AppConfig::from_file(&path).is_err());
    }
}
