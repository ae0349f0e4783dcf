//! Pipeline configuration: one TOML file with a section per stage.
//!
//! ```toml
//! [grouping]
//! gap_coefficient = 0.025
//!
//! [classify]
//! threshold = 2
//!
//! [transform]
//! large_max_per_row = 3
//!
//! [layout]
//! margin = 48
//! soft_weights = { fill_width = 1.0 }
//!
//! [tv]
//! width = 1920
//! height = 1080
//!
//! [data]
//! templates = "templates.toml"   # relative to this file
//!
//! [run]
//! jobs = 4
//! ```
//!
//! Every key is optional; omitted ones take the built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifyConfig, TemplateCatalog};
use crate::grouping::GroupingConfig;
use crate::hierarchy::{Orientation, ScreenInfo, WidgetRules};
use crate::layout::{LayoutConfig, SizeTable};
use crate::transform::TransformConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("config references {what} {path}, which does not exist")]
    MissingFile { what: &'static str, path: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TvConfig {
    pub width: u32,
    pub height: u32,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            width: 1920,
            height: 1080,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub templates: Option<PathBuf>,
    pub size_table: Option<PathBuf>,
    pub widget_rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads for batch conversion; 0 uses every core.
    pub jobs: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub grouping: GroupingConfig,
    pub classify: ClassifyConfig,
    pub transform: TransformConfig,
    pub layout: LayoutConfig,
    pub tv: TvConfig,
    pub data: DataPaths,
    pub run: RunConfig,
}

/// Data files a pipeline runs with, built-in unless the config names others.
#[derive(Debug, Clone)]
pub struct Resources {
    pub templates: TemplateCatalog,
    pub size_table: SizeTable,
    pub widget_rules: WidgetRules,
}

impl PipelineConfig {
    /// Parses `text`; relative data paths are resolved against `base`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        if let Some(base) = base {
            for p in [
                &mut cfg.data.templates,
                &mut cfg.data.size_table,
                &mut cfg.data.widget_rules,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, path.parent())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.grouping.validate().map_err(|e| invalid(&e))?;
        self.classify.validate().map_err(|e| invalid(&e))?;
        self.transform.validate().map_err(|e| invalid(&e))?;
        self.layout.validate().map_err(|e| invalid(&e))?;
        self.tv_screen()?;
        let files = [
            ("template catalog", &self.data.templates),
            ("size table", &self.data.size_table),
            ("widget rules", &self.data.widget_rules),
        ];
        for (what, path) in files {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(ConfigError::MissingFile {
                        what,
                        path: p.display().to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn tv_screen(&self) -> Result<ScreenInfo, ConfigError> {
        if self.tv.width < self.tv.height {
            return Err(ConfigError::Invalid(format!(
                "TV screen {}x{} is not landscape",
                self.tv.width, self.tv.height
            )));
        }
        ScreenInfo::new(self.tv.width, self.tv.height, Orientation::Landscape)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn load_resources(&self) -> Result<Resources, ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        let templates = match &self.data.templates {
            Some(p) => TemplateCatalog::load(p).map_err(|e| invalid(&e))?,
            None => TemplateCatalog::builtin().clone(),
        };
        let size_table = match &self.data.size_table {
            Some(p) => SizeTable::load(p).map_err(|e| invalid(&e))?,
            None => SizeTable::builtin().clone(),
        };
        let widget_rules = match &self.data.widget_rules {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                WidgetRules::from_toml(&text).map_err(|e| invalid(&e))?
            }
            None => WidgetRules::builtin().clone(),
        };
        Ok(Resources {
            templates,
            size_table,
            widget_rules,
        })
    }
}
