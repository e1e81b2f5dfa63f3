use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How to compile and run one language. Command templates are argv lists;
/// `{source}` expands to the source file path and `{workdir}` to the run's
/// working directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguagePlugin {
    pub language_id: String,
    pub source_filename: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compile: Option<Vec<String>>,
    pub run: Vec<String>,
    /// Address-space limit override for runtimes that reserve large
    /// virtual regions up front.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address_space_bytes: Option<u64>,
}

#[derive(Debug, Error)]
pub enum PluginError {
    #[error("language {0:?} is already registered")]
    Duplicate(String),
    #[error("plugin {id:?}: {reason}")]
    Invalid { id: String, reason: String },
    #[error("plugin file {path}: {reason}")]
    Load { path: String, reason: String },
}

const BUILTIN: [&str; 3] = [include_str!("../plugins/python.toml"), include_str!("../plugins/c.toml"), include_str!("../plugins/java.toml")];

impl LanguagePlugin {
    pub fn from_toml(text: &str) -> Result<Self, PluginError> {
        let plugin: LanguagePlugin = toml::from_str(text).map_err(|e| PluginError::Load { path: "<inline>".into(), reason: e.to_string() })?;
        plugin.check()?;
        Ok(plugin)
    }

    fn check(&self) -> Result<(), PluginError> {
        let invalid = |reason: &str| Err(PluginError::Invalid { id: self.language_id.clone(), reason: reason.into() });
        if self.language_id.is_empty() || !self.language_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_+".contains(c)) {
            return invalid("language_id must be non-empty [A-Za-z0-9_+-]");
        }
        if self.source_filename.is_empty() || self.source_filename.contains('/') || self.source_filename.starts_with('.') {
            return invalid("source_filename must be a plain file name");
        }
        if self.run.is_empty() || self.compile.as_ref().is_some_and(|c| c.is_empty()) {
            return invalid("command templates must not be empty");
        }
        Ok(())
    }

    /// Whether every program the plugin invokes can be found.
    pub fn toolchain_available(&self) -> bool {
        self.compile.iter().chain(std::iter::once(&self.run)).all(|argv| {
            let program = &argv[0];
            program.contains('{') || find_on_path(program)
        })
    }
}

fn find_on_path(program: &str) -> bool {
    if program.contains('/') {
        return Path::new(program).is_file();
    }
    std::env::var_os("PATH").is_some_and(|paths| std::env::split_paths(&paths).any(|dir| dir.join(program).is_file()))
}

/// Registered languages, keyed by id.
#[derive(Debug, Default)]
pub struct Registry {
    plugins: RwLock<BTreeMap<String, Arc<LanguagePlugin>>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Python, C and Java plugins. Whether their toolchains exist on this
    /// host is checked at run time.
    pub fn with_builtin() -> Self {
        let registry = Registry::new();
        for text in BUILTIN {
            registry.register(LanguagePlugin::from_toml(text).expect("built-in plugin parses")).expect("built-in ids are unique");
        }
        registry
    }

    /// Registers every `*.toml` file in `dir`.
    pub fn load_dir(&self, dir: &Path) -> Result<usize, PluginError> {
        let load_err = |reason: String| PluginError::Load { path: dir.display().to_string(), reason };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| load_err(e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        for path in &paths {
            let text = std::fs::read_to_string(path).map_err(|e| PluginError::Load { path: path.display().to_string(), reason: e.to_string() })?;
            let plugin = LanguagePlugin::from_toml(&text).map_err(|e| PluginError::Load { path: path.display().to_string(), reason: e.to_string() })?;
            self.register(plugin)?;
        }
        Ok(paths.len())
    }

    pub fn register(&self, plugin: LanguagePlugin) -> Result<(), PluginError> {
        plugin.check()?;
        let mut plugins = self.plugins.write().unwrap_or_else(|p| p.into_inner());
        if plugins.contains_key(&plugin.language_id) {
            return Err(PluginError::Duplicate(plugin.language_id));
        }
        plugins.insert(plugin.language_id.clone(), Arc::new(plugin));
        Ok(())
    }

    pub fn get(&self, language_id: &str) -> Option<Arc<LanguagePlugin>> {
        self.plugins.read().unwrap_or_else(|p| p.into_inner()).get(language_id).cloned()
    }

    pub fn list(&self) -> Vec<Arc<LanguagePlugin>> {
        self.plugins.read().unwrap_or_else(|p| p.into_inner()).values().cloned().collect()
    }
}
