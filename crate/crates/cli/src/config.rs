//! Sectioned `key = value` configuration files.

use indexmap::IndexMap;
use std::path::Path;

use ini::Ini;

use crate::error::{CliError, Result};
use crate::units::{self, Quantity};

/// A parsed configuration file: ordered sections of string values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    sections: Vec<(String, IndexMap<String, String>)>,
}

fn strip_comment(value: &str) -> &str {
    value.split([';', '#']).next().unwrap_or("").trim()
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::config(format!("cannot parse config: {e}")))?;
        let mut cfg = RawConfig::default();
        for (section, props) in ini.iter() {
            let Some(name) = section else {
                if let Some((key, _)) = props.iter().next() {
                    return Err(CliError::config(format!("key `{key}` appears before any [section]")));
                }
                continue;
            };
            for (key, value) in props.iter() {
                cfg.insert(name, key, strip_comment(value))?;
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    fn insert(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let idx = match self.sections.iter().position(|(s, _)| s == section) {
            Some(i) => i,
            None => {
                self.sections.push((section.to_string(), IndexMap::new()));
                self.sections.len() - 1
            }
        };
        if self.sections[idx].1.insert(key.to_string(), value.to_string()).is_some() {
            return Err(CliError::config(format!("{section}.{key} given twice")));
        }
        Ok(())
    }

    /// Overrides `section.key` (the section is everything before the last dot).
    pub fn set(&mut self, path: &str, value: &str) -> Result<()> {
        let (section, key) = path
            .rsplit_once('.')
            .ok_or_else(|| CliError::config(format!("parameter path `{path}` must look like section.key")))?;
        let entry = self
            .sections
            .iter_mut()
            .find(|(s, _)| s == section)
            .ok_or_else(|| CliError::config(format!("parameter path `{path}`: no section [{section}]")))?;
        entry.1.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn section_names(&self) -> impl Iterator<Item = &str> {
        self.sections.iter().map(|(s, _)| s.as_str())
    }

    /// Takes a section out for consumption (empty if absent).
    pub fn take(&mut self, name: &str) -> Section {
        let entries = match self.sections.iter().position(|(s, _)| s == name) {
            Some(i) => self.sections.remove(i).1,
            None => IndexMap::new(),
        };
        Section {
            name: name.to_string(),
            entries,
        }
    }

    pub fn has(&self, name: &str) -> bool {
        self.sections.iter().any(|(s, _)| s == name)
    }

    /// Errors if any section has not been consumed.
    pub fn finish(self) -> Result<()> {
        match self.sections.first() {
            Some((name, _)) => Err(CliError::config(format!("unknown section [{name}]"))),
            None => Ok(()),
        }
    }
}

/// One section whose keys are removed as they are read, so that leftovers
/// can be reported as unknown.
#[derive(Debug)]
pub struct Section {
    pub name: String,
    entries: IndexMap<String, String>,
}

impl Section {
    pub fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn raw(&mut self, key: &str) -> Option<String> {
        self.entries.shift_remove(key)
    }

    pub fn require_raw(&mut self, key: &str) -> Result<String> {
        self.raw(key)
            .ok_or_else(|| CliError::config(format!("missing required setting {}", self.key(key))))
    }

    pub fn quantity(&mut self, key: &str, q: Quantity) -> Result<Option<f64>> {
        let full = self.key(key);
        self.raw(key).map(|v| units::parse(&full, &v, q)).transpose()
    }

    pub fn require(&mut self, key: &str, q: Quantity) -> Result<f64> {
        let full = self.key(key);
        let v = self.require_raw(key)?;
        units::parse(&full, &v, q)
    }

    pub fn list(&mut self, key: &str, q: Quantity) -> Result<Option<Vec<f64>>> {
        let full = self.key(key);
        self.raw(key).map(|v| units::parse_list(&full, &v, q)).transpose()
    }

    pub fn flag(&mut self, key: &str) -> Result<Option<bool>> {
        let full = self.key(key);
        self.raw(key)
            .map(|v| match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "on" | "1" => Ok(true),
                "false" | "no" | "off" | "0" => Ok(false),
                _ => Err(CliError::config(format!("{full}: expected true or false, got `{v}`"))),
            })
            .transpose()
    }

    pub fn count(&mut self, key: &str) -> Result<Option<usize>> {
        let full = self.key(key);
        self.raw(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| CliError::config(format!("{full}: expected a non-negative integer, got `{v}`")))
            })
            .transpose()
    }

    /// One of a fixed set of lowercase words.
    pub fn choice<T: Copy>(&mut self, key: &str, options: &[(&str, T)]) -> Result<Option<T>> {
        let full = self.key(key);
        self.raw(key)
            .map(|v| {
                options
                    .iter()
                    .find(|(name, _)| name.eq_ignore_ascii_case(&v))
                    .map(|(_, t)| *t)
                    .ok_or_else(|| {
                        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                        CliError::config(format!("{full}: `{v}` is not one of {}", names.join(", ")))
                    })
            })
            .transpose()
    }

    /// Removes and returns every remaining entry, in file order.
    pub fn drain(&mut self) -> Vec<(String, String)> {
        std::mem::take(&mut self.entries).into_iter().collect()
    }

    /// Errors on any key that was not read.
    pub fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            Some(k) => Err(CliError::config(format!("unknown key {}.{k}", self.name))),
            None => Ok(()),
        }
    }
}
