use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};

/// Flat `key = value` record of one command invocation.
#[derive(Debug, Clone)]
pub struct RunManifest {
    command: String,
    entries: Vec<(String, String)>,
    started: Instant,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            entries: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = format!("command = {}\n", self.command);
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out.push_str(&format!(
            "wall_clock_seconds = {:.3}\n",
            self.started.elapsed().as_secs_f64()
        ));
        out
    }

    /// Writes `<dir>/<command>.manifest` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.manifest", self.command));
        fs::write(&path, self.render()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Parses a rendered manifest back into key/value pairs.
    pub fn parse(text: &str) -> Vec<(String, String)> {
        text.lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.trim().to_string(), v.to_string()))
            .collect()
    }
}
