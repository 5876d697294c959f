//! Flat `key=value` run manifests.
//!
//! A manifest records the resolved settings of a run and the exact argument
//! list, so `exoci rerun` can repeat it. Keys are unique; order is kept.

use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string().replace(['\n', '\r'], " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Stores the argument list as `argc` and `arg.0`, `arg.1`, ….
    pub fn set_args(&mut self, args: &[String]) {
        self.set("argc", args.len());
        for (i, a) in args.iter().enumerate() {
            self.set(&format!("arg.{i}"), a);
        }
    }

    pub fn args(&self) -> Option<Vec<String>> {
        let n: usize = self.get("argc")?.parse().ok()?;
        (0..n).map(|i| self.get(&format!("arg.{i}")).map(String::from)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut m = Self::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Format {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: "expected key=value".into(),
                });
            };
            m.set(k.trim(), v);
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }
}
