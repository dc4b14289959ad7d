//! Run settings: a flat `key = value` file overlaid by command-line flags.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Keys that select where results go rather than what they are.
const UNHASHED: [&str; 1] = ["out"];

pub struct Settings {
    command: &'static str,
    values: BTreeMap<String, String>,
    /// Content digests of input files, keyed by the setting that names them.
    inputs: BTreeMap<String, String>,
}

fn canonical_key(key: &str) -> String {
    match key.replace('_', "-").as_str() {
        "kernel-path" => "kernel".into(),
        "output-path" => "out".into(),
        k => k.into(),
    }
}

impl Settings {
    /// Reads `config` (if any), then applies every flag that was given.
    /// `allowed` lists the keys this command understands.
    pub fn load<F: Serialize>(
        command: &'static str,
        allowed: &[&str],
        config: Option<&Path>,
        flags: &F,
    ) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
            for (n, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| CliError::config(format!("{}:{}: expected `key = value`", path.display(), n + 1)))?;
                values.insert(canonical_key(k.trim()), v.trim().to_string());
            }
        }
        let flags = serde_json::to_value(flags).expect("flag structs serialize to objects");
        for (k, v) in flags.as_object().into_iter().flatten() {
            let v = match v {
                Value::Null | Value::Bool(false) => continue,
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            values.insert(canonical_key(k), v);
        }
        // `model` in an engine config names the engine; commands that take
        // a model setting of their own list it in `allowed`.
        let model_is_setting = allowed.contains(&"model");
        if let Some(bad) = values.keys().find(|k| (*k != "model" || model_is_setting) && !allowed.contains(&k.as_str()))
        {
            return Err(CliError::config(format!(
                "unknown key `{bad}` for `{command}` (expected one of: {})",
                allowed.join(", ")
            )));
        }
        if !model_is_setting {
            if let Some(model) = values.remove("model") {
                if !command.starts_with(model.as_str()) {
                    return Err(CliError::config(format!("config is for model `{model}`, command is `{command}`")));
                }
            }
        }
        Ok(Self { command, values, inputs: BTreeMap::new() })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::config(format!("bad value `{v}` for `{key}`: {e}"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.get(key)?.ok_or_else(|| CliError::config(format!("missing required setting `{key}`")))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        Ok(self.get::<bool>(key)?.unwrap_or(false))
    }

    /// Comma-separated reals.
    pub fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let raw = self.raw(key).ok_or_else(|| CliError::config(format!("missing required setting `{key}`")))?;
        raw.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| CliError::config(format!("bad entry `{s}` in `{key}`: {e}"))))
            .collect()
    }

    /// Reads the file named by `key` and folds its contents into the hash.
    pub fn read_input(&mut self, key: &str) -> Result<Vec<u8>, CliError> {
        let path: String = self.require(key)?;
        let bytes =
            std::fs::read(&path).map_err(|e| CliError::config(format!("cannot read {key} file {path}: {e}")))?;
        self.inputs.insert(key.to_string(), hex(&Sha256::digest(&bytes)));
        Ok(bytes)
    }

    /// SHA-256 over the command, every result-affecting setting and the
    /// contents of every input file.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update(b"\n");
        for (k, v) in self.values.iter().filter(|(k, _)| !UNHASHED.contains(&k.as_str())) {
            h.update(format!("{k}={v}\n").as_bytes());
        }
        for (k, v) in &self.inputs {
            h.update(format!("{k}#sha256={v}\n").as_bytes());
        }
        hex(&h.finalize())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
