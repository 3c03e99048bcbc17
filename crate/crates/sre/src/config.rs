//! Run configuration: a JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sre_core::data::{make_synthetic_dataset, LabeledDataset, SyntheticSpec};
use sre_core::network::NetworkConfig;
use sre_core::train::TrainConfig;

use crate::npz::load_dataset;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DataSource {
    Npz(PathBuf),
    Synthetic { synthetic: SyntheticSpec },
}

impl DataSource {
    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DataSource::Npz(path) => load_dataset(path),
            DataSource::Synthetic { synthetic } => Ok(make_synthetic_dataset(synthetic)?),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub data: Option<DataSource>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Flag values layered over the config file, in increasing precedence.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// `key=value` pairs; see [`apply_override`].
    pub pairs: Vec<String>,
}

const SECTIONS: [&str; 2] = ["network", "train"];

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Sets `key` to `value` in a resolved config tree.
///
/// Dotted keys are paths from the root (`train.epochs=5`). A bare key is set
/// in every section that has it (`seed=3` sets both seeds). Values are parsed
/// as JSON and fall back to plain strings (`conv_kind=standard`).
pub fn apply_override(tree: &mut Value, pair: &str) -> Result<()> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {pair:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let key = key.trim();
    if key.contains('.') || tree.get(key).is_some() {
        let mut node = &mut *tree;
        for part in key.split('.') {
            if !node.is_object() {
                *node = Value::Object(Default::default());
            }
            node = node
                .as_object_mut()
                .unwrap()
                .entry(part.to_string())
                .or_insert(Value::Null);
        }
        *node = value;
        return Ok(());
    }
    let mut hit = false;
    for section in SECTIONS {
        if let Some(slot) = tree.get_mut(section).and_then(|s| s.get_mut(key)) {
            *slot = value.clone();
            hit = true;
        }
    }
    if hit {
        Ok(())
    } else {
        Err(Error::Config(format!("unknown config key {key:?}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Merges the file at `path` over the defaults, then applies `over`.
    /// The file may give any subset of fields.
    pub fn resolve(path: Option<&Path>, over: &Overrides) -> Result<Self> {
        let mut tree = serde_json::to_value(RunConfig::default())?;
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let file: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            if !file.is_object() {
                return Err(Error::Config(format!("{}: expected a JSON object", p.display())));
            }
            merge(&mut tree, file);
        }
        if let Some(d) = &over.data {
            tree["data"] = serde_json::to_value(d)?;
        }
        if let Some(o) = &over.out {
            tree["out"] = serde_json::to_value(o)?;
        }
        if let Some(s) = over.seed {
            tree["network"]["seed"] = s.into();
            tree["train"]["seed"] = s.into();
        }
        for pair in &over.pairs {
            apply_override(&mut tree, pair)?;
        }
        let resolved: RunConfig = serde_json::from_value(tree).map_err(|e| Error::Config(e.to_string()))?;
        resolved.network.validate()?;
        resolved.train.validate()?;
        Ok(resolved)
    }

    pub fn to_pretty_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sre_core::network::ConvKind;

    #[test]
    fn bare_and_dotted_overrides() {
        let over = Overrides {
            seed: Some(9),
            pairs: vec![
                "conv_kind=standard".into(),
                "train.epochs=3".into(),
                "network.stages=[]".into(),
            ],
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(None, &over).unwrap();
        assert_eq!(cfg.network.conv_kind, ConvKind::Standard);
        assert_eq!(cfg.train.epochs, 3);
        assert!(cfg.network.stages.is_empty());
        assert_eq!((cfg.network.seed, cfg.train.seed), (9, 9));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let over = Overrides {
            pairs: vec!["no_such_key=1".into()],
            ..Overrides::default()
        };
        assert!(matches!(RunConfig::resolve(None, &over), Err(Error::Config(_))));
        assert!(RunConfig::from_json(r#"{"netwrk": {}}"#).is_err());
    }

    #[test]
    fn partial_files_merge_over_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"network": {"stem_channels": 4}, "train": {"epochs": 2}}"#).unwrap();
        let cfg = RunConfig::resolve(Some(&path), &Overrides::default()).unwrap();
        assert_eq!(cfg.network.stem_channels, 4);
        assert_eq!(cfg.network.stages, NetworkConfig::default().stages);
        assert_eq!(cfg.train.epochs, 2);
        std::fs::write(&path, r#"{"network": {"stem_chanels": 4}}"#).unwrap();
        assert!(RunConfig::resolve(Some(&path), &Overrides::default()).is_err());
    }

    #[test]
    fn data_sources_parse() {
        let cfg = RunConfig::from_json(r#"{"data": "x.npz"}"#).unwrap();
        assert_eq!(cfg.data, Some(DataSource::Npz("x.npz".into())));
        let cfg = RunConfig::from_json(r#"{"data": {"synthetic": {"kind": "blobs", "n": 10}}}"#).unwrap();
        assert!(matches!(cfg.data, Some(DataSource::Synthetic { .. })));
    }
}
