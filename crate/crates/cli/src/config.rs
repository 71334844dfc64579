//! Layered settings: built-in defaults, then an optional TOML file, then
//! command-line flags.
//!
//! The file has one table per command:
//!
//! ```toml
//! [train]
//! epochs = 20
//!
//! [attack]
//! rounds = 100
//! success = { conf_threshold = 0.5 }
//!
//! [bench]
//! budgets = [0.05, 0.035]
//! ```
//!
//! `bench` also picks up the `[attack]` table for its per-image attacks.
//! Keys that the target struct does not have are rejected.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

const SECTIONS: [&str; 3] = ["train", "attack", "bench"];

#[derive(Debug, Default)]
pub struct ConfigFile {
    table: Map<String, Value>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let table: toml::Table = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let Value::Object(table) =
            serde_json::to_value(table).map_err(|e| CliError::Config(e.to_string()))?
        else {
            unreachable!("a TOML table maps to a JSON object");
        };
        if let Some(k) = table.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(CliError::Config(format!(
                "{}: unknown section [{k}], expected one of {}",
                path.display(),
                SECTIONS.join(", ")
            )));
        }
        Ok(Self { table })
    }

    pub fn section(&self, name: &str) -> Option<&Value> {
        self.table.get(name)
    }
}

/// Overlays `over` onto `base`. Every key of `over` must already exist in
/// `base`; nested tables merge key by key, except tagged ones (with a
/// `kind` key), which replace the old value whole.
fn merge(base: &mut Value, over: &Value, path: &str) -> Result<(), CliError> {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) if !o.contains_key("kind") => {
            for (k, v) in o {
                let here = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                let slot = b
                    .get_mut(k)
                    .ok_or_else(|| CliError::Config(format!("unknown setting '{here}'")))?;
                merge(slot, v, &here)?;
            }
            Ok(())
        }
        (b, o) => {
            *b = o.clone();
            Ok(())
        }
    }
}

/// `defaults`, overridden by each layer in turn.
pub fn layered<T: Serialize + DeserializeOwned>(
    defaults: &T,
    layers: &[Option<&Value>],
) -> Result<T, CliError> {
    let mut value = serde_json::to_value(defaults).map_err(|e| CliError::Config(e.to_string()))?;
    for layer in layers.iter().flatten() {
        merge(&mut value, layer, "")?;
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("bad setting: {e}")))
}

/// Flags that were given, as a JSON object.
#[derive(Debug, Default)]
pub struct Flags(Map<String, Value>);

impl Flags {
    pub fn set(mut self, key: &str, value: Option<impl Serialize>) -> Self {
        if let Some(v) = value {
            self.0.insert(
                key.into(),
                serde_json::to_value(v).expect("flag values serialize"),
            );
        }
        self
    }

    pub fn value(self) -> Value {
        Value::Object(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use asc_core::AttackConfig;

    fn file(text: &str) -> ConfigFile {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("asc.toml");
        std::fs::write(&path, text).unwrap();
        ConfigFile::load(Some(&path)).unwrap()
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let f = file("[attack]\nrounds = 7\nstep_size = 0.2\n");
        let flags = Flags::default().set("rounds", Some(3)).value();
        let cfg: AttackConfig = layered(
            &AttackConfig::default(),
            &[f.section("attack"), Some(&flags)],
        )
        .unwrap();
        assert_eq!(cfg.rounds, 3);
        assert_eq!(cfg.step_size, 0.2);
        assert_eq!(cfg.sample_radius, AttackConfig::default().sample_radius);
    }

    #[test]
    fn nested_and_tagged_tables() {
        let f = file("[attack]\nsuccess = { conf_threshold = 0.7 }\nacceptance = { kind = \"annealing\", initial_temperature = 1.0, cooling = 0.9 }\n");
        let cfg: AttackConfig = layered(&AttackConfig::default(), &[f.section("attack")]).unwrap();
        assert_eq!(cfg.success.conf_threshold, 0.7);
        assert_eq!(cfg.success.iou_threshold, 0.5);
        assert!(matches!(
            cfg.acceptance,
            asc_core::attack::Acceptance::Annealing { .. }
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = file("[attack]\nrounds_typo = 7\n");
        let err = layered(&AttackConfig::default(), &[f.section("attack")]).unwrap_err();
        assert!(matches!(err, CliError::Config(m) if m.contains("rounds_typo")));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("asc.toml");
        std::fs::write(&path, "[atack]\n").unwrap();
        assert!(matches!(
            ConfigFile::load(Some(&path)),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn wrong_types_are_config_errors() {
        let f = file("[attack]\nrounds = \"many\"\n");
        assert!(matches!(
            layered(&AttackConfig::default(), &[f.section("attack")]),
            Err(CliError::Config(_))
        ));
    }
}
