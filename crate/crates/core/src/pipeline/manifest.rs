//! Run manifests: what went into a recipe run and what came out.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{PipelineConfig, Recipe};
use crate::error::{Error, Result};
use crate::io::open_reader;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = open_reader(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub recipe: Recipe,
    pub version: String,
    /// Hash over the tunables and the contents (not paths) of all inputs.
    pub config_hash: String,
    pub inputs: BTreeMap<String, InputRecord>,
    /// Output file name -> sha256.
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

impl Manifest {
    pub fn new(recipe: Recipe, config: &PipelineConfig) -> Result<Self> {
        let mut inputs = BTreeMap::new();
        for (field, path) in config.inputs() {
            let sha256 = sha256_file(&path)?;
            inputs.insert(
                field,
                InputRecord {
                    path: path.display().to_string(),
                    sha256,
                },
            );
        }
        let mut tunables = config.tunables();
        tunables.recipe = Some(recipe);
        let content: BTreeMap<&String, &String> =
            inputs.iter().map(|(k, v)| (k, &v.sha256)).collect();
        let canonical = serde_json::to_string(&(serde_json::to_value(&tunables)?, content))?;
        Ok(Manifest {
            recipe,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: sha256_hex(canonical.as_bytes()),
            inputs,
            outputs: BTreeMap::new(),
            counts: BTreeMap::new(),
        })
    }

    pub fn count(&mut self, key: &str, value: usize) {
        self.counts.insert(key.to_string(), value as u64);
    }

    /// Records the hash of an output file written under `dir`.
    pub fn record_output(&mut self, dir: &Path, name: &str) -> Result<()> {
        let sha = sha256_file(&dir.join(name))?;
        self.outputs.insert(name.to_string(), sha);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn hash_tracks_inputs_and_tunables_only() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        std::fs::write(&a, "x").unwrap();
        std::fs::write(&b, "x").unwrap();
        let mut cfg = PipelineConfig {
            corpus: Some(a.clone()),
            ..PipelineConfig::default()
        };
        let h0 = Manifest::new(Recipe::Sf, &cfg).unwrap().config_hash;

        // same content at another path, different output dir: unchanged
        cfg.corpus = Some(b.clone());
        cfg.output_dir = Some(dir.path().join("out"));
        assert_eq!(Manifest::new(Recipe::Sf, &cfg).unwrap().config_hash, h0);

        cfg.sf.th1 = 0.9;
        let h1 = Manifest::new(Recipe::Sf, &cfg).unwrap().config_hash;
        assert_ne!(h1, h0);

        cfg.sf.th1 = 0.8;
        std::fs::write(&b, "y").unwrap();
        let h2 = Manifest::new(Recipe::Sf, &cfg).unwrap().config_hash;
        assert_ne!(h2, h0);
        assert_ne!(Manifest::new(Recipe::Edl, &cfg).unwrap().config_hash, h2);
    }
}
