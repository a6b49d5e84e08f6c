//! Output directory with a manifest. Every JSON file gets a `manifest_hash`
//! field and every CSV a leading `# manifest sha256:<hex>` line.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub expect: Vec<String>,
    pub config: Value,
    pub hash: String,
}

impl Manifest {
    /// The hash covers command, seed, expectations and resolved config, not
    /// the output location.
    pub fn new(command: &str, seed: u64, expect: &[String], config: &impl Serialize) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let canonical = json!({ "command": command, "seed": seed, "expect": expect, "config": config });
        let hash = hex::encode(Sha256::digest(serde_json::to_vec(&canonical)?));
        Ok(Self {
            tool: "shocklab",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed,
            expect: expect.to_vec(),
            config,
            hash,
        })
    }
}

pub struct OutDir {
    pub path: PathBuf,
    pub hash: String,
}

impl OutDir {
    pub fn create(path: &Path, manifest: &Manifest) -> Result<Self> {
        std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
        let out = Self { path: path.to_path_buf(), hash: manifest.hash.clone() };
        out.write_raw("manifest.json", &pretty(&serde_json::to_value(manifest)?)?)?;
        Ok(out)
    }

    pub fn sub(&self, name: &str) -> Result<Self> {
        let path = self.path.join(name);
        std::fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { path, hash: self.hash.clone() })
    }

    fn write_raw(&self, name: &str, body: &str) -> Result<()> {
        let p = self.path.join(name);
        std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
    }

    pub fn json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        match &mut v {
            Value::Object(map) => {
                map.insert("manifest_hash".into(), Value::String(self.hash.clone()));
            }
            other => {
                v = json!({ "manifest_hash": self.hash, "value": other.take() });
            }
        }
        self.write_raw(name, &pretty(&v)?)
    }

    pub fn csv(&self, name: &str, body: &str) -> Result<()> {
        self.write_raw(name, &format!("# manifest sha256:{}\n{body}", self.hash))
    }
}

fn pretty(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_inputs() {
        let a = Manifest::new("jump", 1, &[], &json!({"x": 1.0})).unwrap();
        let b = Manifest::new("jump", 1, &[], &json!({"x": 1.0})).unwrap();
        let c = Manifest::new("jump", 2, &[], &json!({"x": 1.0})).unwrap();
        assert_eq!(a.hash, b.hash);
        assert_ne!(a.hash, c.hash);
        assert_eq!(a.hash.len(), 64);
    }
}
