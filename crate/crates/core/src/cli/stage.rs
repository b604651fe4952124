//! Hash-addressed stage directories and their manifests.
//!
//! Each command writes into `<out>/<stage>-<hash>`, where the hash covers the
//! configuration that influences the stage and the hashes of the stages it
//! reads. A `MANIFEST.toml` written last records the hash, the seeds and a
//! SHA-256 of every output file; its presence marks the stage as complete.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "MANIFEST.toml";

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Stage key: the first 16 hex digits of the SHA-256 of the parts.
pub fn stage_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    hex(&h.finalize())[..16].to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    /// Seeds are written as decimal strings: TOML integers stop at `i64::MAX`.
    #[serde(with = "decimal")]
    pub seed: u64,
    #[serde(with = "decimal_map")]
    pub seeds: BTreeMap<String, u64>,
    /// Upstream stage directories, by stage name.
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of each output file, by path relative to the stage directory.
    pub files: BTreeMap<String, String>,
}

mod decimal {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

mod decimal_map {
    use std::collections::BTreeMap;

    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, u64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k, v.to_string())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, u64>, D::Error> {
        BTreeMap::<String, String>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| v.parse().map(|v| (k, v)).map_err(D::Error::custom))
            .collect()
    }
}

/// A stage directory being written.
#[derive(Clone, Debug)]
pub struct Stage {
    pub name: &'static str,
    pub hash: String,
    pub dir: PathBuf,
}

impl Stage {
    pub fn new(out: &Path, name: &'static str, hash: String) -> Self {
        let dir = out.join(format!("{name}-{hash}"));
        Stage { name, hash, dir }
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.dir.join(MANIFEST)
    }

    pub fn is_complete(&self) -> bool {
        self.manifest_path().exists()
    }

    /// Errors naming the command that produces this stage unless it is complete.
    pub fn require(&self, command: &str) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::MissingArtifact {
                path: self.manifest_path(),
                hint: format!("the {} stage has not been run; run `xvec {command}` with the same configuration first", self.name),
            })
        }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    /// Clears and recreates the directory.
    pub fn reset(&self) -> Result<()> {
        if self.dir.exists() {
            fs::remove_dir_all(&self.dir)?;
        }
        fs::create_dir_all(&self.dir)?;
        Ok(())
    }

    /// Writes the manifest, hashing every regular file under the directory.
    pub fn finish(
        &self,
        seed: u64,
        seeds: BTreeMap<String, u64>,
        inputs: BTreeMap<String, String>,
    ) -> Result<Manifest> {
        let mut files = BTreeMap::new();
        collect_files(&self.dir, &self.dir, &mut files)?;
        files.remove(MANIFEST);
        let m = Manifest {
            stage: self.name.to_string(),
            config_hash: self.hash.clone(),
            seed,
            seeds,
            inputs,
            files,
        };
        let text = toml::to_string(&m).map_err(|e| Error::Contract(format!("manifest: {e}")))?;
        fs::write(self.manifest_path(), text)?;
        Ok(m)
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut BTreeMap<String, String>) -> Result<()> {
    let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            let rel = p
                .strip_prefix(root)
                .expect("inside root")
                .to_string_lossy()
                .replace('\\', "/");
            out.insert(rel, sha256_hex(&fs::read(&p)?));
        }
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}
