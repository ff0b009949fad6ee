use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::FEATURE_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileHash {
    pub role: String,
    /// Relative to the directory given for the role.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub feature_version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn name_in(path: &Path, root: Option<&Path>) -> String {
    root.and_then(|r| path.strip_prefix(r).ok())
        .unwrap_or_else(|| path.file_name().map(Path::new).unwrap_or(path))
        .to_string_lossy()
        .replace('\\', "/")
}

/// Collects input hashes and writes outputs under one directory,
/// hashing them as they go.
pub struct Recorder {
    out_dir: PathBuf,
    manifest: Manifest,
}

impl Recorder {
    pub fn new(command: &str, out_dir: &Path, seed: u64, config: serde_json::Value) -> Result<Self> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(Recorder {
            out_dir: out_dir.to_path_buf(),
            manifest: Manifest {
                command: command.into(),
                version: env!("CARGO_PKG_VERSION").into(),
                feature_version: FEATURE_VERSION.into(),
                seed,
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
            },
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn input(&mut self, role: &str, path: &Path, root: Option<&Path>) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.manifest.inputs.push(FileHash {
            role: role.into(),
            file: name_in(path, root),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes `bytes` to `name` inside the output directory.
    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        self.write_at("output", &path, bytes)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        self.write(name, s)
    }

    /// Records a file some other writer already put in the output directory.
    pub fn existing(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        self.manifest.outputs.push(FileHash {
            role: "output".into(),
            file: name_in(path, Some(&self.out_dir)),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    /// Writes to an arbitrary path, recorded under `role`.
    pub fn write_at(&mut self, role: &str, path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
        let bytes = bytes.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        self.manifest.outputs.push(FileHash {
            role: role.into(),
            file: name_in(path, Some(&self.out_dir)),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn finish(mut self) -> Result<Manifest> {
        self.manifest.inputs.sort_by(|a, b| (&a.role, &a.file).cmp(&(&b.role, &b.file)));
        self.manifest.outputs.sort_by(|a, b| a.file.cmp(&b.file));
        let mut s = serde_json::to_string_pretty(&self.manifest).map_err(|e| Error::Format(e.to_string()))?;
        s.push('\n');
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        Ok(self.manifest)
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
    fn outputs_are_hashed_and_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Recorder::new("test", dir.path(), 1, serde_json::json!({})).unwrap();
        r.write("b.txt", "2").unwrap();
        r.write("a.txt", "1").unwrap();
        let m = r.finish().unwrap();
        assert_eq!(m.outputs[0].file, "a.txt");
        assert_eq!(m.outputs[1].sha256, sha256_hex(b"2"));
        assert!(dir.path().join("manifest.json").exists());
    }
}
