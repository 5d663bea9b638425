//! Atomic artifact writing and the per-run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Writes `bytes` to a temporary file beside `path`, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sha256: String,
    pub bytes: u64,
}

/// Every artifact of a run, keyed by its path relative to the output
/// directory. Contains no timestamps, so identical runs give identical files.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub artifacts: BTreeMap<String, ManifestEntry>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Output directory that records what is written into it.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    manifest: Manifest,
}

impl OutDir {
    pub fn create(root: &Path, command: &str) -> io::Result<OutDir> {
        fs::create_dir_all(root)?;
        Ok(OutDir {
            root: root.to_path_buf(),
            manifest: Manifest {
                command: command.to_string(),
                artifacts: BTreeMap::new(),
            },
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.manifest.artifacts.insert(
            name.to_string(),
            ManifestEntry {
                sha256: sha256_hex(bytes),
                bytes: bytes.len() as u64,
            },
        );
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(self) -> io::Result<Manifest> {
        let mut text = serde_json::to_string_pretty(&self.manifest).map_err(io::Error::other)?;
        text.push('\n');
        write_atomic(&self.root.join(MANIFEST_NAME), text.as_bytes())?;
        Ok(self.manifest)
    }
}

/// Re-hashes every listed artifact; returns the names whose bytes changed.
pub fn verify_manifest(root: &Path, manifest: &Manifest) -> io::Result<Vec<String>> {
    let mut changed = Vec::new();
    for (name, entry) in &manifest.artifacts {
        let bytes = fs::read(root.join(name))?;
        if sha256_hex(&bytes) != entry.sha256 || bytes.len() as u64 != entry.bytes {
            changed.push(name.clone());
        }
    }
    Ok(changed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"second");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn atomic_write_into_missing_directory_fails() {
        let dir = tempfile::tempdir().unwrap();
        assert!(write_atomic(&dir.path().join("nope/a.txt"), b"x").is_err());
    }

    #[test]
    fn manifest_lists_and_verifies_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(&dir.path().join("run"), "test").unwrap();
        out.write("b.txt", b"bee").unwrap();
        out.write_json("a.json", &[1, 2, 3]).unwrap();
        let root = out.root().to_path_buf();
        let m = out.finish().unwrap();
        assert_eq!(m.artifacts.keys().collect::<Vec<_>>(), ["a.json", "b.txt"]);
        let reread: Manifest = serde_json::from_slice(&fs::read(root.join(MANIFEST_NAME)).unwrap()).unwrap();
        assert_eq!(reread, m);
        assert!(verify_manifest(&root, &m).unwrap().is_empty());
        fs::write(root.join("b.txt"), b"wasp").unwrap();
        assert_eq!(verify_manifest(&root, &m).unwrap(), ["b.txt"]);
    }
}
