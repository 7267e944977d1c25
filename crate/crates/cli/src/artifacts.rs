//! Output files are first written as `<name>.partial` and only renamed to
//! their final names once every stage has succeeded, so a failed run never
//! leaves a mix of fresh and stale artifacts under the final names.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::manifest::FileDigest;
use crate::CliError;

pub const PARTIAL_SUFFIX: &str = ".partial";

pub struct StagedOutputs {
    dir: PathBuf,
    names: Vec<String>,
}

impl StagedOutputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn partial_path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}{PARTIAL_SUFFIX}"))
    }

    /// Writes `name.partial` through `body`.
    pub fn write<F, E>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), E>,
        E: std::fmt::Display,
    {
        let path = self.partial_path(name);
        let file = File::create(&path)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        body(&mut w).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        w.flush()
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        self.names.push(name.to_string());
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write(name, |w| w.write_all(bytes))
    }

    /// Digests of the staged files, in staging order.
    pub fn digests(&self) -> Result<Vec<FileDigest>, CliError> {
        self.names
            .iter()
            .map(|name| {
                let path = self.partial_path(name);
                let bytes = std::fs::read(&path)
                    .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
                Ok(FileDigest::of_bytes(name.clone(), &bytes))
            })
            .collect()
    }

    /// Renames every staged file to its final name.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut done = Vec::with_capacity(self.names.len());
        for name in &self.names {
            let from = self.partial_path(name);
            let to = self.dir.join(name);
            std::fs::rename(&from, &to)
                .map_err(|e| CliError::Output(format!("cannot rename {}: {e}", from.display())))?;
            done.push(to);
        }
        Ok(done)
    }
}

/// Hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes a single file through a `.partial` sibling.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut partial = path.as_os_str().to_owned();
    partial.push(PARTIAL_SUFFIX);
    let partial = PathBuf::from(partial);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(&partial, bytes)
        .map_err(|e| CliError::Output(format!("{}: {e}", partial.display())))?;
    std::fs::rename(&partial, path)
        .map_err(|e| CliError::Output(format!("cannot rename {}: {e}", partial.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_stay_partial_until_commit() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = StagedOutputs::new(dir.path()).unwrap();
        out.write_bytes("a.csv", b"x,y\n").unwrap();
        assert!(dir.path().join("a.csv.partial").exists());
        assert!(!dir.path().join("a.csv").exists());
        let digests = out.digests().unwrap();
        assert_eq!(digests[0].sha256, sha256_hex(b"x,y\n"));
        out.commit().unwrap();
        assert_eq!(std::fs::read(dir.path().join("a.csv")).unwrap(), b"x,y\n");
        assert!(!dir.path().join("a.csv.partial").exists());
    }

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
