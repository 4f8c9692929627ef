//! Output directory with a hashed manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{io_err, Result};

pub const MANIFEST: &str = "manifest.txt";

pub struct OutputDir {
    root: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(io_err(&path))?;
        let digest = Sha256::digest(contents.as_bytes());
        let hex = digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), hex));
        Ok(path)
    }

    /// `sha256  bytes  name` per file, sorted by name; the manifest itself is
    /// not listed.
    pub fn finish(mut self) -> Result<Vec<PathBuf>> {
        self.files.sort();
        let mut text = String::new();
        for (name, hex) in &self.files {
            let len = fs::metadata(self.root.join(name)).map_err(io_err(self.root.join(name)))?.len();
            let _ = writeln!(text, "{hex}  {len}  {name}");
        }
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(io_err(&path))?;
        let mut out: Vec<PathBuf> = self.files.iter().map(|(n, _)| self.root.join(n)).collect();
        out.push(path);
        Ok(out)
    }
}
