//! Run directory handling: a write probe before any computation, and atomic
//! artifact writes (temporary name, then rename).

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

/// Write `path` through a sibling temporary file that is renamed into place
/// only after `fill` succeeded; on failure the temporary file is removed.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let name = path
        .file_name()
        .ok_or_else(|| CliError::io(path, std::io::Error::other("not a file path")))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let result = (|| {
        let file = File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush().map_err(|e| CliError::io(&tmp, e))?;
        w.into_inner()
            .map_err(|e| CliError::io(&tmp, e.into_error()))?
            .sync_all()
            .map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// The directory every artifact of one run is written to.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    /// Create the directory if needed and prove it is writable.
    pub fn prepare(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        let probe = root.join(".chaosbayes-write-probe");
        File::create(&probe)
            .and_then(|mut f| f.write_all(b"probe"))
            .map_err(|e| CliError::io(&probe, e))?;
        fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Artifacts written so far, in order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.path(name);
        write_atomic(&path, fill)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Write a CSV through one of the core `write_csv` methods.
    pub fn write_csv<F>(&mut self, name: &str, fill: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> chaosbayes::Result<()>,
    {
        self.write(name, |w| fill(w).map_err(CliError::from))
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        self.write(name, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| CliError::io(&path, e))
        })
    }

    pub fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }
}
