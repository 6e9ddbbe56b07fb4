//! Output directory layout and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use aerotopic::ModelKind;

use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn tokenized_dir(&self) -> PathBuf {
        self.root.join("tokenized")
    }

    pub fn corpus(&self) -> PathBuf {
        self.tokenized_dir().join("corpus.tsv")
    }

    pub fn vocab(&self) -> PathBuf {
        self.tokenized_dir().join("vocab.tsv")
    }

    pub fn stats(&self) -> PathBuf {
        self.tokenized_dir().join("stats.txt")
    }

    pub fn counts(&self) -> PathBuf {
        self.tokenized_dir().join("counts.txt")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn model(&self, kind: ModelKind) -> PathBuf {
        self.models_dir().join(format!("{}.json", kind.as_str()))
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.reports_dir().join(name)
    }
}

/// Writes through a temporary sibling and renames it into place, so a
/// failure never leaves a half-written file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::Io {
            path: path.to_path_buf(),
            source: e,
        });
    }
    Ok(())
}
