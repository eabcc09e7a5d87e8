//! Exit classification and writes confined to the output directory.

use std::fmt::Display;
use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::anyhow;
use serde::Serialize;

/// Validation failures exit 1, everything else 2.
#[derive(Debug)]
pub enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

pub type CmdResult<T> = Result<T, Failure>;

pub fn invalid(e: impl Display) -> Failure {
    Failure::Validation(anyhow!("{e}"))
}

pub fn runtime(e: impl Display) -> Failure {
    Failure::Runtime(anyhow!("{e}"))
}

/// Tags a load error with the file it came from.
pub fn bad_input(path: &Path, e: impl Display) -> Failure {
    let msg = e.to_string();
    let shown = path.display().to_string();
    if msg.contains(&shown) {
        invalid(msg)
    } else {
        invalid(format!("{shown}: {msg}"))
    }
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> CmdResult<Self> {
        fs::create_dir_all(root).map_err(|e| runtime(format!("{}: {e}", root.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    /// Resolves a plain relative file name inside the directory.
    pub fn path(&self, name: &str) -> CmdResult<PathBuf> {
        let p = Path::new(name);
        if name.is_empty() || !p.components().all(|c| matches!(c, Component::Normal(_))) {
            return Err(invalid(format!(
                "output name {name:?} must stay inside --out"
            )));
        }
        Ok(self.root.join(p))
    }

    pub fn write(&self, name: &str, contents: &str) -> CmdResult<PathBuf> {
        let path = self.path(name)?;
        fs::write(&path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> CmdResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
        text.push('\n');
        self.write(name, &text)
    }
}
