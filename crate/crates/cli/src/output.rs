//! Artifact writing. Every file goes to a temporary name in the target
//! directory first and is renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use omega_green::GridField;
use serde::Serialize;

use crate::CliError;

pub struct OutDir {
    root: PathBuf,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("output_dir {}: {e}", path.display()))
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(OutDir { root })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes `name` through a sibling temp file.
    pub fn write_with(
        &self,
        name: &str,
        fill: impl FnOnce(&mut fs::File) -> Result<(), CliError>,
    ) -> Result<PathBuf, CliError> {
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.{}.tmp", std::process::id()));
        let result = (|| {
            let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
            fill(&mut f)?;
            f.sync_all().map_err(|e| io_err(&tmp, e))?;
            fs::rename(&tmp, &target).map_err(|e| io_err(&target, e))
        })();
        if result.is_err() {
            let _ = fs::remove_file(&tmp);
        }
        result.map(|_| target)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_with(name, |f| f.write_all(text.as_bytes()).map_err(|e| io_err(&self.root.join(name), e)))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("{name}: cannot serialize: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_field(&self, name: &str, v: &GridField) -> Result<PathBuf, CliError> {
        self.write_with(name, |f| v.write_csv(f).map_err(CliError::from))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path().join("nested")).unwrap();
        out.write_text("a.txt", "one").unwrap();
        out.write_text("a.txt", "two").unwrap();
        assert_eq!(fs::read_to_string(out.path().join("a.txt")).unwrap(), "two");
        let failed = out.write_with("b.txt", |_| Err(CliError::Numerical("boom".into())));
        assert!(failed.is_err());
        let names: Vec<_> = fs::read_dir(out.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("a.txt")]);
    }
}
