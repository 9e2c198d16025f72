//! Subcommand implementations and shared output plumbing.

pub mod drr;
pub mod eval;
pub mod monitor;
pub mod phantom;
pub mod score;

use std::fs;
use std::path::{Path, PathBuf};

use crate::errors::{AppError, AppResult};

pub fn write_text(path: &Path, text: &str) -> AppResult<()> {
    fs::write(path, text).map_err(|e| AppError::data(format!("write {}: {e}", path.display())))
}

/// Output directory staged under a `.partial-<pid>` sibling and moved into
/// place only once every file has landed. A failed run drops the staging
/// directory on unwind, so the declared output path never holds partial
/// results.
pub struct Staging {
    dir: PathBuf,
    committed: bool,
}

impl Staging {
    pub fn new(target: &Path) -> AppResult<Self> {
        if let Some(parent) = target.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)
                .map_err(|e| AppError::data(format!("output parent {}: {e}", parent.display())))?;
        }
        let name = target
            .file_name()
            .ok_or_else(|| AppError::usage(format!("output path {} has no name", target.display())))?;
        let mut staged = name.to_os_string();
        staged.push(format!(".partial-{}", std::process::id()));
        let dir = target.with_file_name(staged);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| AppError::data(format!("stale staging dir: {e}")))?;
        }
        fs::create_dir_all(&dir)
            .map_err(|e| AppError::data(format!("staging dir {}: {e}", dir.display())))?;
        Ok(Self { dir, committed: false })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Moves the staged tree to `target`: a single directory rename when the
    /// target does not exist yet, otherwise per-file renames over the old
    /// artifacts (each rename is atomic, and all files are complete by now).
    pub fn commit(mut self, target: &Path) -> AppResult<()> {
        if !target.exists() {
            fs::rename(&self.dir, target)
                .map_err(|e| AppError::data(format!("publish {}: {e}", target.display())))?;
        } else {
            let entries = fs::read_dir(&self.dir)
                .map_err(|e| AppError::data(format!("staging dir: {e}")))?;
            for entry in entries {
                let entry = entry.map_err(|e| AppError::data(format!("staging dir: {e}")))?;
                let to = target.join(entry.file_name());
                fs::rename(entry.path(), &to)
                    .map_err(|e| AppError::data(format!("publish {}: {e}", to.display())))?;
            }
            fs::remove_dir(&self.dir).map_err(|e| AppError::data(format!("staging dir: {e}")))?;
        }
        self.committed = true;
        Ok(())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

/// Restricts a patient identifier to filename-safe characters.
pub fn sanitize_id(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staging_commits_atomically_into_fresh_target() {
        let tmp = tempfile::tempdir().unwrap();
        let target = tmp.path().join("run");
        let st = Staging::new(&target).unwrap();
        fs::write(st.path().join("a.txt"), "hello").unwrap();
        st.commit(&target).unwrap();
        assert_eq!(fs::read_to_string(target.join("a.txt")).unwrap(), "hello");
        // No staging leftovers.
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 1);
    }

    #[test]
    fn staging_replaces_files_in_existing_target() {
        let tmp = tempfile::tempdir().unwrap();
        let target = tmp.path().join("run");
        fs::create_dir_all(&target).unwrap();
        fs::write(target.join("a.txt"), "old").unwrap();
        let st = Staging::new(&target).unwrap();
        fs::write(st.path().join("a.txt"), "new").unwrap();
        st.commit(&target).unwrap();
        assert_eq!(fs::read_to_string(target.join("a.txt")).unwrap(), "new");
    }

    #[test]
    fn dropped_staging_leaves_no_trace() {
        let tmp = tempfile::tempdir().unwrap();
        let target = tmp.path().join("run");
        {
            let st = Staging::new(&target).unwrap();
            fs::write(st.path().join("a.txt"), "junk").unwrap();
        }
        assert!(!target.exists());
        assert_eq!(fs::read_dir(tmp.path()).unwrap().count(), 0);
    }

    #[test]
    fn sanitize_keeps_safe_chars_only() {
        assert_eq!(sanitize_id("case-007_A.b"), "case-007_A.b");
        assert_eq!(sanitize_id("a/b c:d"), "a_b_c_d");
    }
}
