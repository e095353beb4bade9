//! Write-then-rename output handling.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::{NamedTempFile, TempDir};

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file beside `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = parent_dir(path);
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::file(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::file(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::file(path, e))?;
    tmp.persist(path).map_err(|e| Error::file(path, e.error))?;
    Ok(())
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

/// Files of one command, staged in a hidden directory inside the output
/// directory and moved into place only by [`Staging::commit`].
/// Dropping without committing removes everything staged.
#[derive(Debug)]
pub struct Staging {
    out: PathBuf,
    dir: TempDir,
    names: Vec<String>,
}

impl Staging {
    pub fn new(out: impl Into<PathBuf>) -> Result<Self> {
        let out = out.into();
        fs::create_dir_all(&out).map_err(|e| Error::file(&out, e))?;
        let dir = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(&out)
            .map_err(|e| Error::file(&out, e))?;
        Ok(Self { out, dir, names: Vec::new() })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Path to write `name` to before committing.
    pub fn path(&mut self, name: &str) -> PathBuf {
        if !self.names.iter().any(|n| n == name) {
            self.names.push(name.to_owned());
        }
        self.dir.path().join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| Error::file(p, e))
    }

    /// Opens a buffered writer for `name`.
    pub fn create(&mut self, name: &str) -> Result<std::io::BufWriter<fs::File>> {
        let p = self.path(name);
        fs::File::create(&p)
            .map(std::io::BufWriter::new)
            .map_err(|e| Error::file(p, e))
    }

    pub fn write_json<S: serde::Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let mut json = serde_json::to_vec_pretty(value)?;
        json.push(b'\n');
        self.write(name, &json)
    }

    /// Renames every staged file into the output directory and returns
    /// their final paths.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut done = Vec::with_capacity(self.names.len());
        for name in &self.names {
            let from = self.dir.path().join(name);
            if !from.exists() {
                continue;
            }
            let to = self.out.join(name);
            fs::rename(&from, &to).map_err(|e| Error::file(&to, e))?;
            done.push(to);
        }
        Ok(done)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_overwrite() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(d.path()).unwrap().count(), 1);
    }

    #[test]
    fn staging_commits_or_vanishes() {
        let d = tempfile::tempdir().unwrap();
        {
            let mut s = Staging::new(d.path()).unwrap();
            s.write("x.csv", b"1").unwrap();
        }
        assert_eq!(fs::read_dir(d.path()).unwrap().count(), 0);
        let mut s = Staging::new(d.path()).unwrap();
        s.write("x.csv", b"1").unwrap();
        s.write_json("y.json", &[1, 2]).unwrap();
        let files = s.commit().unwrap();
        assert_eq!(files.len(), 2);
        let mut names: Vec<String> = fs::read_dir(d.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names, vec!["x.csv", "y.json"]);
    }
}
