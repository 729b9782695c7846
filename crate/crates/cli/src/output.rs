use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{Failure, Outcome};

/// Exclusive claim on an output location, released on drop.
pub struct Lock {
    path: PathBuf,
}

impl Lock {
    pub fn acquire(path: PathBuf) -> Outcome<Lock> {
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Lock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(Failure::config(format!(
                "{} exists: another run is using this output (delete it if stale)",
                path.display()
            ))),
            Err(e) => Err(Failure::data(format!("{}: {e}", path.display()))),
        }
    }
}

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// `dir/name` for a directory output, `stem.name` beside a file output.
pub fn beside(out: &Path, is_dir: bool, name: &str) -> PathBuf {
    if is_dir {
        out.join(name)
    } else {
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        out.with_file_name(format!("{stem}.{name}"))
    }
}

pub fn sha256_file(path: &Path) -> Outcome<String> {
    let mut f = File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    let mut h = Sha256::new();
    io::copy(&mut f, &mut h).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(h.finalize()))
}

pub fn create(path: &Path) -> Outcome<File> {
    File::create(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

/// One compact JSON value per line.
pub fn json_lines<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item).expect("serializable"));
        s.push('\n');
    }
    s
}
