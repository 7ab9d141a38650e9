//! Classpath ingestion: directories, loose class files, and ZIP/JAR archives
//! flattened into a first-wins [`ClasspathIndex`].

use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use deser_core::classfile::{parse_class, ClasspathIndex};
use serde::Serialize;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;
use zip::ZipArchive;

use crate::report::{sha256_hex, InputDigest};

/// One entry that failed to parse; the rest of the classpath still loads.
#[derive(Clone, Debug, Serialize)]
pub struct EntryFailure {
    /// `path` for loose files, `archive!entry` for archive members.
    pub origin: String,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct LoadedClasspath {
    pub index: ClasspathIndex,
    pub failures: Vec<EntryFailure>,
    /// One digest per classpath argument; directories digest their class
    /// files' contents in sorted walk order.
    pub inputs: Vec<InputDigest>,
}

fn is_class_entry(name: &str) -> bool {
    name.ends_with(".class")
        // Multi-release archives repeat classes under a versioned subtree;
        // index only the version-independent view.
        && !name.starts_with("META-INF/versions/")
}

fn add_class(loaded: &mut LoadedClasspath, bytes: &[u8], origin: &str) {
    match parse_class(bytes) {
        Ok(model) => {
            loaded.index.insert(model, origin);
        }
        Err(err) => loaded.failures.push(EntryFailure {
            origin: origin.to_string(),
            detail: err.to_string(),
        }),
    }
}

fn load_archive(loaded: &mut LoadedClasspath, path: &Path) -> Result<()> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    loaded.inputs.push(InputDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    });
    let mut archive = ZipArchive::new(std::io::Cursor::new(bytes))
        .with_context(|| format!("reading archive {}", path.display()))?;
    for i in 0..archive.len() {
        let mut entry = archive
            .by_index(i)
            .with_context(|| format!("reading entry {i} of {}", path.display()))?;
        if entry.is_dir() || !is_class_entry(entry.name()) {
            continue;
        }
        let origin = format!("{}!{}", path.display(), entry.name());
        let mut bytes = Vec::with_capacity(entry.size() as usize);
        entry
            .read_to_end(&mut bytes)
            .with_context(|| format!("reading {origin}"))?;
        add_class(loaded, &bytes, &origin);
    }
    Ok(())
}

fn load_directory(loaded: &mut LoadedClasspath, path: &Path) -> Result<()> {
    // Sorted traversal keeps first-wins resolution independent of the
    // filesystem's enumeration order.
    let mut digest = Sha256::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", path.display()))?;
        if !entry.file_type().is_file()
            || entry.path().extension().is_none_or(|e| e != "class")
        {
            continue;
        }
        let bytes = std::fs::read(entry.path())
            .with_context(|| format!("reading {}", entry.path().display()))?;
        digest.update(&bytes);
        add_class(loaded, &bytes, &entry.path().to_string_lossy());
    }
    loaded.inputs.push(InputDigest {
        path: path.display().to_string(),
        sha256: hex::encode(digest.finalize()),
    });
    Ok(())
}

/// Loads every path into one index: directories are walked recursively for
/// `.class` files, archives contribute their class entries, loose `.class`
/// files load directly. Earlier paths win name collisions; per-entry parse
/// failures are recorded without aborting the load.
pub fn open_classpath(paths: &[PathBuf]) -> Result<LoadedClasspath> {
    let mut loaded = LoadedClasspath::default();
    for path in paths {
        if path.is_dir() {
            load_directory(&mut loaded, path)?;
        } else if path.is_file() {
            if path.extension().is_some_and(|e| e == "class") {
                let bytes =
                    std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                loaded.inputs.push(InputDigest {
                    path: path.display().to_string(),
                    sha256: sha256_hex(&bytes),
                });
                add_class(&mut loaded, &bytes, &path.to_string_lossy());
            } else {
                load_archive(&mut loaded, path)?;
            }
        } else {
            bail!("classpath entry {} does not exist", path.display());
        }
    }
    Ok(loaded)
}
