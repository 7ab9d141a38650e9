//! Jar building for classpath fixtures.

use std::io::{Cursor, Write};
use std::path::Path;

use zip::write::FileOptions;
use zip::ZipWriter;

/// Zips `(entry_name, bytes)` pairs into an in-memory jar. Entry names are
/// used verbatim, e.g. `com/example/Widget.class`.
pub fn jar_bytes(entries: &[(String, Vec<u8>)]) -> Vec<u8> {
    let mut writer = ZipWriter::new(Cursor::new(Vec::new()));
    let options = FileOptions::default().compression_method(zip::CompressionMethod::Deflated);
    writer
        .start_file("META-INF/MANIFEST.MF", options)
        .expect("zip start");
    writer
        .write_all(b"Manifest-Version: 1.0\n")
        .expect("zip write");
    for (name, bytes) in entries {
        writer.start_file(name.as_str(), options).expect("zip start");
        writer.write_all(bytes).expect("zip write");
    }
    writer.finish().expect("zip finish").into_inner()
}

pub fn write_jar(path: &Path, entries: &[(String, Vec<u8>)]) -> std::io::Result<()> {
    std::fs::write(path, jar_bytes(entries))
}

/// Writes classes as loose `.class` files under `dir`, creating package
/// directories as needed.
pub fn write_class_dir(dir: &Path, entries: &[(String, Vec<u8>)]) -> std::io::Result<()> {
    for (name, bytes) in entries {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, bytes)?;
    }
    Ok(())
}
