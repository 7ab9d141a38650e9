//! IO and orchestration layer over `deser-core`: classpath loading, input
//! file formats, and structured reports. The binary in `main.rs` wires these
//! into the `deser-audit` command-line tool.

pub mod classpath;
pub mod formats;
pub mod report;
