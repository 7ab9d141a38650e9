//! Test-surface emitters and canned corpora for the audit crates.
//!
//! Everything here is written from the wire formats directly and shares no
//! code with the parsers under test, so emitter output works as an
//! independent oracle: a fixture knows what it encoded, and a test can hold
//! the decoder to exactly that.
//!
//! - [`classes`]: a small class-file assembler (constant pool interning,
//!   bytecode layout, serialVersionUID constants).
//! - [`streams`]: a serialization-stream encoder with explicit wire-handle
//!   accounting.
//! - [`jars`]: zip-backed jar building.
//! - [`corpus`]: the fixture library — a reference gadget classpath, version
//!   pairs for introduction/patch labelling, application classpaths, and
//!   attack payload streams with recorded byte offsets.
//! - [`random`]: seeded random class and stream generators plus mutators for
//!   round-trip and fuzz suites.

pub mod classes;
pub mod corpus;
pub mod jars;
pub mod random;
pub mod streams;
