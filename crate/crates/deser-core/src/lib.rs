//! Static analysis core for Java deserialization attack surfaces.
//!
//! Everything in this crate works on in-memory bytes and collections, with no
//! filesystem or JVM dependency, so it builds for `no_std` targets (alloc
//! required). The companion `deser-audit` crate layers classpath IO, file
//! formats, and the command-line interface on top.
//!
//! Module map:
//! - [`classfile`]: class-file parsing into call-site-level models, plus the
//!   classpath index with first-wins shadowing and hierarchy closures.
//! - [`serialstream`]: serialization-stream decoding into an element tree with
//!   wire handles, and a deterministic dump renderer.
//! - [`filter`]: allow/deny pattern filters with resource limits, evaluated
//!   against decoded streams.
//! - [`gadgetgraph`]: serializability analysis, entry-point discovery,
//!   class-hierarchy call graphs, and bounded gadget-chain search.
//! - [`libdiff`]: structural diffs between two classpath indexes and the
//!   introduction/patch action taxonomies built on them.
//! - [`study`]: experiment-matrix arithmetic, outcome grids, library lifecycle
//!   metrics, and CVE aggregation.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod classfile;
pub mod filter;
pub mod gadgetgraph;
pub mod libdiff;
pub mod serialstream;
pub mod study;
