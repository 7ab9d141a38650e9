//! Deserialization filters: pattern rules plus resource limits.
//!
//! The filter language matches the process-wide filter strings understood by
//! modern JDKs: semicolon-separated class-name patterns, `!` for rejection,
//! `.*` for one package level, `.**` for a whole subtree, and `maxdepth=` /
//! `maxrefs=` / `maxbytes=` / `maxarray=` resource limits. [`apply_filter`]
//! evaluates a filter against a decoded stream without deserializing
//! anything, reporting the same decision an in-JVM filter would reach and
//! where in the byte stream it would trip.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::serialstream::{StreamGraph, Tag};

/// One class-name pattern, in declaration order within the filter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Pattern {
    /// Bare `*`: every class.
    All,
    /// Exact class name, dot form.
    Exact(String),
    /// `pkg.*`: classes directly inside one package.
    Package(String),
    /// `pkg.**`: classes anywhere under a package subtree.
    Subtree(String),
}

impl Pattern {
    pub fn matches(&self, class_name: &str) -> bool {
        match self {
            Pattern::All => true,
            Pattern::Exact(name) => class_name == name,
            Pattern::Package(pkg) => match class_name.rsplit_once('.') {
                Some((package, _)) => package == pkg,
                None => false,
            },
            Pattern::Subtree(pkg) => {
                class_name.len() > pkg.len() + 1
                    && class_name.starts_with(pkg.as_str())
                    && class_name.as_bytes()[pkg.len()] == b'.'
            }
        }
    }

    fn render(&self) -> String {
        match self {
            Pattern::All => "*".to_string(),
            Pattern::Exact(name) => name.clone(),
            Pattern::Package(pkg) => {
                let mut s = pkg.clone();
                s.push_str(".*");
                s
            }
            Pattern::Subtree(pkg) => {
                let mut s = pkg.clone();
                s.push_str(".**");
                s
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FilterRule {
    pub negated: bool,
    pub pattern: Pattern,
}

/// Resource limits; `None` means unlimited.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FilterLimits {
    pub max_depth: Option<u64>,
    pub max_refs: Option<u64>,
    pub max_bytes: Option<u64>,
    pub max_array: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DeserFilter {
    /// Rules in written order; the first matching rule decides a class.
    pub rules: Vec<FilterRule>,
    pub limits: FilterLimits,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FilterParseError {
    BadPattern { segment: String, reason: &'static str },
    BadLimit { segment: String, reason: &'static str },
}

impl fmt::Display for FilterParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterParseError::BadPattern { segment, reason } => {
                write!(f, "bad filter pattern {segment:?}: {reason}")
            }
            FilterParseError::BadLimit { segment, reason } => {
                write!(f, "bad filter limit {segment:?}: {reason}")
            }
        }
    }
}

impl core::error::Error for FilterParseError {}

/// Parses a filter string. Empty segments are ignored, so trailing
/// semicolons are harmless.
pub fn parse_filter(spec: &str) -> Result<DeserFilter, FilterParseError> {
    let mut filter = DeserFilter::default();
    let mut seen_limits: BTreeSet<&str> = BTreeSet::new();
    for raw in spec.split(';') {
        let segment = raw.trim();
        if segment.is_empty() {
            continue;
        }
        if segment.contains('=') {
            let (key, value) = segment.split_once('=').expect("checked above");
            let key = key.trim();
            let value = value.trim();
            let slot = match key {
                "maxdepth" => &mut filter.limits.max_depth,
                "maxrefs" => &mut filter.limits.max_refs,
                "maxbytes" => &mut filter.limits.max_bytes,
                "maxarray" => &mut filter.limits.max_array,
                _ => {
                    return Err(FilterParseError::BadLimit {
                        segment: segment.to_string(),
                        reason: "unknown limit name",
                    })
                }
            };
            if !seen_limits.insert(key) {
                return Err(FilterParseError::BadLimit {
                    segment: segment.to_string(),
                    reason: "limit given twice",
                });
            }
            let parsed: u64 = value.parse().map_err(|_| FilterParseError::BadLimit {
                segment: segment.to_string(),
                reason: "value is not an unsigned integer",
            })?;
            *slot = Some(parsed);
            continue;
        }
        let (negated, body) = match segment.strip_prefix('!') {
            Some(rest) => (true, rest),
            None => (false, segment),
        };
        if body.is_empty() {
            return Err(FilterParseError::BadPattern {
                segment: segment.to_string(),
                reason: "empty pattern",
            });
        }
        let pattern = parse_pattern(body).ok_or(FilterParseError::BadPattern {
            segment: segment.to_string(),
            reason: "wildcards may only appear as a trailing .* or .** or a bare *",
        })?;
        filter.rules.push(FilterRule { negated, pattern });
    }
    Ok(filter)
}

fn parse_pattern(body: &str) -> Option<Pattern> {
    if body == "*" {
        return Some(Pattern::All);
    }
    if let Some(stem) = body.strip_suffix(".**") {
        if stem.is_empty() || stem.contains('*') {
            return None;
        }
        return Some(Pattern::Subtree(stem.to_string()));
    }
    if let Some(stem) = body.strip_suffix(".*") {
        if stem.is_empty() || stem.contains('*') {
            return None;
        }
        return Some(Pattern::Package(stem.to_string()));
    }
    if body.contains('*') {
        return None;
    }
    Some(Pattern::Exact(body.to_string()))
}

impl DeserFilter {
    /// First-match rule lookup: `Some(true)` allows, `Some(false)` rejects,
    /// `None` leaves the class undecided.
    pub fn match_class(&self, class_name: &str) -> Option<bool> {
        for rule in &self.rules {
            if rule.pattern.matches(class_name) {
                return Some(!rule.negated);
            }
        }
        None
    }

    /// Canonical string form: limits first in fixed order, then rules in
    /// declaration order. `parse_filter(f.render())` reproduces `f`.
    pub fn render(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        if let Some(v) = self.limits.max_depth {
            parts.push(alloc::format!("maxdepth={v}"));
        }
        if let Some(v) = self.limits.max_refs {
            parts.push(alloc::format!("maxrefs={v}"));
        }
        if let Some(v) = self.limits.max_bytes {
            parts.push(alloc::format!("maxbytes={v}"));
        }
        if let Some(v) = self.limits.max_array {
            parts.push(alloc::format!("maxarray={v}"));
        }
        for rule in &self.rules {
            let mut s = String::new();
            if rule.negated {
                s.push('!');
            }
            s.push_str(&rule.pattern.render());
            parts.push(s);
        }
        parts.join(";")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FilterDecision {
    Allowed,
    Rejected,
    Undecided,
}

impl FilterDecision {
    pub fn as_str(self) -> &'static str {
        match self {
            FilterDecision::Allowed => "ALLOWED",
            FilterDecision::Rejected => "REJECTED",
            FilterDecision::Undecided => "UNDECIDED",
        }
    }
}

/// Outcome of evaluating a filter against a stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FilterVerdict {
    pub decision: FilterDecision,
    /// Class whose name tripped a rejection rule, when one did.
    pub rejected_class: Option<String>,
    /// Limit that tripped (`"maxdepth"`, `"maxrefs"`, `"maxbytes"`,
    /// `"maxarray"`), when one did.
    pub violated_limit: Option<&'static str>,
    /// Byte offset of the element that caused the rejection: the element's
    /// start position, which precedes its field data on the wire.
    pub position: Option<u64>,
}

impl FilterVerdict {
    fn rejected_limit(limit: &'static str, position: usize) -> Self {
        FilterVerdict {
            decision: FilterDecision::Rejected,
            rejected_class: None,
            violated_limit: Some(limit),
            position: Some(position as u64),
        }
    }

    fn rejected_class(name: &str, position: usize) -> Self {
        FilterVerdict {
            decision: FilterDecision::Rejected,
            rejected_class: Some(name.to_string()),
            violated_limit: None,
            position: Some(position as u64),
        }
    }
}

/// Class names an element presents to the filter. Proxy elements present
/// their interface list; array elements present their component class (array
/// nesting stripped), with primitive components presenting nothing.
fn element_class_names(el: &crate::serialstream::StreamElement) -> Vec<String> {
    if !el.interfaces.is_empty() {
        return el.interfaces.clone();
    }
    let name = match &el.class_name {
        Some(n) => n,
        None => return Vec::new(),
    };
    let stripped = name.trim_start_matches('[');
    if let Some(inner) = stripped.strip_prefix('L') {
        if let Some(body) = inner.strip_suffix(';') {
            return alloc::vec![body.to_string()];
        }
    }
    if stripped.len() == 1 && name.starts_with('[') {
        // Primitive array like [I: no class name to check.
        return Vec::new();
    }
    alloc::vec![stripped.to_string()]
}

/// Evaluates `filter` against a decoded stream, visiting elements in wire
/// order. The first violated limit or matched rejection rule decides the
/// stream; otherwise the result is `Allowed` when every class encountered
/// matched an allow rule and `Undecided` when any class fell through.
pub fn apply_filter(graph: &StreamGraph, filter: &DeserFilter) -> FilterVerdict {
    let mut refs_seen: u64 = 0;
    let mut saw_class = false;
    let mut all_allowed = true;
    for el in &graph.elements {
        let start = el.span.0;
        if let Some(max_bytes) = filter.limits.max_bytes {
            if el.span.1 as u64 > max_bytes {
                return FilterVerdict::rejected_limit("maxbytes", start);
            }
        }
        if let Some(max_depth) = filter.limits.max_depth {
            if el.depth as u64 > max_depth {
                return FilterVerdict::rejected_limit("maxdepth", start);
            }
        }
        if el.handle.is_some() || el.tag() == Tag::Reference {
            refs_seen += 1;
            if let Some(max_refs) = filter.limits.max_refs {
                if refs_seen > max_refs {
                    return FilterVerdict::rejected_limit("maxrefs", start);
                }
            }
        }
        if let (Some(max_array), Some(len)) = (filter.limits.max_array, el.array_len) {
            if len as u64 > max_array {
                return FilterVerdict::rejected_limit("maxarray", start);
            }
        }
        for name in element_class_names(el) {
            match filter.match_class(&name) {
                Some(true) => saw_class = true,
                Some(false) => return FilterVerdict::rejected_class(&name, start),
                None => {
                    saw_class = true;
                    all_allowed = false;
                }
            }
        }
    }
    let decision = if saw_class && all_allowed {
        FilterDecision::Allowed
    } else {
        FilterDecision::Undecided
    };
    FilterVerdict {
        decision,
        rejected_class: None,
        violated_limit: None,
        position: None,
    }
}
