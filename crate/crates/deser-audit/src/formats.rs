//! Line-oriented input formats: sink lists, trigger tables, attack matrices,
//! release catalogs, CVE records, and run records, plus the bundled defaults.

use std::collections::BTreeMap;
use std::fmt;

use deser_core::gadgetgraph::{SinkSpec, TriggerRow};
use deser_core::study::{
    AttackSpec, CivilDate, CveCategory, CveRecord, MitigationKind, VersionRelease,
};

/// Datasets compiled into the binary, used when no file is supplied.
pub mod defaults {
    pub const SINKS: &str = include_str!("../data/sinks.txt");
    pub const TRIGGERS: &str = include_str!("../data/triggers.txt");
    pub const ATTACKS: &str = include_str!("../data/attacks.txt");
    pub const RELEASES: &str = include_str!("../data/releases.txt");
    pub const CVES: &str = include_str!("../data/cves.csv");
}

/// A malformed input line, reported with its position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormatError {
    pub source_name: String,
    pub line: usize,
    pub detail: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.source_name, self.line, self.detail)
    }
}

impl std::error::Error for FormatError {}

/// Yields `(1-based line number, content)` with comments and blanks removed.
/// A `#` starts a comment; the text after it is returned separately so
/// formats that use trailing comments as labels can keep them.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str, Option<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let (content, comment) = match raw.split_once('#') {
            Some((c, rest)) => (c, Some(rest.trim())),
            None => (raw, None),
        };
        let content = content.trim();
        if content.is_empty() {
            None
        } else {
            Some((i + 1, content, comment))
        }
    })
}

fn err(source_name: &str, line: usize, detail: impl Into<String>) -> FormatError {
    FormatError {
        source_name: source_name.to_string(),
        line,
        detail: detail.into(),
    }
}

/// Parses a sink list: `owner method descriptor-prefix [# label]`. The
/// descriptor prefix narrows nothing yet (matching is by owner and method)
/// but is validated for forward compatibility; the trailing comment becomes
/// the sink's label.
pub fn parse_sinks(source_name: &str, text: &str) -> Result<Vec<SinkSpec>, FormatError> {
    let mut out = Vec::new();
    for (line, content, comment) in data_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(err(
                source_name,
                line,
                format!("expected `owner method [descriptor-prefix]`, got {} fields", fields.len()),
            ));
        }
        let label = comment.filter(|c| !c.is_empty()).unwrap_or("configured sink");
        out.push(SinkSpec::new(fields[0], fields[1], label));
    }
    Ok(out)
}

/// Parses a trigger table: `container containerMethod calleePattern`.
pub fn parse_triggers(source_name: &str, text: &str) -> Result<Vec<TriggerRow>, FormatError> {
    let mut out = Vec::new();
    for (line, content, _) in data_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(
                source_name,
                line,
                format!(
                    "expected `container containerMethod calleePattern`, got {} fields",
                    fields.len()
                ),
            ));
        }
        out.push(TriggerRow {
            container: fields[0].to_string(),
            container_method: fields[1].to_string(),
            callee_pattern: fields[2].to_string(),
        });
    }
    Ok(out)
}

/// Parses an attack matrix: `name jvm_count libraries`, where libraries is
/// `lib=versions[,lib=versions...]` or `-` for runtime-only attacks.
pub fn parse_attacks(source_name: &str, text: &str) -> Result<Vec<AttackSpec>, FormatError> {
    let mut out = Vec::new();
    for (line, content, _) in data_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(
                source_name,
                line,
                format!("expected `name jvm_count libraries`, got {} fields", fields.len()),
            ));
        }
        let jvm_count: u32 = fields[1]
            .parse()
            .map_err(|_| err(source_name, line, format!("bad jvm count {:?}", fields[1])))?;
        let mut libraries = Vec::new();
        if fields[2] != "-" {
            for pair in fields[2].split(',') {
                let (lib, versions) = pair.split_once('=').ok_or_else(|| {
                    err(source_name, line, format!("bad library pair {pair:?}, want lib=count"))
                })?;
                let versions: u32 = versions.parse().map_err(|_| {
                    err(source_name, line, format!("bad version count {versions:?}"))
                })?;
                libraries.push((lib.to_string(), versions));
            }
        }
        out.push(AttackSpec {
            name: fields[0].to_string(),
            jvm_count,
            libraries,
        });
    }
    Ok(out)
}

/// Parses a version-date catalog: `library,version,release_date,gadget_flag`.
/// Returns releases grouped per library, preserving file order within each.
pub fn parse_releases(
    source_name: &str,
    text: &str,
) -> Result<BTreeMap<String, Vec<VersionRelease>>, FormatError> {
    let mut out: BTreeMap<String, Vec<VersionRelease>> = BTreeMap::new();
    for (line, content, _) in data_lines(text) {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(err(
                source_name,
                line,
                format!(
                    "expected `library,version,release_date,gadget_flag`, got {} fields",
                    fields.len()
                ),
            ));
        }
        let date = CivilDate::parse(fields[2])
            .ok_or_else(|| err(source_name, line, format!("bad date {:?}", fields[2])))?;
        let gadget_flag = match fields[3] {
            "1" => true,
            "0" => false,
            other => {
                return Err(err(source_name, line, format!("bad gadget flag {other:?}, want 0 or 1")))
            }
        };
        out.entry(fields[0].to_string()).or_default().push(VersionRelease {
            version: fields[1].to_string(),
            date,
            gadget_flag,
        });
    }
    Ok(out)
}

/// Parses CVE records: `id,year,language,category,mitigation` with the
/// mitigation column optionally empty.
pub fn parse_cves(source_name: &str, text: &str) -> Result<Vec<CveRecord>, FormatError> {
    let mut out = Vec::new();
    for (line, content, _) in data_lines(text) {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(
                source_name,
                line,
                format!("expected `id,year,language,category,mitigation`, got {} fields", fields.len()),
            ));
        }
        let year: u16 = fields[1]
            .parse()
            .map_err(|_| err(source_name, line, format!("bad year {:?}", fields[1])))?;
        let category = CveCategory::parse(fields[3])
            .ok_or_else(|| err(source_name, line, format!("bad category {:?}", fields[3])))?;
        let mitigation = match fields[4] {
            "" | "-" => None,
            name => Some(MitigationKind::parse(name).ok_or_else(|| {
                err(source_name, line, format!("bad mitigation {name:?}"))
            })?),
        };
        out.push(CveRecord {
            id: fields[0].to_string(),
            year,
            language: fields[2].to_string(),
            category,
            mitigation,
        });
    }
    Ok(out)
}

/// Parses run records: `jvm_version,library_version,log_path`.
pub fn parse_run_records(
    source_name: &str,
    text: &str,
) -> Result<Vec<(String, String, String)>, FormatError> {
    let mut out = Vec::new();
    for (line, content, _) in data_lines(text) {
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(
                source_name,
                line,
                format!("expected `jvm_version,library_version,log_path`, got {} fields", fields.len()),
            ));
        }
        out.push((fields[0].to_string(), fields[1].to_string(), fields[2].to_string()));
    }
    Ok(out)
}

/// Parses a focus file: one class name per line, dot or slash form.
pub fn parse_focus(text: &str) -> std::collections::BTreeSet<String> {
    data_lines(text)
        .map(|(_, content, _)| content.replace('.', "/"))
        .collect()
}

/// Parses a `key = value` config file. Unknown keys are rejected so typos
/// fail loudly instead of silently using defaults.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub format: Option<String>,
    pub filter: Option<String>,
    pub max_depth: Option<usize>,
    pub sinks: Option<String>,
    pub triggers: Option<String>,
}

pub fn parse_config(source_name: &str, text: &str) -> Result<ConfigFile, FormatError> {
    let mut config = ConfigFile::default();
    for (line, content, _) in data_lines(text) {
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(source_name, line, "expected `key = value`"))?;
        let value = value.trim();
        match key.trim() {
            "format" => config.format = Some(value.to_string()),
            "filter" => config.filter = Some(value.to_string()),
            "max-depth" => {
                config.max_depth = Some(value.parse().map_err(|_| {
                    err(source_name, line, format!("bad max-depth {value:?}"))
                })?)
            }
            "sinks" => config.sinks = Some(value.to_string()),
            "triggers" => config.triggers = Some(value.to_string()),
            other => return Err(err(source_name, line, format!("unknown config key {other:?}"))),
        }
    }
    Ok(config)
}
