//! Experiment bookkeeping: run-matrix arithmetic, harness-log outcome
//! classification, outcome grids, library exposure lifecycles, and CVE
//! aggregation.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StudyError {
    /// Impossible experiment description (zero JVMs, zero-version library).
    BadSpec { detail: String },
    /// Grid rows of unequal length or with missing cells.
    RaggedGrid {
        row: usize,
        expected: usize,
        found: usize,
    },
    /// Inputs that do not line up with each other or violate ordering
    /// requirements.
    MisalignedInput { detail: String },
}

impl fmt::Display for StudyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StudyError::BadSpec { detail } => write!(f, "bad experiment spec: {detail}"),
            StudyError::RaggedGrid {
                row,
                expected,
                found,
            } => write!(
                f,
                "ragged grid: row {row} has {found} cells, expected {expected}"
            ),
            StudyError::MisalignedInput { detail } => write!(f, "misaligned input: {detail}"),
        }
    }
}

impl core::error::Error for StudyError {}

// ---- Run-matrix planning ----

/// Description of one attack's test matrix: how many JVM builds it runs
/// against and, per target library, how many versions. An empty library list
/// means the attack targets the runtime itself and runs once per JVM.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AttackSpec {
    pub name: String,
    pub jvm_count: u32,
    pub libraries: Vec<(String, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatrixPlan {
    pub attack: String,
    pub jvm_count: u32,
    /// Planned runs per library: `jvm_count * versions`.
    pub per_library: Vec<(String, u64)>,
    pub total: u64,
}

/// Computes the planned run count for one attack: `jvm_count` times the sum
/// of library version counts, or `jvm_count` alone for runtime-only attacks.
pub fn plan_matrix(spec: &AttackSpec) -> Result<MatrixPlan, StudyError> {
    if spec.jvm_count == 0 {
        return Err(StudyError::BadSpec {
            detail: format!("attack {} has zero JVMs", spec.name),
        });
    }
    let mut per_library = Vec::with_capacity(spec.libraries.len());
    let mut total: u64 = 0;
    for (library, versions) in &spec.libraries {
        if *versions == 0 {
            return Err(StudyError::BadSpec {
                detail: format!("attack {} lists {library} with zero versions", spec.name),
            });
        }
        let runs = spec.jvm_count as u64 * *versions as u64;
        per_library.push((library.clone(), runs));
        total += runs;
    }
    if spec.libraries.is_empty() {
        total = spec.jvm_count as u64;
    }
    Ok(MatrixPlan {
        attack: spec.name.clone(),
        jvm_count: spec.jvm_count,
        per_library,
        total,
    })
}

// ---- Outcome classification ----

/// Harness-run result, one cell of the outcome grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum OutcomeCode {
    /// The payload ran.
    Success,
    /// Deserialization threw before the payload ran.
    DeserFailed,
    /// The JVM refused the payload's class-file version.
    VersionUnsupported,
    /// The payload could not even be generated or serialized.
    PayloadError,
}

impl OutcomeCode {
    /// One-character grid symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            OutcomeCode::Success => "0",
            OutcomeCode::DeserFailed => "1",
            OutcomeCode::VersionUnsupported => "V",
            OutcomeCode::PayloadError => "-",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub code: OutcomeCode,
    /// The log marker that decided the classification, when one matched.
    pub matched_marker: Option<&'static str>,
}

const MARKER_PAYLOAD_ERROR: &str = "Error while generating or serializing payload";
const MARKER_VERSION: &str = "Unsupported major.minor version";
const MARKER_SUCCESS: &str = "payload executed";
const MARKER_EXCEPTION: &str = "Exception";

/// Classifies one harness log. Markers are checked in precedence order:
/// payload-generation failure, class-version refusal, successful execution,
/// then any exception; a log with no marker counts as a deserialization
/// failure.
pub fn classify_outcome(log: &str) -> Outcome {
    if log.contains(MARKER_PAYLOAD_ERROR) {
        return Outcome {
            code: OutcomeCode::PayloadError,
            matched_marker: Some(MARKER_PAYLOAD_ERROR),
        };
    }
    if log.contains(MARKER_VERSION) {
        return Outcome {
            code: OutcomeCode::VersionUnsupported,
            matched_marker: Some(MARKER_VERSION),
        };
    }
    if log.contains(MARKER_SUCCESS) {
        return Outcome {
            code: OutcomeCode::Success,
            matched_marker: Some(MARKER_SUCCESS),
        };
    }
    if log.contains(MARKER_EXCEPTION) {
        return Outcome {
            code: OutcomeCode::DeserFailed,
            matched_marker: Some(MARKER_EXCEPTION),
        };
    }
    Outcome {
        code: OutcomeCode::DeserFailed,
        matched_marker: None,
    }
}

// ---- Version ordering ----

#[derive(PartialEq, Eq)]
enum VersionToken<'a> {
    Number(&'a str),
    Alpha(&'a str),
}

fn version_tokens(s: &str) -> Vec<VersionToken<'_>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let start = i;
        if bytes[i].is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push(VersionToken::Number(&s[start..i]));
        } else if bytes[i].is_ascii_alphabetic() {
            while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                i += 1;
            }
            out.push(VersionToken::Alpha(&s[start..i]));
        } else {
            // Separators (dots, dashes, underscores) only split tokens.
            i += 1;
        }
    }
    out
}

fn cmp_number_str(a: &str, b: &str) -> Ordering {
    let a = a.trim_start_matches('0');
    let b = b.trim_start_matches('0');
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

/// Natural version ordering: numeric runs compare as numbers (so `3.10`
/// sorts after `3.2`), alphabetic runs compare lexically, numbers sort before
/// letters, and a version extends a shared prefix sorts later.
pub fn version_cmp(a: &str, b: &str) -> Ordering {
    let ta = version_tokens(a);
    let tb = version_tokens(b);
    for pair in ta.iter().zip(tb.iter()) {
        let ord = match pair {
            (VersionToken::Number(x), VersionToken::Number(y)) => cmp_number_str(x, y),
            (VersionToken::Alpha(x), VersionToken::Alpha(y)) => x.cmp(y),
            (VersionToken::Number(_), VersionToken::Alpha(_)) => Ordering::Less,
            (VersionToken::Alpha(_), VersionToken::Number(_)) => Ordering::Greater,
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ta.len().cmp(&tb.len()).then_with(|| a.cmp(b))
}

// ---- Outcome grids ----

/// A complete outcome rectangle: one row per JVM version, one column per
/// library version, axes in natural version order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutcomeGrid {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// `cells[r][c]` is the outcome for `rows[r]` against `cols[c]`.
    pub cells: Vec<Vec<OutcomeCode>>,
}

impl OutcomeGrid {
    /// Assembles a grid from `(jvm, library_version, outcome)` records. The
    /// records must tile the rectangle exactly: every pair once, no
    /// duplicates, no holes.
    pub fn from_records(
        records: &[(String, String, OutcomeCode)],
    ) -> Result<OutcomeGrid, StudyError> {
        if records.is_empty() {
            return Err(StudyError::MisalignedInput {
                detail: "no outcome records".to_string(),
            });
        }
        let mut rows: Vec<String> = Vec::new();
        let mut cols: Vec<String> = Vec::new();
        for (jvm, lib, _) in records {
            if !rows.contains(jvm) {
                rows.push(jvm.clone());
            }
            if !cols.contains(lib) {
                cols.push(lib.clone());
            }
        }
        rows.sort_by(|a, b| version_cmp(a, b));
        cols.sort_by(|a, b| version_cmp(a, b));
        let mut seen: BTreeMap<(usize, usize), OutcomeCode> = BTreeMap::new();
        for (jvm, lib, code) in records {
            let r = rows.iter().position(|x| x == jvm).expect("row collected");
            let c = cols.iter().position(|x| x == lib).expect("col collected");
            if seen.insert((r, c), *code).is_some() {
                return Err(StudyError::MisalignedInput {
                    detail: format!("duplicate record for {jvm} x {lib}"),
                });
            }
        }
        let mut cells = Vec::with_capacity(rows.len());
        for r in 0..rows.len() {
            let mut row = Vec::with_capacity(cols.len());
            for c in 0..cols.len() {
                match seen.get(&(r, c)) {
                    Some(code) => row.push(*code),
                    None => {
                        return Err(StudyError::RaggedGrid {
                            row: r,
                            expected: cols.len(),
                            found: row.len(),
                        })
                    }
                }
            }
            cells.push(row);
        }
        Ok(OutcomeGrid { rows, cols, cells })
    }
}

/// Renders the grid as aligned text with a symbol legend. Rows and columns
/// are shown in natural version order; a ragged grid is refused.
pub fn render_matrix(grid: &OutcomeGrid) -> Result<String, StudyError> {
    if grid.cells.len() != grid.rows.len() {
        return Err(StudyError::RaggedGrid {
            row: grid.rows.len().min(grid.cells.len()),
            expected: grid.rows.len(),
            found: grid.cells.len(),
        });
    }
    for (r, row) in grid.cells.iter().enumerate() {
        if row.len() != grid.cols.len() {
            return Err(StudyError::RaggedGrid {
                row: r,
                expected: grid.cols.len(),
                found: row.len(),
            });
        }
    }
    // Re-sort both axes so callers that assembled a grid by hand still get
    // version-ordered output.
    let mut row_order: Vec<usize> = (0..grid.rows.len()).collect();
    row_order.sort_by(|&a, &b| version_cmp(&grid.rows[a], &grid.rows[b]));
    let mut col_order: Vec<usize> = (0..grid.cols.len()).collect();
    col_order.sort_by(|&a, &b| version_cmp(&grid.cols[a], &grid.cols[b]));

    let row_width = grid.rows.iter().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    out.push_str(&" ".repeat(row_width));
    for &c in &col_order {
        out.push_str("  ");
        out.push_str(&grid.cols[c]);
    }
    out.push('\n');
    for &r in &row_order {
        out.push_str(&format!("{:<row_width$}", grid.rows[r]));
        for &c in &col_order {
            let width = grid.cols[c].len();
            out.push_str("  ");
            out.push_str(&format!("{:<width$}", grid.cells[r][c].symbol()));
        }
        // Cells are padded to the column header width; strip line-trailing
        // spaces so the output diffs cleanly.
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    }
    out.push_str(
        "legend: 0=payload executed, 1=deserialization failed, V=unsupported class version, -=payload generation failed\n",
    );
    Ok(out)
}

// ---- Civil dates ----

/// Calendar date with day-precision arithmetic. Conversions use the
/// days-from-civil algorithm over a proleptic Gregorian calendar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CivilDate {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl CivilDate {
    pub fn new(year: i32, month: u8, day: u8) -> Option<CivilDate> {
        if !(1..=12).contains(&month) {
            return None;
        }
        let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        let days_in_month = match month {
            1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
            4 | 6 | 9 | 11 => 30,
            2 if leap => 29,
            2 => 28,
            _ => unreachable!("month range checked"),
        };
        if day == 0 || day > days_in_month {
            return None;
        }
        Some(CivilDate { year, month, day })
    }

    /// Parses `YYYY-MM-DD`.
    pub fn parse(s: &str) -> Option<CivilDate> {
        let mut parts = s.split('-');
        let year: i32 = parts.next()?.parse().ok()?;
        let month: u8 = parts.next()?.parse().ok()?;
        let day: u8 = parts.next()?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        CivilDate::new(year, month, day)
    }

    /// Days since 1970-01-01 (negative before it).
    pub fn day_number(&self) -> i64 {
        let y = self.year as i64 - if self.month <= 2 { 1 } else { 0 };
        let era = if y >= 0 { y } else { y - 399 } / 400;
        let yoe = y - era * 400;
        let m = self.month as i64;
        let d = self.day as i64;
        let doy = (153 * (m + if m > 2 { -3 } else { 9 }) + 2) / 5 + d - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146097 + doe - 719468
    }

    pub fn days_until(&self, later: &CivilDate) -> i64 {
        later.day_number() - self.day_number()
    }
}

impl fmt::Display for CivilDate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

// ---- Library lifecycle ----

/// One library release in a lifecycle catalog.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VersionRelease {
    pub version: String,
    pub date: CivilDate,
    /// Whether this release ships usable gadget material.
    pub gadget_flag: bool,
}

/// How a library's gadget exposure evolved over its release history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LifecycleCategory {
    /// Gadget material appeared after the first release and a later release
    /// removed it.
    IntroducedThenPatched,
    /// Gadget material appeared after the first release and never left.
    IntroducedNeverPatched,
    /// Already present in the first release that was ever published.
    FlawedFromFirstRelease,
}

impl LifecycleCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            LifecycleCategory::IntroducedThenPatched => "introduced-then-patched",
            LifecycleCategory::IntroducedNeverPatched => "introduced-never-patched",
            LifecycleCategory::FlawedFromFirstRelease => "flawed-from-first-release",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LifecycleRecord {
    pub library: String,
    pub category: LifecycleCategory,
    /// First release carrying gadget material.
    pub introduced: Option<(String, CivilDate)>,
    /// First later release without it.
    pub patched: Option<(String, CivilDate)>,
    /// Days from introduction to patch, when both ends exist.
    pub exposure_days: Option<i64>,
}

/// Computes the lifecycle of one library from its date-ordered release list.
/// Requires at least one flagged release; a library that never shipped
/// gadget material has no lifecycle to report.
pub fn compute_lifecycle(
    library: &str,
    releases: &[VersionRelease],
) -> Result<LifecycleRecord, StudyError> {
    if releases.is_empty() {
        return Err(StudyError::MisalignedInput {
            detail: format!("no releases for {library}"),
        });
    }
    for pair in releases.windows(2) {
        if pair[1].date < pair[0].date {
            return Err(StudyError::MisalignedInput {
                detail: format!(
                    "releases for {library} are not in date order ({} after {})",
                    pair[0].version, pair[1].version
                ),
            });
        }
    }
    let first_flagged = releases.iter().position(|r| r.gadget_flag).ok_or_else(|| {
        StudyError::MisalignedInput {
            detail: format!("no release of {library} is flagged as carrying gadget material"),
        }
    })?;
    let introduced = &releases[first_flagged];
    let patched = releases[first_flagged..].iter().find(|r| !r.gadget_flag);

    // Flawed-from-first-release takes precedence: when even the first
    // release was exposed there was never a clean baseline, patched or not.
    let category = if first_flagged == 0 {
        LifecycleCategory::FlawedFromFirstRelease
    } else if patched.is_some() {
        LifecycleCategory::IntroducedThenPatched
    } else {
        LifecycleCategory::IntroducedNeverPatched
    };
    let exposure_days = patched.map(|p| introduced.date.days_until(&p.date));
    Ok(LifecycleRecord {
        library: library.to_string(),
        category,
        introduced: Some((introduced.version.clone(), introduced.date)),
        patched: patched.map(|p| (p.version.clone(), p.date)),
        exposure_days,
    })
}

// ---- CVE aggregation ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum CveCategory {
    /// The advisory fixes a deserialization vulnerability.
    DeserVuln,
    /// The advisory fixes classes usable as gadget material.
    GadgetAvailable,
    /// The advisory does not say enough to tell.
    Unclear,
    /// Outside the classified scope (e.g. a different language ecosystem).
    Unclassified,
}

impl CveCategory {
    pub fn parse(s: &str) -> Option<CveCategory> {
        Some(match s {
            "DV" => CveCategory::DeserVuln,
            "GA" => CveCategory::GadgetAvailable,
            "UC" => CveCategory::Unclear,
            "unclassified" => CveCategory::Unclassified,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CveCategory::DeserVuln => "DV",
            CveCategory::GadgetAvailable => "GA",
            CveCategory::Unclear => "UC",
            CveCategory::Unclassified => "unclassified",
        }
    }
}

/// Remediation advised or applied for a CVE.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum MitigationKind {
    DisableDeserialization,
    AllowList,
    DenyList,
    AddChecks,
    UpgradeLibrary,
    ProtectPorts,
    DisableProtocol,
    EndOfLife,
    ChangeConfig,
}

impl MitigationKind {
    pub fn parse(s: &str) -> Option<MitigationKind> {
        Some(match s {
            "disable-deserialization" => MitigationKind::DisableDeserialization,
            "allow-list" => MitigationKind::AllowList,
            "deny-list" => MitigationKind::DenyList,
            "add-checks" => MitigationKind::AddChecks,
            "upgrade-library" => MitigationKind::UpgradeLibrary,
            "protect-ports" => MitigationKind::ProtectPorts,
            "disable-protocol" => MitigationKind::DisableProtocol,
            "end-of-life" => MitigationKind::EndOfLife,
            "change-config" => MitigationKind::ChangeConfig,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MitigationKind::DisableDeserialization => "disable-deserialization",
            MitigationKind::AllowList => "allow-list",
            MitigationKind::DenyList => "deny-list",
            MitigationKind::AddChecks => "add-checks",
            MitigationKind::UpgradeLibrary => "upgrade-library",
            MitigationKind::ProtectPorts => "protect-ports",
            MitigationKind::DisableProtocol => "disable-protocol",
            MitigationKind::EndOfLife => "end-of-life",
            MitigationKind::ChangeConfig => "change-config",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CveRecord {
    pub id: String,
    pub year: u16,
    /// Ecosystem label, lower case (`java`, `php`, `dotnet`, `xml`).
    pub language: String,
    pub category: CveCategory,
    pub mitigation: Option<MitigationKind>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StudyStats {
    /// Records with a category other than unclassified.
    pub classified: u64,
    pub deser_vuln: u64,
    pub gadget_available: u64,
    pub unclear: u64,
    /// Advisory counts per language per year, all records included.
    pub per_year: BTreeMap<String, BTreeMap<u16, u64>>,
    pub mitigations: BTreeMap<MitigationKind, u64>,
}

impl StudyStats {
    fn percent(&self, part: u64) -> f64 {
        if self.classified == 0 {
            0.0
        } else {
            part as f64 * 100.0 / self.classified as f64
        }
    }

    pub fn deser_vuln_percent(&self) -> f64 {
        self.percent(self.deser_vuln)
    }

    pub fn gadget_available_percent(&self) -> f64 {
        self.percent(self.gadget_available)
    }

    pub fn unclear_percent(&self) -> f64 {
        self.percent(self.unclear)
    }
}

/// Aggregates advisory records into category proportions, per-language
/// yearly counts, and a mitigation histogram.
pub fn aggregate_cves(records: &[CveRecord]) -> StudyStats {
    let mut stats = StudyStats::default();
    for record in records {
        match record.category {
            CveCategory::DeserVuln => {
                stats.classified += 1;
                stats.deser_vuln += 1;
            }
            CveCategory::GadgetAvailable => {
                stats.classified += 1;
                stats.gadget_available += 1;
            }
            CveCategory::Unclear => {
                stats.classified += 1;
                stats.unclear += 1;
            }
            CveCategory::Unclassified => {}
        }
        *stats
            .per_year
            .entry(record.language.clone())
            .or_default()
            .entry(record.year)
            .or_default() += 1;
        if let Some(mitigation) = record.mitigation {
            *stats.mitigations.entry(mitigation).or_default() += 1;
        }
    }
    stats
}
