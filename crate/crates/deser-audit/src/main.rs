//! Command-line auditor for Java deserialization attack surfaces.
//!
//! Exit codes are uniform across subcommands: 0 = clean, 2 = findings
//! (chains, labels, or a rejected stream), 1 = operational error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use deser_audit::classpath::open_classpath;
use deser_audit::formats::{self, defaults, ConfigFile};
use deser_audit::report::Report;
use deser_core::filter::{apply_filter, parse_filter, FilterDecision};
use deser_core::gadgetgraph::{
    build_callgraph, entry_points, find_chains, serializable_classes, GraphOptions,
};
use deser_core::libdiff::{classify_introduction, classify_patch, diff_indexes, ClassDelta};
use deser_core::serialstream::{dump, parse_stream};
use deser_core::study::{
    aggregate_cves, classify_outcome, compute_lifecycle, plan_matrix, render_matrix, OutcomeGrid,
};

const FILTER_ENV: &str = "DESER_AUDIT_FILTER";
const DEFAULT_MAX_DEPTH: usize = 12;

#[derive(Parser)]
#[command(
    name = "deser-audit",
    version,
    about = "Static auditor for Java deserialization attack surfaces"
)]
struct Cli {
    /// Report format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Config file with `key = value` lines (format, filter, max-depth,
    /// sinks, triggers). Flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a classpath for gadget chains from deserialization entry points.
    Scan(ScanArgs),
    /// Decode or filter Java serialization streams.
    #[command(subcommand)]
    Stream(StreamCmd),
    /// Diff two library versions and classify the change.
    Diff(DiffArgs),
    /// Reproduce study arithmetic over bundled or supplied datasets.
    #[command(subcommand)]
    Study(StudyCmd),
}

#[derive(Args)]
struct ScanArgs {
    /// Classpath entries: directories, `.class` files, or ZIP/JAR archives.
    #[arg(required = true)]
    classpath: Vec<PathBuf>,
    /// Sink list file (`owner method descriptor-prefix`); defaults bundled.
    #[arg(long)]
    sinks: Option<PathBuf>,
    /// Trigger table file (`container containerMethod calleePattern`);
    /// defaults bundled.
    #[arg(long)]
    triggers: Option<PathBuf>,
    /// Maximum chain length in frames.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Fan virtual dispatch out to non-serializable receivers too.
    #[arg(long)]
    all_receivers: bool,
}

#[derive(Subcommand)]
enum StreamCmd {
    /// Decode a stream and print its element tree.
    Dump { stream: PathBuf },
    /// Evaluate a class filter against a stream.
    Filter {
        stream: PathBuf,
        /// Filter spec text; overrides DESER_AUDIT_FILTER and the config.
        #[arg(long)]
        pattern: Option<String>,
        /// File containing the filter spec.
        #[arg(long, conflicts_with = "pattern")]
        filter_file: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DiffArgs {
    /// Old version: directory, `.class` file, or archive.
    #[arg(long)]
    old: PathBuf,
    /// New version: directory, `.class` file, or archive.
    #[arg(long)]
    new: PathBuf,
    /// Which taxonomy to classify the delta against.
    #[arg(long, value_enum)]
    mode: DiffMode,
    /// File of class names (one per line) restricting classification.
    #[arg(long)]
    focus: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DiffMode {
    Introduction,
    Patch,
}

#[derive(Subcommand)]
enum StudyCmd {
    /// Compute per-attack and total run counts.
    Plan {
        /// Attack matrix file; defaults to the bundled 19-attack set.
        #[arg(long)]
        attacks: Option<PathBuf>,
    },
    /// Classify run logs and render the outcome matrix.
    Outcomes {
        /// Run-record file: `jvm_version,library_version,log_path`.
        #[arg(long)]
        runs: PathBuf,
    },
    /// Compute gadget exposure lifecycles from a release catalog.
    Lifecycle {
        /// Release catalog; defaults to the bundled catalog.
        #[arg(long)]
        releases: Option<PathBuf>,
        /// Restrict the report to one library.
        #[arg(long)]
        library: Option<String>,
    },
    /// Aggregate CVE records into category and mitigation statistics.
    Cves {
        /// CVE record file; defaults to the bundled dataset.
        #[arg(long)]
        records: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("deser-audit: error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            formats::parse_config(&path.display().to_string(), &text)?
        }
        None => ConfigFile::default(),
    };
    let format = resolve_format(cli.format, &config)?;

    let (report, text, code) = match cli.command {
        Command::Scan(args) => cmd_scan(args, &config)?,
        Command::Stream(cmd) => cmd_stream(cmd, &config)?,
        Command::Diff(args) => cmd_diff(args)?,
        Command::Study(cmd) => cmd_study(cmd)?,
    };
    match format {
        OutputFormat::Text => print!("{text}"),
        OutputFormat::Json => print!("{}", report.to_json()),
    }
    Ok(code)
}

fn resolve_format(flag: Option<OutputFormat>, config: &ConfigFile) -> Result<OutputFormat> {
    if let Some(format) = flag {
        return Ok(format);
    }
    match config.format.as_deref() {
        None => Ok(OutputFormat::Text),
        Some("text") => Ok(OutputFormat::Text),
        Some("json") => Ok(OutputFormat::Json),
        Some(other) => bail!("config format {other:?} is not `text` or `json`"),
    }
}

/// Reads a file, registering its digest under the report's inputs.
fn slurp(report: &mut Report, path: &Path) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    report.add_input(&path.display().to_string(), &bytes);
    Ok(bytes)
}

fn slurp_text(report: &mut Report, path: &Path) -> Result<String> {
    let bytes = slurp(report, path)?;
    String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
}

/// Resolves an optional file against a bundled default, registering whichever
/// source is used.
fn text_or_default(
    report: &mut Report,
    file: Option<&Path>,
    default_name: &str,
    default_text: &'static str,
) -> Result<(String, String)> {
    match file {
        Some(path) => Ok((path.display().to_string(), slurp_text(report, path)?)),
        None => {
            let name = format!("builtin:{default_name}");
            report.add_input(&name, default_text.as_bytes());
            Ok((name, default_text.to_string()))
        }
    }
}

// ---- scan ----

fn cmd_scan(args: ScanArgs, config: &ConfigFile) -> Result<(Report, String, u8)> {
    let mut report = Report::new("scan");

    let sink_path = args
        .sinks
        .or_else(|| config.sinks.as_ref().map(PathBuf::from));
    let (sink_name, sink_text) =
        text_or_default(&mut report, sink_path.as_deref(), "sinks.txt", defaults::SINKS)?;
    let sinks = formats::parse_sinks(&sink_name, &sink_text)?;

    let trigger_path = args
        .triggers
        .or_else(|| config.triggers.as_ref().map(PathBuf::from));
    let (trigger_name, trigger_text) = text_or_default(
        &mut report,
        trigger_path.as_deref(),
        "triggers.txt",
        defaults::TRIGGERS,
    )?;
    let triggers = formats::parse_triggers(&trigger_name, &trigger_text)?;

    let max_depth = args
        .max_depth
        .or(config.max_depth)
        .unwrap_or(DEFAULT_MAX_DEPTH);

    let loaded = open_classpath(&args.classpath)?;
    report.inputs.extend(loaded.inputs.iter().cloned());
    for failure in &loaded.failures {
        report.warn(format!("unparsable entry {}: {}", failure.origin, failure.detail));
    }

    let options = GraphOptions {
        serializable_only_receivers: !args.all_receivers,
        sinks,
        triggers,
    };
    let graph = build_callgraph(&loaded.index, &options);
    let entries = entry_points(&loaded.index);
    let search = find_chains(&graph, &entries, max_depth);
    if !search.complete {
        report.warn("expansion budget exhausted; chain list may be incomplete");
    }

    let serializable = serializable_classes(&loaded.index);
    let chains: Vec<Value> = search
        .chains
        .iter()
        .map(|chain| {
            json!({
                "length": chain.len(),
                "frames": chain.frames,
                "edge_kinds": chain.edge_kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>(),
                "description": chain.describe(),
            })
        })
        .collect();
    report.findings = json!({
        "classes_indexed": loaded.index.len(),
        "duplicates": loaded.index.duplicate_log(),
        "parse_failures": loaded.failures,
        "serializable_classes": serializable.len(),
        "entry_points": entries,
        "search": {
            "max_depth": max_depth,
            "complete": search.complete,
            "expansions": search.expansions,
        },
        "resolution": graph.resolution_log,
        "chains": chains,
    });

    let mut text = format!(
        "indexed {} classes ({} duplicate entries, {} parse failures)\n",
        loaded.index.len(),
        loaded.index.duplicate_log().len(),
        loaded.failures.len(),
    );
    text.push_str(&format!("serializable classes: {}\n", serializable.len()));
    text.push_str(&format!("entry points: {}\n", entries.len()));
    for entry in &entries {
        text.push_str(&format!(
            "  {}.{} ({})\n",
            entry.class_name, entry.method_name, entry.reason
        ));
    }
    text.push_str(&format!(
        "chains found: {}{}\n",
        search.chains.len(),
        if search.complete { "" } else { " (incomplete)" },
    ));
    for chain in &search.chains {
        text.push_str(&format!("  [{} frames] {}\n", chain.len(), chain.describe()));
        let kinds: Vec<&str> = chain.edge_kinds.iter().map(|k| k.as_str()).collect();
        text.push_str(&format!("    edges: {}\n", kinds.join(" -> ")));
    }

    let code = if search.chains.is_empty() { 0 } else { 2 };
    Ok((report, text, code))
}

// ---- stream ----

fn cmd_stream(cmd: StreamCmd, config: &ConfigFile) -> Result<(Report, String, u8)> {
    match cmd {
        StreamCmd::Dump { stream } => {
            let mut report = Report::new("stream dump");
            let bytes = slurp(&mut report, &stream)?;
            let graph =
                parse_stream(&bytes).map_err(|e| anyhow!("{}: {e}", stream.display()))?;
            let rendering = dump(&graph);
            report.findings = json!({
                "total_bytes": graph.total_bytes,
                "total_refs": graph.total_refs,
                "max_depth": graph.max_depth_observed,
                "max_array_len": graph.max_array_len,
                "roots": graph.roots.len(),
                "elements": graph.elements.len(),
                "class_names": graph.class_names(),
                "rendering": rendering,
            });
            Ok((report, rendering, 0))
        }
        StreamCmd::Filter {
            stream,
            pattern,
            filter_file,
        } => {
            let mut report = Report::new("stream filter");
            // Layering: flag beats the environment beats the config file.
            let spec = match (pattern, filter_file) {
                (Some(p), _) => p,
                (None, Some(path)) => slurp_text(&mut report, &path)?.trim().to_string(),
                (None, None) => std::env::var(FILTER_ENV)
                    .ok()
                    .or_else(|| config.filter.clone())
                    .ok_or_else(|| {
                        anyhow!(
                            "no filter given: use --pattern, --filter-file, \
                             {FILTER_ENV}, or a config `filter` entry"
                        )
                    })?,
            };
            let filter = parse_filter(&spec).map_err(|e| anyhow!("bad filter spec: {e}"))?;
            let bytes = slurp(&mut report, &stream)?;
            let graph =
                parse_stream(&bytes).map_err(|e| anyhow!("{}: {e}", stream.display()))?;
            let verdict = apply_filter(&graph, &filter);
            report.findings = json!({
                "filter": filter.render(),
                "decision": verdict.decision.as_str(),
                "rejected_class": verdict.rejected_class,
                "violated_limit": verdict.violated_limit,
                "position": verdict.position,
            });
            let mut text = format!("filter: {}\n", filter.render());
            text.push_str(&format!("decision: {}\n", verdict.decision.as_str()));
            if let Some(class) = &verdict.rejected_class {
                text.push_str(&format!("rejected class: {class}\n"));
            }
            if let Some(limit) = verdict.violated_limit {
                text.push_str(&format!("violated limit: {limit}\n"));
            }
            if let Some(position) = verdict.position {
                text.push_str(&format!("position: {position}\n"));
            }
            let code = if verdict.decision == FilterDecision::Rejected { 2 } else { 0 };
            Ok((report, text, code))
        }
    }
}

// ---- diff ----

fn label_json(action: &str, classes: &std::collections::BTreeSet<String>, evidence: &[ClassDelta]) -> Value {
    json!({
        "action": action,
        "classes": classes,
        "evidence": evidence,
    })
}

fn cmd_diff(args: DiffArgs) -> Result<(Report, String, u8)> {
    let mut report = Report::new("diff");
    let old = open_classpath(std::slice::from_ref(&args.old))?;
    let new = open_classpath(std::slice::from_ref(&args.new))?;
    report.inputs.extend(old.inputs.iter().cloned());
    report.inputs.extend(new.inputs.iter().cloned());
    for failure in old.failures.iter().chain(&new.failures) {
        report.warn(format!("unparsable entry {}: {}", failure.origin, failure.detail));
    }

    let focus = match &args.focus {
        Some(path) => Some(formats::parse_focus(&slurp_text(&mut report, path)?)),
        None => None,
    };
    let deltas = diff_indexes(&old.index, &new.index);

    let (labels_json, label_lines): (Vec<Value>, Vec<String>) = match args.mode {
        DiffMode::Introduction => classify_introduction(&deltas, focus.as_ref())
            .iter()
            .map(|l| {
                (
                    label_json(l.action.as_str(), &l.classes, &l.evidence),
                    format!(
                        "  {}: {}",
                        l.action.as_str(),
                        l.classes.iter().cloned().collect::<Vec<_>>().join(", ")
                    ),
                )
            })
            .unzip(),
        DiffMode::Patch => classify_patch(&deltas, focus.as_ref())
            .iter()
            .map(|l| {
                (
                    label_json(l.action.as_str(), &l.classes, &l.evidence),
                    format!(
                        "  {}: {}",
                        l.action.as_str(),
                        l.classes.iter().cloned().collect::<Vec<_>>().join(", ")
                    ),
                )
            })
            .unzip(),
    };

    report.findings = json!({
        "mode": match args.mode {
            DiffMode::Introduction => "introduction",
            DiffMode::Patch => "patch",
        },
        "deltas": deltas,
        "labels": labels_json,
    });

    let mut text = format!("deltas: {}\n", deltas.len());
    text.push_str(&format!("labels: {}\n", labels_json.len()));
    for line in &label_lines {
        text.push_str(line);
        text.push('\n');
    }
    let code = if labels_json.is_empty() { 0 } else { 2 };
    Ok((report, text, code))
}

// ---- study ----

fn cmd_study(cmd: StudyCmd) -> Result<(Report, String, u8)> {
    match cmd {
        StudyCmd::Plan { attacks } => {
            let mut report = Report::new("study plan");
            let (name, text) = text_or_default(
                &mut report,
                attacks.as_deref(),
                "attacks.txt",
                defaults::ATTACKS,
            )?;
            let specs = formats::parse_attacks(&name, &text)?;
            let mut plans = Vec::with_capacity(specs.len());
            let mut grand_total: u64 = 0;
            for spec in &specs {
                let plan = plan_matrix(spec).map_err(|e| anyhow!("{name}: {e}"))?;
                grand_total += plan.total;
                plans.push(plan);
            }
            report.findings = json!({
                "attacks": plans,
                "grand_total": grand_total,
            });
            let mut out = String::new();
            for plan in &plans {
                let libs: Vec<String> = plan
                    .per_library
                    .iter()
                    .map(|(lib, runs)| format!("{lib} {runs}"))
                    .collect();
                out.push_str(&format!(
                    "{}: {} runs{}\n",
                    plan.attack,
                    plan.total,
                    if libs.is_empty() {
                        String::new()
                    } else {
                        format!(" ({})", libs.join(", "))
                    },
                ));
            }
            out.push_str(&format!(
                "grand total: {grand_total} runs across {} attacks\n",
                plans.len()
            ));
            Ok((report, out, 0))
        }
        StudyCmd::Outcomes { runs } => {
            let mut report = Report::new("study outcomes");
            let text = slurp_text(&mut report, &runs)?;
            let records = formats::parse_run_records(&runs.display().to_string(), &text)?;
            // Relative log paths resolve against the run file's directory.
            let base = runs.parent().unwrap_or(Path::new("."));
            let mut outcomes = Vec::with_capacity(records.len());
            for (jvm, lib, log_path) in &records {
                let path = base.join(log_path);
                let log = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading log {}", path.display()))?;
                outcomes.push((jvm.clone(), lib.clone(), classify_outcome(&log).code));
            }
            let grid = OutcomeGrid::from_records(&outcomes)?;
            let rendering = render_matrix(&grid)?;
            let symbols: Vec<Vec<&str>> = grid
                .cells
                .iter()
                .map(|row| row.iter().map(|c| c.symbol()).collect())
                .collect();
            report.findings = json!({
                "rows": grid.rows,
                "cols": grid.cols,
                "cells": symbols,
                "rendering": rendering,
            });
            Ok((report, rendering, 0))
        }
        StudyCmd::Lifecycle { releases, library } => {
            let mut report = Report::new("study lifecycle");
            let (name, text) = text_or_default(
                &mut report,
                releases.as_deref(),
                "releases.txt",
                defaults::RELEASES,
            )?;
            let mut catalog = formats::parse_releases(&name, &text)?;
            if catalog.is_empty() {
                bail!("{name}: no release rows");
            }
            if let Some(library) = &library {
                let releases = catalog
                    .remove(library)
                    .ok_or_else(|| anyhow!("{name}: no releases for library {library:?}"))?;
                catalog = BTreeMap::from([(library.clone(), releases)]);
            }
            let mut records_json = Vec::new();
            let mut out = String::new();
            for (library, releases) in &catalog {
                let record = compute_lifecycle(library, releases).map_err(|e| anyhow!("{e}"))?;
                let exposure_years = record.exposure_days.map(|d| d as f64 / 365.25);
                records_json.push(json!({
                    "library": record.library,
                    "category": record.category.as_str(),
                    "introduced": record.introduced.as_ref().map(|(v, d)| {
                        json!({"version": v, "date": d.to_string()})
                    }),
                    "patched": record.patched.as_ref().map(|(v, d)| {
                        json!({"version": v, "date": d.to_string()})
                    }),
                    "exposure_days": record.exposure_days,
                    "exposure_years": exposure_years,
                }));
                let (intro_version, intro_date) =
                    record.introduced.as_ref().expect("flagged release required");
                out.push_str(&format!(
                    "{library}: {}, introduced {intro_version} ({intro_date})",
                    record.category.as_str(),
                ));
                match (&record.patched, record.exposure_days) {
                    (Some((version, date)), Some(days)) => out.push_str(&format!(
                        ", patched {version} ({date}), exposed {days} days ({:.1} years)\n",
                        days as f64 / 365.25,
                    )),
                    _ => out.push_str(", never patched\n"),
                }
            }
            report.findings = json!({ "records": records_json });
            Ok((report, out, 0))
        }
        StudyCmd::Cves { records } => {
            let mut report = Report::new("study cves");
            let (name, text) =
                text_or_default(&mut report, records.as_deref(), "cves.csv", defaults::CVES)?;
            let records = formats::parse_cves(&name, &text)?;
            let stats = aggregate_cves(&records);
            let mitigations: BTreeMap<&str, u64> = stats
                .mitigations
                .iter()
                .map(|(kind, count)| (kind.as_str(), *count))
                .collect();
            report.findings = json!({
                "records": records.len(),
                "classified": stats.classified,
                "categories": {
                    "DV": stats.deser_vuln,
                    "GA": stats.gadget_available,
                    "UC": stats.unclear,
                },
                "percentages": {
                    "DV": stats.deser_vuln_percent(),
                    "GA": stats.gadget_available_percent(),
                    "UC": stats.unclear_percent(),
                },
                "per_year": stats.per_year,
                "mitigations": mitigations,
            });
            let mut out = format!(
                "classified: {} of {} records\n  DV {} ({:.1}%), UC {} ({:.1}%), GA {} ({:.1}%)\n",
                stats.classified,
                records.len(),
                stats.deser_vuln,
                stats.deser_vuln_percent(),
                stats.unclear,
                stats.unclear_percent(),
                stats.gadget_available,
                stats.gadget_available_percent(),
            );
            let mitigated: u64 = mitigations.values().sum();
            out.push_str(&format!("mitigations recorded for {mitigated} CVEs:\n"));
            let mut rows: Vec<(&str, u64)> =
                mitigations.iter().map(|(k, v)| (*k, *v)).collect();
            rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            for (kind, count) in rows {
                out.push_str(&format!("  {kind} {count}\n"));
            }
            Ok((report, out, 0))
        }
    }
}
