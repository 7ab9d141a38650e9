//! End-to-end gates: bundled dataset arithmetic, reference-chain discovery,
//! delta-taxonomy histograms, lifecycle categories, CVE statistics, parser
//! robustness, patch effects on chains, and filter blocking.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use deser_audit::formats::{self, defaults};
use deser_core::classfile::{parse_class, ClasspathIndex};
use deser_core::filter::{apply_filter, parse_filter, FilterDecision};
use deser_core::gadgetgraph::{
    build_callgraph, entry_points, extract_deser_types, find_chains, GraphOptions,
};
use deser_core::libdiff::{classify_introduction, classify_patch, diff_indexes};
use deser_core::serialstream::{
    parse_stream, parse_stream_with_depth_cap, StreamParseError, Tag,
};
use deser_core::study::{aggregate_cves, compute_lifecycle, LifecycleCategory, MitigationKind};
use deser_testkit::classes::expected_calls;
use deser_testkit::corpus::{
    app_fixtures, attack_streams, gadget_classpath_unserializable_lazymap,
    gadget_classpath_with_check, introduction_pairs, nested_stream, patch_pairs,
    reference_gadget_classpath, NamedClass,
};
use deser_testkit::random;

fn run_tool(args: &[&str]) -> (i32, String, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_deser-audit"))
        .args(args)
        .env_remove("DESER_AUDIT_FILTER")
        .output()
        .expect("tool runs");
    (
        output.status.code().expect("tool exits"),
        String::from_utf8(output.stdout).expect("stdout is UTF-8"),
        String::from_utf8(output.stderr).expect("stderr is UTF-8"),
    )
}

fn write_classpath(dir: &Path, classes: &[NamedClass]) {
    for (name, bytes) in classes {
        let path = dir.join(format!("{name}.class"));
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, bytes).unwrap();
    }
}

fn index_of(classes: &[NamedClass]) -> ClasspathIndex {
    let mut index = ClasspathIndex::new();
    for (name, bytes) in classes {
        let model = parse_class(bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(index.insert(model, name), "duplicate class {name}");
    }
    index
}

fn chain_descriptions(classes: &[NamedClass]) -> BTreeSet<String> {
    let index = index_of(classes);
    let graph = build_callgraph(&index, &GraphOptions::default());
    let search = find_chains(&graph, &entry_points(&index), 16);
    assert!(search.complete);
    search.chains.iter().map(|c| c.describe()).collect()
}

// ---- bundled attack matrix ----

#[test]
fn bundled_attack_plan_reproduces_every_total_and_the_grand_total() {
    let started = Instant::now();
    let (code, stdout, stderr) = run_tool(&["study", "plan", "--format", "json"]);
    let elapsed = started.elapsed();
    assert_eq!(code, 0, "stderr: {stderr}");

    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let attacks = report["findings"]["attacks"].as_array().unwrap();
    let expected: BTreeMap<&str, u64> = [
        ("BeanShell1", 2352),
        ("Click1", 4116),
        ("Clojure", 21315),
        ("CommonsBeanutils1", 8232),
        ("CommonsCollections1", 1911),
        ("CommonsCollections2", 1911),
        ("CommonsCollections3", 1911),
        ("CommonsCollections4", 1911),
        ("CommonsCollections5", 1911),
        ("CommonsCollections6", 1911),
        ("CommonsCollections7", 1911),
        ("Groovy1", 28224),
        ("JDK7u21", 147),
        ("Rhino1", 3822),
        ("Rhino2", 3822),
        ("ROME", 1764),
        ("Spring1", 53802),
        ("Spring2", 57036),
        ("Vaadin1", 58506),
    ]
    .into_iter()
    .collect();
    assert_eq!(attacks.len(), expected.len());
    for attack in attacks {
        let name = attack["attack"].as_str().unwrap();
        let total = attack["total"].as_u64().unwrap();
        assert_eq!(total, expected[name], "{name}");
    }
    assert_eq!(report["findings"]["grand_total"].as_u64(), Some(256_515));
    assert!(elapsed < Duration::from_secs(1), "plan took {elapsed:?}");
}

// ---- reference chain ----

#[test]
fn scan_reports_the_reference_chain_frames_in_order() {
    let dir = tempfile::tempdir().unwrap();
    write_classpath(dir.path(), &reference_gadget_classpath());

    let started = Instant::now();
    let (code, stdout, stderr) = run_tool(&[
        "scan",
        dir.path().to_str().unwrap(),
        "--format",
        "json",
    ]);
    let elapsed = started.elapsed();
    assert_eq!(code, 2, "stderr: {stderr}");

    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let chains = report["findings"]["chains"].as_array().unwrap();
    let seven = "sun/reflect/annotation/AnnotationInvocationHandler.readObject \
                 -> java/util/Map.entrySet \
                 -> sun/reflect/annotation/AnnotationInvocationHandler.invoke \
                 -> org/apache/commons/collections/map/LazyMap.get \
                 -> org/apache/commons/collections/functors/ChainedTransformer.transform \
                 -> org/apache/commons/collections/functors/InvokerTransformer.transform \
                 -> java/lang/reflect/Method.invoke";
    let descriptions: Vec<&str> = chains
        .iter()
        .map(|c| c["description"].as_str().unwrap())
        .collect();
    assert!(descriptions.contains(&seven), "got {descriptions:#?}");
    let exec = format!("{seven} -> java/lang/Runtime.exec");
    assert!(descriptions.contains(&exec.as_str()), "got {descriptions:#?}");

    let gadget_chain = chains
        .iter()
        .find(|c| c["description"] == seven)
        .unwrap();
    let methods: Vec<&str> = gadget_chain["frames"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["method_name"].as_str().unwrap())
        .collect();
    assert_eq!(
        methods,
        ["readObject", "entrySet", "invoke", "get", "transform", "transform", "invoke"]
    );
    assert!(elapsed < Duration::from_secs(5), "scan took {elapsed:?}");
}

// ---- version-delta taxonomies ----

#[test]
fn introduction_pairs_histogram_is_exact_with_zero_mismatches() {
    let mut histogram: BTreeMap<&str, usize> = BTreeMap::new();
    for pair in &introduction_pairs() {
        let deltas = diff_indexes(&index_of(&pair.old), &index_of(&pair.new));
        let focus: BTreeSet<String> = pair.focus.iter().cloned().collect();
        let labels = classify_introduction(&deltas, Some(&focus));
        assert_eq!(labels.len(), 1, "{} {}->{}", pair.library, pair.old_version, pair.new_version);
        assert_eq!(
            labels[0].action.as_str(),
            pair.expected.unwrap(),
            "{} {}->{}",
            pair.library,
            pair.old_version,
            pair.new_version,
        );
        *histogram.entry(pair.expected.unwrap()).or_default() += 1;
    }
    let expected: BTreeMap<&str, usize> = [
        ("add-class", 8),
        ("make-serializable", 3),
        ("change-to-public", 1),
        ("add-methods", 2),
    ]
    .into_iter()
    .collect();
    assert_eq!(histogram, expected);
}

#[test]
fn patch_pairs_match_row_for_row_with_six_unpatched_of_fourteen() {
    let pairs = patch_pairs();
    assert_eq!(pairs.len(), 14);
    let mut unpatched = 0;
    for pair in &pairs {
        let deltas = diff_indexes(&index_of(&pair.old), &index_of(&pair.new));
        let focus: BTreeSet<String> = pair.focus.iter().cloned().collect();
        let labels = classify_patch(&deltas, Some(&focus));
        match pair.expected {
            Some(action) => {
                assert_eq!(labels.len(), 1, "{} {}->{}", pair.library, pair.old_version, pair.new_version);
                assert_eq!(
                    labels[0].action.as_str(),
                    action,
                    "{} {}->{}",
                    pair.library,
                    pair.old_version,
                    pair.new_version,
                );
            }
            None => {
                assert!(labels.is_empty(), "{}: {labels:?}", pair.library);
                unpatched += 1;
            }
        }
    }
    assert_eq!(unpatched, 6);
}

// ---- lifecycles ----

#[test]
fn bundled_release_catalog_yields_the_three_lifecycle_categories() {
    let catalog = formats::parse_releases("builtin:releases.txt", defaults::RELEASES).unwrap();

    let cc = compute_lifecycle("commons-collections", &catalog["commons-collections"]).unwrap();
    assert_eq!(cc.category, LifecycleCategory::IntroducedThenPatched);
    let years = cc.exposure_days.unwrap() as f64 / 365.25;
    assert!((10.5..=11.5).contains(&years), "exposure {years} years");

    let beanutils = compute_lifecycle("commons-beanutils", &catalog["commons-beanutils"]).unwrap();
    assert_eq!(beanutils.category, LifecycleCategory::IntroducedNeverPatched);

    for library in ["javax-servlet", "vaadin-server"] {
        let record = compute_lifecycle(library, &catalog[library]).unwrap();
        assert_eq!(
            record.category,
            LifecycleCategory::FlawedFromFirstRelease,
            "{library}"
        );
    }
}

// ---- CVE aggregates ----

#[test]
fn bundled_cve_records_reproduce_the_reference_statistics() {
    let records = formats::parse_cves("builtin:cves.csv", defaults::CVES).unwrap();
    let stats = aggregate_cves(&records);

    assert_eq!(stats.classified, 104);
    assert!((stats.deser_vuln_percent() - 91.3).abs() <= 0.2);
    assert!((stats.unclear_percent() - 7.7).abs() <= 0.2);
    assert!((stats.gadget_available_percent() - 1.0).abs() <= 0.2);

    let java = &stats.per_year["java"];
    assert_eq!(java[&2015], 7);
    assert_eq!(java[&2016], 21);
    assert_eq!(java[&2020], 22);
    assert_eq!(java.values().sum::<u64>(), 104);

    let expected: BTreeMap<MitigationKind, u64> = [
        (MitigationKind::DisableDeserialization, 11),
        (MitigationKind::AllowList, 11),
        (MitigationKind::DenyList, 10),
        (MitigationKind::AddChecks, 8),
        (MitigationKind::UpgradeLibrary, 7),
        (MitigationKind::ProtectPorts, 4),
        (MitigationKind::DisableProtocol, 3),
        (MitigationKind::EndOfLife, 3),
        (MitigationKind::ChangeConfig, 1),
    ]
    .into_iter()
    .collect();
    assert_eq!(stats.mitigations, expected);
}

// ---- parser robustness ----

#[test]
fn randomized_class_and_stream_round_trips_all_pass() {
    let mut rng = random::rng(0xACCE_97);
    for case in 0..256 {
        let spec = random::random_class(&mut rng);
        let model = parse_class(&spec.build())
            .unwrap_or_else(|e| panic!("class case {case}: {e}"));
        assert_eq!(model.binary_name, spec.name, "case {case}");
        assert_eq!(model.access_flags, spec.access, "case {case}");
        assert_eq!(model.super_name, spec.super_name, "case {case}");
        assert_eq!(model.interfaces, spec.interfaces, "case {case}");
        assert_eq!(model.methods.len(), spec.methods.len(), "case {case}");
        for (method, expect) in model.methods.iter().zip(&spec.methods) {
            let calls = expected_calls(expect.code.as_deref().unwrap_or(&[]));
            assert_eq!(method.call_sites.len(), calls.len(), "case {case}");
            for (got, want) in method.call_sites.iter().zip(&calls) {
                assert_eq!(got.owner, want.owner, "case {case}");
                assert_eq!(got.method_name, want.method_name, "case {case}");
            }
        }
    }

    for case in 0..256 {
        let (bytes, facts) = random::random_stream(&mut rng);
        let graph = parse_stream(&bytes).unwrap_or_else(|e| panic!("stream case {case}: {e}"));
        assert_eq!(graph.roots.len(), facts.root_count, "case {case}");
        let handles = graph.elements.iter().filter(|el| el.handle.is_some()).count();
        assert_eq!(handles as u32, facts.handles_taken, "case {case}");
        let mut texts: Vec<&str> = graph
            .elements
            .iter()
            .filter(|el| el.tag == Some(Tag::Str) || el.tag == Some(Tag::LongStr))
            .filter_map(|el| el.text.as_deref())
            .filter(|t| !t.starts_with('L') && !t.starts_with('['))
            .collect();
        let mut expected: Vec<&str> = facts.string_texts.iter().map(|s| s.as_str()).collect();
        texts.sort_unstable();
        expected.sort_unstable();
        assert_eq!(texts, expected, "case {case}");
    }
}

#[test]
fn ten_thousand_case_fuzz_never_crashes_either_parser() {
    let mut rng = random::rng(0xF0_77E5);
    for i in 0..10_000 {
        let bytes = random::random_class(&mut rng).build();
        let mutated = match i % 3 {
            0 => random::truncated(&bytes, &mut rng),
            1 => random::bitflipped(&bytes, &mut rng),
            _ => random::garbage(&mut rng, &[0xCA, 0xFE, 0xBA, 0xBE]),
        };
        let _ = parse_class(&mutated);
    }
    for i in 0..10_000 {
        let (bytes, _) = random::random_stream(&mut rng);
        let mutated = match i % 3 {
            0 => random::truncated(&bytes, &mut rng),
            1 => random::bitflipped(&bytes, &mut rng),
            _ => random::garbage(&mut rng, &[0xAC, 0xED, 0x00, 0x05]),
        };
        let _ = parse_stream(&mutated);
    }

    // Recursion stays bounded: a 1500-deep stream trips the default cap and
    // decodes under a raised one.
    let deep = nested_stream(1500);
    assert!(matches!(
        parse_stream(&deep),
        Err(StreamParseError::DepthCapExceeded { .. })
    ));
    let graph = parse_stream_with_depth_cap(&deep, 4096).unwrap();
    assert_eq!(graph.max_depth_observed, 1501);
}

// ---- patch effects on the chain set ----

#[test]
fn removing_serializable_from_lazy_map_eliminates_its_chains() {
    let baseline = chain_descriptions(&reference_gadget_classpath());
    let through_lazymap: Vec<&String> = baseline
        .iter()
        .filter(|c| c.contains("LazyMap.get"))
        .collect();
    assert!(!through_lazymap.is_empty());

    let patched = chain_descriptions(&gadget_classpath_unserializable_lazymap());
    assert!(patched.iter().all(|c| !c.contains("LazyMap")));
    // Every surviving chain must have been a baseline chain that avoided the
    // de-serialized class; here all baseline chains used it, so none survive.
    let expected: BTreeSet<String> = baseline
        .iter()
        .filter(|c| !c.contains("LazyMap"))
        .cloned()
        .collect();
    assert_eq!(patched, expected);
}

#[test]
fn added_validation_call_does_not_change_the_chain_set() {
    // Reachability is check-insensitive: a gadget patch that only adds a
    // validation call blocks the exploit without removing the other gadgets,
    // so the reported chains are identical.
    let baseline = chain_descriptions(&reference_gadget_classpath());
    let with_check = chain_descriptions(&gadget_classpath_with_check());
    assert_eq!(baseline, with_check);
}

// ---- filter blocking and over-generality ----

#[test]
fn single_deny_rules_reject_every_attack_stream_before_field_bytes() {
    let streams = attack_streams();
    assert_eq!(streams.len(), 19);
    for fixture in &streams {
        let graph = parse_stream(&fixture.bytes)
            .unwrap_or_else(|e| panic!("{}: {e}", fixture.attack));
        let filter = parse_filter(&format!("!{}", fixture.marker_class)).unwrap();
        let verdict = apply_filter(&graph, &filter);
        assert_eq!(
            verdict.decision,
            FilterDecision::Rejected,
            "{}",
            fixture.attack
        );
        assert_eq!(
            verdict.rejected_class.as_deref(),
            Some(fixture.marker_class),
            "{}",
            fixture.attack
        );
        // The rejection lands on the element's tag byte, which precedes its
        // first field value on the wire: the object is never constructed.
        assert_eq!(
            verdict.position,
            Some(fixture.element_start as u64),
            "{}",
            fixture.attack
        );
        assert!(
            fixture.element_start < fixture.first_field_byte,
            "{}",
            fixture.attack
        );
    }
}

#[test]
fn object_typed_fields_flag_every_over_general_application_root() {
    let fixtures = app_fixtures();
    assert!(fixtures.iter().any(|f| f.over_general));
    assert!(fixtures.iter().any(|f| !f.over_general));
    for fixture in &fixtures {
        let index = index_of(&fixture.classes);
        let types = extract_deser_types(&index, &[fixture.root]).unwrap();
        assert_eq!(
            types.is_over_general(),
            fixture.over_general,
            "{}",
            fixture.name
        );
    }
}
