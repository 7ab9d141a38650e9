//! Filter parsing, rendering, matching, and stream evaluation.

use deser_core::filter::{
    apply_filter, parse_filter, DeserFilter, FilterDecision, FilterParseError, FilterRule,
    Pattern,
};
use deser_core::serialstream::parse_stream;
use deser_testkit::corpus::{attack_streams, nested_stream, proxy_payload_stream};
use deser_testkit::streams::{StreamWriter, SC_SERIALIZABLE};
use proptest::prelude::*;

// ---- Parsing and rendering ----

#[test]
fn parse_reads_limits_and_rules() {
    let filter =
        parse_filter("maxdepth=20;maxrefs=500;maxbytes=65535;maxarray=100;!org.evil.**;com.app.*;java.util.HashMap;*")
            .expect("filter parses");
    assert_eq!(filter.limits.max_depth, Some(20));
    assert_eq!(filter.limits.max_refs, Some(500));
    assert_eq!(filter.limits.max_bytes, Some(65535));
    assert_eq!(filter.limits.max_array, Some(100));
    assert_eq!(
        filter.rules,
        vec![
            FilterRule { negated: true, pattern: Pattern::Subtree("org.evil".to_string()) },
            FilterRule { negated: false, pattern: Pattern::Package("com.app".to_string()) },
            FilterRule { negated: false, pattern: Pattern::Exact("java.util.HashMap".to_string()) },
            FilterRule { negated: false, pattern: Pattern::All },
        ]
    );

    // Canonical form puts limits first, in a fixed order.
    let rendered = filter.render();
    assert_eq!(
        rendered,
        "maxdepth=20;maxrefs=500;maxbytes=65535;maxarray=100;!org.evil.**;com.app.*;java.util.HashMap;*"
    );
    assert_eq!(parse_filter(&rendered).unwrap(), filter);
}

#[test]
fn parse_tolerates_whitespace_and_empty_segments() {
    let filter = parse_filter(" maxdepth = 3 ;; !a.B ; ").expect("parses");
    assert_eq!(filter.limits.max_depth, Some(3));
    assert_eq!(filter.rules.len(), 1);
    assert_eq!(parse_filter("").unwrap(), DeserFilter::default());
    assert_eq!(parse_filter(";;;").unwrap(), DeserFilter::default());
}

#[test]
fn parse_rejects_malformed_input() {
    let dup = parse_filter("maxdepth=1;maxdepth=2");
    assert!(matches!(dup, Err(FilterParseError::BadLimit { reason: "limit given twice", .. })));
    assert!(matches!(parse_filter("maxdepth=x"), Err(FilterParseError::BadLimit { .. })));
    assert!(matches!(parse_filter("maxdepth=-1"), Err(FilterParseError::BadLimit { .. })));
    assert!(matches!(parse_filter("maxfoo=3"), Err(FilterParseError::BadLimit { .. })));
    for bad in ["!", "a.*b", "fo*o", ".**", "*.tail", "**"] {
        assert!(
            matches!(parse_filter(bad), Err(FilterParseError::BadPattern { .. })),
            "{bad} should fail"
        );
    }
    // u64::MAX is a legal limit value.
    assert!(parse_filter("maxbytes=18446744073709551615").is_ok());
}

// ---- Matching semantics ----

#[test]
fn first_matching_rule_decides() {
    let filter = parse_filter("!a.B;a.*;!*").unwrap();
    assert_eq!(filter.match_class("a.B"), Some(false));
    assert_eq!(filter.match_class("a.C"), Some(true));
    assert_eq!(filter.match_class("x.Y"), Some(false));

    let shadowed = parse_filter("a.B;!a.B").unwrap();
    assert_eq!(shadowed.match_class("a.B"), Some(true));

    let open = parse_filter("a.B").unwrap();
    assert_eq!(open.match_class("zzz.Unknown"), None);
}

#[test]
fn package_and_subtree_boundaries() {
    let pkg = Pattern::Package("a.b".to_string());
    assert!(pkg.matches("a.b.C"));
    assert!(!pkg.matches("a.b.c.D"));
    assert!(!pkg.matches("a.B"));
    assert!(!pkg.matches("a.b"));

    let tree = Pattern::Subtree("a.b".to_string());
    assert!(tree.matches("a.b.C"));
    assert!(tree.matches("a.b.c.D"));
    assert!(!tree.matches("a.bc.D"));
    assert!(!tree.matches("a.b"));

    assert!(Pattern::Exact("TopLevel".to_string()).matches("TopLevel"));
    assert!(Pattern::All.matches("anything.at.All"));
}

// ---- Property: render/parse identity ----

fn class_name_strategy() -> impl Strategy<Value = String> {
    proptest::collection::vec("[a-z][a-z0-9]{0,5}", 1..4).prop_map(|parts| parts.join("."))
}

fn pattern_strategy() -> impl Strategy<Value = Pattern> {
    prop_oneof![
        Just(Pattern::All),
        class_name_strategy().prop_map(Pattern::Exact),
        class_name_strategy().prop_map(Pattern::Package),
        class_name_strategy().prop_map(Pattern::Subtree),
    ]
}

fn filter_strategy() -> impl Strategy<Value = DeserFilter> {
    (
        proptest::collection::vec((any::<bool>(), pattern_strategy()), 0..8),
        proptest::option::of(0u64..1_000_000),
        proptest::option::of(0u64..1_000_000),
        proptest::option::of(0u64..1_000_000),
        proptest::option::of(0u64..1_000_000),
    )
        .prop_map(|(rules, d, r, b, a)| {
            let mut filter = DeserFilter::default();
            filter.limits.max_depth = d;
            filter.limits.max_refs = r;
            filter.limits.max_bytes = b;
            filter.limits.max_array = a;
            for (negated, pattern) in rules {
                filter.rules.push(FilterRule { negated, pattern });
            }
            filter
        })
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(filter in filter_strategy()) {
        let rendered = filter.render();
        let reparsed = parse_filter(&rendered).expect("rendered form parses");
        prop_assert_eq!(reparsed, filter);
    }
}

// ---- Limit enforcement ----

#[test]
fn max_bytes_rejects_at_the_oversized_element() {
    let mut w = StreamWriter::new();
    w.string("spill");
    let bytes = w.finish();
    let graph = parse_stream(&bytes).unwrap();
    let limit = bytes.len() as u64 - 1;
    let verdict = apply_filter(&graph, &parse_filter(&format!("maxbytes={limit}")).unwrap());
    assert_eq!(verdict.decision, FilterDecision::Rejected);
    assert_eq!(verdict.violated_limit, Some("maxbytes"));
    assert_eq!(verdict.position, Some(4), "the root element starts after the header");
}

#[test]
fn max_depth_rejects_the_first_element_below_the_cap() {
    let graph = parse_stream(&nested_stream(2)).unwrap();
    let verdict = apply_filter(&graph, &parse_filter("maxdepth=1").unwrap());
    assert_eq!(verdict.decision, FilterDecision::Rejected);
    assert_eq!(verdict.violated_limit, Some("maxdepth"));
    // The root object's descriptor is the first depth-2 element; its tag
    // byte follows the root's.
    assert_eq!(verdict.position, Some(5));
}

#[test]
fn max_refs_counts_handles_and_back_references() {
    let mut w = StreamWriter::new();
    w.string("aa");
    w.string("bb");
    w.string("cc");
    let graph = parse_stream(&w.finish()).unwrap();
    let verdict = apply_filter(&graph, &parse_filter("maxrefs=2").unwrap());
    assert_eq!(verdict.decision, FilterDecision::Rejected);
    assert_eq!(verdict.violated_limit, Some("maxrefs"));
    assert_eq!(verdict.position, Some(14), "third five-byte string starts at 14");

    let relaxed = apply_filter(&graph, &parse_filter("maxrefs=3").unwrap());
    assert_eq!(relaxed.decision, FilterDecision::Undecided);
    assert_eq!(relaxed.violated_limit, None);
}

#[test]
fn max_array_rejects_long_arrays() {
    let mut w = StreamWriter::new();
    let desc = w.class_desc("[I", 0, SC_SERIALIZABLE, &[]);
    let array_start = w.pos();
    w.array_ref(desc, 4);
    for v in 0..4 {
        w.i32(v);
    }
    let graph = parse_stream(&w.finish()).unwrap();
    let verdict = apply_filter(&graph, &parse_filter("maxarray=3").unwrap());
    assert_eq!(verdict.decision, FilterDecision::Rejected);
    assert_eq!(verdict.violated_limit, Some("maxarray"));
    assert_eq!(verdict.position, Some(array_start as u64));

    let relaxed = apply_filter(&graph, &parse_filter("maxarray=4").unwrap());
    assert_eq!(relaxed.decision, FilterDecision::Undecided);
}

#[test]
fn byte_limit_outranks_depth_limit_on_the_same_element() {
    let graph = parse_stream(&nested_stream(3)).unwrap();
    let verdict = apply_filter(&graph, &parse_filter("maxdepth=1;maxbytes=5").unwrap());
    assert_eq!(verdict.violated_limit, Some("maxbytes"));
    assert_eq!(verdict.position, Some(4), "the root element itself is checked first");
}

// ---- Stream evaluation ----

#[test]
fn allowed_needs_every_class_matched_positively() {
    let mut w = StreamWriter::new();
    w.u8(deser_testkit::streams::TC_OBJECT);
    w.class_desc("com.app.Msg", 1, SC_SERIALIZABLE, &[]);
    w.take_handle();
    let graph = parse_stream(&w.finish()).unwrap();

    let allow = parse_filter("com.app.Msg;!*").unwrap();
    assert_eq!(apply_filter(&graph, &allow).decision, FilterDecision::Allowed);

    let open = parse_filter("some.Other").unwrap();
    assert_eq!(apply_filter(&graph, &open).decision, FilterDecision::Undecided);

    let deny = parse_filter("!com.app.*").unwrap();
    let verdict = apply_filter(&graph, &deny);
    assert_eq!(verdict.decision, FilterDecision::Rejected);
    assert_eq!(verdict.rejected_class.as_deref(), Some("com.app.Msg"));
}

#[test]
fn classless_streams_stay_undecided() {
    let mut w = StreamWriter::new();
    w.block(&[1, 2]);
    w.string("note");
    let graph = parse_stream(&w.finish()).unwrap();
    for spec in ["", "*", "!*", "maxdepth=50"] {
        let verdict = apply_filter(&graph, &parse_filter(spec).unwrap());
        assert_eq!(verdict.decision, FilterDecision::Undecided, "filter {spec:?}");
    }
}

#[test]
fn proxies_face_the_filter_through_their_interfaces() {
    let payload = proxy_payload_stream();
    let graph = parse_stream(&payload.bytes).unwrap();

    let deny = parse_filter("!java.util.Map").unwrap();
    let verdict = apply_filter(&graph, &deny);
    assert_eq!(verdict.decision, FilterDecision::Rejected);
    assert_eq!(verdict.rejected_class.as_deref(), Some("java.util.Map"));

    // An allow list covering every concrete class still leaves the proxy
    // interface unmatched: without it the stream cannot be fully allowed.
    let missing_iface = parse_filter(
        "sun.reflect.annotation.AnnotationInvocationHandler;java.lang.reflect.Proxy;org.apache.commons.collections.map.LazyMap;org.apache.commons.collections.functors.ChainedTransformer;java.lang.Override",
    )
    .unwrap();
    assert_eq!(apply_filter(&graph, &missing_iface).decision, FilterDecision::Undecided);

    let complete = parse_filter(
        "sun.reflect.annotation.AnnotationInvocationHandler;java.util.Map;java.lang.reflect.Proxy;org.apache.commons.collections.map.LazyMap;org.apache.commons.collections.functors.ChainedTransformer;java.lang.Override;!*",
    )
    .unwrap();
    assert_eq!(apply_filter(&graph, &complete).decision, FilterDecision::Allowed);
}

/// A one-line deny rule on the marker class must reject each payload at the
/// rejected element's tag byte, before any of its field data is consumed.
#[test]
fn attack_payloads_are_rejected_before_field_data() {
    let streams = attack_streams();
    assert_eq!(streams.len(), 19);
    for fixture in streams {
        let graph = parse_stream(&fixture.bytes)
            .unwrap_or_else(|e| panic!("{}: payload decodes: {e}", fixture.attack));
        let filter = parse_filter(&format!("!{}", fixture.marker_class)).unwrap();
        let verdict = apply_filter(&graph, &filter);
        assert_eq!(verdict.decision, FilterDecision::Rejected, "{}", fixture.attack);
        assert_eq!(
            verdict.rejected_class.as_deref(),
            Some(fixture.marker_class),
            "{}",
            fixture.attack
        );
        assert!(
            fixture.element_start < fixture.first_field_byte,
            "{}: fixture geometry",
            fixture.attack
        );
        assert_eq!(
            verdict.position,
            Some(fixture.element_start as u64),
            "{}: rejection position is the element start, ahead of its field data",
            fixture.attack
        );
    }
}
