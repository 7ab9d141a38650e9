//! Call-graph construction and gadget-chain enumeration over the reference
//! classpath, plus type extraction and filter generation.

use std::collections::BTreeSet;

use deser_core::classfile::{parse_class, ClasspathIndex};
use deser_core::gadgetgraph::{
    build_callgraph, entry_points, extract_deser_types, find_chains, find_chains_capped,
    generate_filter, serializable_classes, CallGraph, EdgeKind, FilterGenError, FilterMode,
    GraphOptions, NodeRef, TriggerRow,
};
use deser_testkit::classes::{stat, ClassSpec, Ins, OP_RETURN};
use deser_testkit::corpus::{
    app_fixtures, gadget_classpath_unserializable_lazymap, gadget_classpath_with_check,
    reference_gadget_classpath, NamedClass, CHAINED_TRANSFORMER_CLASS, HANDLER_CLASS,
    INVOKER_TRANSFORMER_CLASS, LAZY_MAP_CLASS, MAP_IFACE, TRANSFORMER_IFACE,
};

fn index_from(classes: &[NamedClass]) -> ClasspathIndex {
    let mut index = ClasspathIndex::new();
    for (name, bytes) in classes {
        let model = parse_class(bytes).unwrap_or_else(|e| panic!("{name} decodes: {e}"));
        assert!(index.insert(model, "fixture"), "duplicate class {name}");
    }
    index
}

fn chain_descriptions(graph: &CallGraph, index: &ClasspathIndex, max_depth: usize) -> Vec<String> {
    let entries = entry_points(index);
    let search = find_chains(graph, &entries, max_depth);
    assert!(search.complete, "search should finish within its budget");
    search.chains.iter().map(|c| c.describe()).collect()
}

fn edge_set(graph: &CallGraph) -> BTreeSet<(NodeRef, NodeRef, EdgeKind)> {
    graph
        .edges()
        .map(|(from, to, kind)| (graph.node(from).clone(), graph.node(to).clone(), kind))
        .collect()
}

// ---- Reference classpath ----

#[test]
fn reference_classpath_has_one_entry_point() {
    let index = index_from(&reference_gadget_classpath());
    let entries = entry_points(&index);
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].class_name, HANDLER_CLASS);
    assert_eq!(entries[0].method_name, "readObject");
    assert_eq!(entries[0].descriptor, "(Ljava/io/ObjectInputStream;)V");
    assert_eq!(entries[0].reason, "serializable class declares readObject");
}

#[test]
fn reference_classpath_serializable_set() {
    let index = index_from(&reference_gadget_classpath());
    let expected: BTreeSet<String> = [
        HANDLER_CLASS,
        LAZY_MAP_CLASS,
        CHAINED_TRANSFORMER_CLASS,
        INVOKER_TRANSFORMER_CLASS,
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    assert_eq!(serializable_classes(&index), expected);
}

#[test]
fn reference_classpath_edges_have_expected_kinds() {
    let index = index_from(&reference_gadget_classpath());
    let graph = build_callgraph(&index, &GraphOptions::default());

    let id = |class: &str, method: &str| {
        graph
            .nodes_named(class, method)
            .first()
            .copied()
            .unwrap_or_else(|| panic!("{class}.{method} is a node"))
    };
    let read_object = id(HANDLER_CLASS, "readObject");
    let entry_set = id(MAP_IFACE, "entrySet");
    let invoke = id(HANDLER_CLASS, "invoke");
    let map_get = id(MAP_IFACE, "get");
    let lazy_get = id(LAZY_MAP_CLASS, "get");
    let chained = id(CHAINED_TRANSFORMER_CLASS, "transform");
    let iface_transform = id(TRANSFORMER_IFACE, "transform");
    let invoker = id(INVOKER_TRANSFORMER_CLASS, "transform");
    let method_invoke = id("java/lang/reflect/Method", "invoke");
    let runtime_exec = id("java/lang/Runtime", "exec");

    assert!(graph.has_edge(read_object, entry_set, EdgeKind::Cha));
    assert!(graph.has_edge(entry_set, invoke, EdgeKind::Proxy));
    assert!(graph.has_edge(invoke, map_get, EdgeKind::Cha));
    assert!(graph.has_edge(invoke, lazy_get, EdgeKind::Cha));
    assert!(graph.has_edge(map_get, invoke, EdgeKind::Proxy));
    assert!(graph.has_edge(lazy_get, chained, EdgeKind::Cha));
    assert!(graph.has_edge(chained, iface_transform, EdgeKind::Cha));
    assert!(graph.has_edge(chained, invoker, EdgeKind::Cha));
    assert!(graph.has_edge(invoker, method_invoke, EdgeKind::Cha));
    assert!(graph.has_edge(method_invoke, runtime_exec, EdgeKind::Cha));

    assert_eq!(graph.sink_ids().len(), 2);
    assert!(graph.is_sink(method_invoke));
    assert!(graph.is_sink(runtime_exec));

    assert!(graph.resolution_log.unresolved.is_empty());
    assert_eq!(graph.resolution_log.dynamic_sites, 0);
}

/// The search must find exactly two chains: the seven-frame path into the
/// reflective-invoke sink, and its one-frame extension into process
/// execution.
#[test]
fn reference_classpath_yields_exactly_two_chains() {
    let index = index_from(&reference_gadget_classpath());
    let graph = build_callgraph(&index, &GraphOptions::default());
    let chains = chain_descriptions(&graph, &index, 16);

    let seven = "sun/reflect/annotation/AnnotationInvocationHandler.readObject \
                 -> java/util/Map.entrySet \
                 -> sun/reflect/annotation/AnnotationInvocationHandler.invoke \
                 -> org/apache/commons/collections/map/LazyMap.get \
                 -> org/apache/commons/collections/functors/ChainedTransformer.transform \
                 -> org/apache/commons/collections/functors/InvokerTransformer.transform \
                 -> java/lang/reflect/Method.invoke";
    let eight = format!("{seven} -> java/lang/Runtime.exec");
    assert_eq!(chains, vec![seven.to_string(), eight]);

    // The shorter chain's method names, in order.
    let entries = entry_points(&index);
    let search = find_chains(&graph, &entries, 16);
    let names: Vec<&str> = search.chains[0]
        .frames
        .iter()
        .map(|f| f.method_name.as_str())
        .collect();
    assert_eq!(
        names,
        ["readObject", "entrySet", "invoke", "get", "transform", "transform", "invoke"]
    );
    assert_eq!(
        search.chains[0].edge_kinds,
        vec![
            EdgeKind::Cha,
            EdgeKind::Proxy,
            EdgeKind::Cha,
            EdgeKind::Cha,
            EdgeKind::Cha,
            EdgeKind::Cha,
        ]
    );
}

#[test]
fn depth_budget_cuts_the_longer_chain_first() {
    let index = index_from(&reference_gadget_classpath());
    let graph = build_callgraph(&index, &GraphOptions::default());
    assert_eq!(chain_descriptions(&graph, &index, 7).len(), 1);
    assert_eq!(chain_descriptions(&graph, &index, 6).len(), 0);
}

#[test]
fn expansion_cap_reports_an_incomplete_search() {
    let index = index_from(&reference_gadget_classpath());
    let graph = build_callgraph(&index, &GraphOptions::default());
    let entries = entry_points(&index);
    let search = find_chains_capped(&graph, &entries, 16, 3);
    assert!(!search.complete);
    let full = find_chains(&graph, &entries, 16);
    assert!(full.complete);
    assert!(full.expansions > 3);
}

// ---- Patch effects ----

/// Dropping the serializable marker from the lazy map makes its `get`
/// inadmissible for dispatch: every chain through it disappears.
#[test]
fn unserializable_lazy_map_kills_all_chains() {
    let baseline_index = index_from(&reference_gadget_classpath());
    let baseline_graph = build_callgraph(&baseline_index, &GraphOptions::default());
    let baseline = chain_descriptions(&baseline_graph, &baseline_index, 16);
    assert_eq!(baseline.len(), 2);
    assert!(baseline.iter().all(|c| c.contains("LazyMap.get")));

    let index = index_from(&gadget_classpath_unserializable_lazymap());
    let graph = build_callgraph(&index, &GraphOptions::default());
    assert_eq!(chain_descriptions(&graph, &index, 16), Vec::<String>::new());
}

/// A guard added to the invoker's deserialization callback introduces a new
/// entry point and an unresolvable check call, but leaves the chain set
/// untouched: the body change alone does not break the path.
#[test]
fn added_check_call_leaves_the_chain_set_unchanged() {
    let baseline_index = index_from(&reference_gadget_classpath());
    let baseline_graph = build_callgraph(&baseline_index, &GraphOptions::default());
    let baseline = chain_descriptions(&baseline_graph, &baseline_index, 16);

    let index = index_from(&gadget_classpath_with_check());
    let entries = entry_points(&index);
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0].class_name, INVOKER_TRANSFORMER_CLASS);
    assert_eq!(entries[1].class_name, HANDLER_CLASS);

    let graph = build_callgraph(&index, &GraphOptions::default());
    assert_eq!(chain_descriptions(&graph, &index, 16), baseline);

    let unresolved = &graph.resolution_log.unresolved;
    assert_eq!(unresolved.len(), 1);
    assert_eq!(unresolved[0].owner, "org/apache/commons/collections/functors/FunctorUtils");
    assert_eq!(unresolved[0].method_name, "checkUnsafeSerialization");
    assert_eq!(unresolved[0].caller.class_name, INVOKER_TRANSFORMER_CLASS);
    assert_eq!(unresolved[0].caller.method_name, "readObject");
}

/// Relaxing the serializable-receiver restriction can only add edges, and it
/// restores the chains the restriction suppressed.
#[test]
fn unrestricted_dispatch_is_an_edge_superset() {
    let index = index_from(&gadget_classpath_unserializable_lazymap());
    let restricted = build_callgraph(&index, &GraphOptions::default());
    let mut options = GraphOptions::default();
    options.serializable_only_receivers = false;
    let open = build_callgraph(&index, &options);

    let restricted_edges = edge_set(&restricted);
    let open_edges = edge_set(&open);
    assert!(restricted_edges.is_subset(&open_edges));
    assert!(open_edges.len() > restricted_edges.len());

    let reference_index = index_from(&reference_gadget_classpath());
    let reference_graph = build_callgraph(&reference_index, &GraphOptions::default());
    assert_eq!(
        chain_descriptions(&open, &index, 16),
        chain_descriptions(&reference_graph, &reference_index, 16),
        "without the restriction the marker change is invisible"
    );
}

// ---- Synthetic topologies ----

#[test]
fn trigger_rows_connect_container_methods_to_matching_callees() {
    let classes = vec![
        deser_testkit::corpus::entry(
            ClassSpec::new("a/Container")
                .serializable()
                .method("fire", "()V", vec![Ins::Op(OP_RETURN)])
                .method("onLoad", "()V", vec![Ins::Op(OP_RETURN)]),
        ),
        deser_testkit::corpus::entry(
            ClassSpec::new("b/Listener")
                .serializable()
                .method("onEvent", "()V", vec![Ins::Op(OP_RETURN)]),
        ),
        deser_testkit::corpus::entry(
            ClassSpec::new("c/Plain").method("onSkip", "()V", vec![Ins::Op(OP_RETURN)]),
        ),
    ];
    let index = index_from(&classes);
    let mut options = GraphOptions::default();
    options.triggers.push(TriggerRow {
        container: "a/Container".to_string(),
        container_method: "fire".to_string(),
        callee_pattern: "on*".to_string(),
    });
    let graph = build_callgraph(&index, &options);

    let fire = graph.node_id("a/Container", "fire", "()V").unwrap();
    let on_load = graph.node_id("a/Container", "onLoad", "()V").unwrap();
    let on_event = graph.node_id("b/Listener", "onEvent", "()V").unwrap();
    let on_skip = graph.node_id("c/Plain", "onSkip", "()V").unwrap();
    assert!(graph.has_edge(fire, on_load, EdgeKind::Trigger));
    assert!(graph.has_edge(fire, on_event, EdgeKind::Trigger));
    assert!(
        !graph.successors(fire).contains(&(on_skip, EdgeKind::Trigger)),
        "non-serializable coded targets stay out under the restriction"
    );
    assert_eq!(graph.resolution_log.trigger_edges, 2);
}

#[test]
fn dynamic_call_sites_are_counted_but_produce_no_edges() {
    let classes = vec![deser_testkit::corpus::entry(
        ClassSpec::new("a/Dyn").serializable().method(
            "readObject",
            "(Ljava/io/ObjectInputStream;)V",
            vec![deser_testkit::classes::indy("factory", "()V"), Ins::Op(OP_RETURN)],
        ),
    )];
    let index = index_from(&classes);
    let graph = build_callgraph(&index, &GraphOptions::default());
    assert_eq!(graph.resolution_log.dynamic_sites, 1);
    let node = graph
        .node_id("a/Dyn", "readObject", "(Ljava/io/ObjectInputStream;)V")
        .unwrap();
    assert!(graph.successors(node).is_empty());
}

#[test]
fn off_classpath_sink_calls_create_synthetic_nodes() {
    let classes = vec![deser_testkit::corpus::entry(
        ClassSpec::new("a/Caller").serializable().method(
            "readObject",
            "(Ljava/io/ObjectInputStream;)V",
            vec![
                stat("java/lang/Class", "forName", "(Ljava/lang/String;)Ljava/lang/Class;"),
                stat("some/Util", "helper", "()V"),
                Ins::Op(OP_RETURN),
            ],
        ),
    )];
    let index = index_from(&classes);
    let graph = build_callgraph(&index, &GraphOptions::default());

    // The class-loading sink gets a node even though java/lang/Class is not
    // indexed; the ordinary helper is just logged.
    let for_name = graph
        .node_id("java/lang/Class", "forName", "(Ljava/lang/String;)Ljava/lang/Class;")
        .expect("synthetic sink node exists");
    assert!(graph.is_sink(for_name));
    let caller = graph
        .node_id("a/Caller", "readObject", "(Ljava/io/ObjectInputStream;)V")
        .unwrap();
    assert!(graph.has_edge(caller, for_name, EdgeKind::Direct));
    assert_eq!(graph.resolution_log.unresolved.len(), 1);
    assert_eq!(graph.resolution_log.unresolved[0].owner, "some/Util");

    let entries = entry_points(&index);
    let search = find_chains(&graph, &entries, 8);
    assert_eq!(search.chains.len(), 1, "entry -> sink is a two-frame chain");
    assert_eq!(search.chains[0].len(), 2);
}

// ---- Type extraction and filter generation ----

#[test]
fn application_fixtures_flag_over_general_closures() {
    for fixture in app_fixtures() {
        let index = index_from(&fixture.classes);
        let types = extract_deser_types(&index, &[fixture.root])
            .unwrap_or_else(|e| panic!("{}: {e}", fixture.name));
        assert_eq!(
            types.is_over_general(),
            fixture.over_general,
            "{}: over-generality flag",
            fixture.name
        );
        assert!(types.types.contains(fixture.root), "{}: root is in its own closure", fixture.name);
        if fixture.over_general {
            assert_eq!(
                types.over_general_roots,
                [fixture.root.to_string()].into_iter().collect::<BTreeSet<_>>(),
                "{}: the root is what gets flagged",
                fixture.name
            );
        }
    }
}

#[test]
fn unknown_extraction_root_is_an_error() {
    let index = index_from(&reference_gadget_classpath());
    let err = extract_deser_types(&index, &["no/Such"]).unwrap_err();
    assert_eq!(err.class_name, "no/Such");
}

#[test]
fn generated_filters_render_canonically() {
    let types: BTreeSet<String> = ["com/app/Msg", "java/util/ArrayList"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let allow = generate_filter(&types, FilterMode::Allow).unwrap();
    assert_eq!(allow.render(), "com.app.Msg;java.util.ArrayList;!*");
    let deny = generate_filter(&types, FilterMode::Deny).unwrap();
    assert_eq!(deny.render(), "!com.app.Msg;!java.util.ArrayList");

    let empty = generate_filter(&BTreeSet::new(), FilterMode::Allow);
    assert_eq!(empty.unwrap_err(), FilterGenError::EmptyAllowList);
    let empty_deny = generate_filter(&BTreeSet::new(), FilterMode::Deny).unwrap();
    assert!(empty_deny.rules.is_empty());
}
