//! Serializability analysis, entry points, call-graph construction, and
//! bounded gadget-chain search.
//!
//! The call graph is a class-hierarchy approximation: virtual and interface
//! call sites fan out to every indexed subtype that overrides the callee.
//! Because attacker-reachable code must arrive through deserialized objects,
//! the default build only lets calls dispatch into classes that are
//! serializable; targets without bytecode (interface and abstract methods)
//! and calls that already hit a configured sink stay in the graph so paths
//! keep their shape. Dynamic proxies get dedicated edges from interface
//! methods to the `invoke` method of every serializable invocation handler.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::classfile::{ClassModel, ClasspathIndex, InvokeKind, UnknownClass};
use crate::filter::{DeserFilter, FilterRule, Pattern};

pub const SERIALIZABLE_IFACE: &str = "java/io/Serializable";
pub const EXTERNALIZABLE_IFACE: &str = "java/io/Externalizable";
pub const INVOCATION_HANDLER_IFACE: &str = "java/lang/reflect/InvocationHandler";

/// Methods the deserialization runtime itself invokes on stream classes.
pub const ENTRY_METHOD_NAMES: [&str; 5] = [
    "readObject",
    "readObjectNoData",
    "readResolve",
    "readExternal",
    "validateObject",
];

/// Classes that are serializable in the indexed hierarchy: their resolvable
/// ancestor closure contains the serializable or externalizable marker. The
/// marker interfaces themselves are not included.
pub fn serializable_classes(index: &ClasspathIndex) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (name, _) in index.iter() {
        if let Ok(closure) = index.interface_closure(name) {
            // The marker interfaces live in the runtime, which is rarely part
            // of the scanned classpath: a declared-but-unresolved ancestor
            // counts the same as a resolved one.
            let declares = |iface: &str| {
                closure.contains(iface) || closure.unresolved.contains(iface)
            };
            if declares(SERIALIZABLE_IFACE) || declares(EXTERNALIZABLE_IFACE) {
                out.insert(name.to_owned());
            }
        }
    }
    out
}

/// A method the deserialization runtime will call on a stream class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct EntryGadget {
    pub class_name: String,
    pub method_name: String,
    pub descriptor: String,
    pub reason: String,
}

/// Deserialization entry points: lifecycle callbacks declared by serializable
/// classes, sorted by class then method.
pub fn entry_points(index: &ClasspathIndex) -> Vec<EntryGadget> {
    let serializable = serializable_classes(index);
    let mut out = Vec::new();
    for name in &serializable {
        let model = index.get(name).expect("serializable set built from index");
        for method in &model.methods {
            if ENTRY_METHOD_NAMES.contains(&method.name.as_str()) {
                out.push(EntryGadget {
                    class_name: name.clone(),
                    method_name: method.name.clone(),
                    descriptor: method.descriptor.clone(),
                    reason: alloc::format!(
                        "serializable class declares {}",
                        method.name
                    ),
                });
            }
        }
    }
    out.sort();
    out
}

/// A method that hands attacker-influenced values to a dangerous capability.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SinkSpec {
    /// Internal owner name, e.g. `java/lang/Runtime`.
    pub owner: String,
    pub method_name: String,
    pub label: String,
}

impl SinkSpec {
    pub fn new(owner: &str, method_name: &str, label: &str) -> Self {
        SinkSpec {
            owner: owner.to_owned(),
            method_name: method_name.to_owned(),
            label: label.to_owned(),
        }
    }

    pub fn matches(&self, owner: &str, method_name: &str) -> bool {
        self.owner == owner && self.method_name == method_name
    }
}

/// The sink set used when a scan does not supply its own.
pub fn default_sinks() -> Vec<SinkSpec> {
    alloc::vec![
        SinkSpec::new("java/lang/Runtime", "exec", "process execution"),
        SinkSpec::new("java/lang/ProcessBuilder", "start", "process execution"),
        SinkSpec::new("java/lang/reflect/Method", "invoke", "arbitrary reflection"),
        SinkSpec::new("java/lang/Class", "forName", "class loading"),
        SinkSpec::new("java/net/URLClassLoader", "<init>", "remote class loading"),
        SinkSpec::new("javax/naming/Context", "lookup", "JNDI resolution"),
        SinkSpec::new("javax/naming/InitialContext", "lookup", "JNDI resolution"),
    ]
}

/// Hand-maintained dispatch fact: calling `container_method` on `container`
/// causes calls to methods whose names match `callee_pattern` (exact name,
/// trailing-`*` prefix, or `*`). These encode indirections like a lazy map
/// invoking its factory, which class-hierarchy analysis alone cannot see.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct TriggerRow {
    pub container: String,
    pub container_method: String,
    pub callee_pattern: String,
}

fn name_matches_pattern(pattern: &str, name: &str) -> bool {
    if pattern == "*" {
        return true;
    }
    match pattern.strip_suffix('*') {
        Some(prefix) => name.starts_with(prefix),
        None => pattern == name,
    }
}

#[derive(Clone, Debug)]
pub struct GraphOptions {
    /// Restrict virtual/interface dispatch to serializable receivers (plus
    /// code-less targets and sink calls). On by default; turning it off
    /// widens the graph to every hierarchy-compatible receiver.
    pub serializable_only_receivers: bool,
    pub sinks: Vec<SinkSpec>,
    pub triggers: Vec<TriggerRow>,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            serializable_only_receivers: true,
            sinks: default_sinks(),
            triggers: Vec::new(),
        }
    }
}

/// How an edge was derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    /// Static or constructor dispatch resolved exactly.
    Direct,
    /// Class-hierarchy dispatch: the declared target or an overriding
    /// subtype.
    Cha,
    /// Interface method routed to a serializable invocation handler.
    Proxy,
    /// Hand-maintained dispatch fact from the trigger table.
    Trigger,
}

impl EdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::Direct => "direct",
            EdgeKind::Cha => "cha",
            EdgeKind::Proxy => "proxy",
            EdgeKind::Trigger => "trigger",
        }
    }
}

/// A method node: class, method, descriptor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct NodeRef {
    pub class_name: String,
    pub method_name: String,
    pub descriptor: String,
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}{}", self.class_name, self.method_name, self.descriptor)
    }
}

/// A call site that resolved to nothing on the indexed classpath.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct UnresolvedSite {
    pub caller: NodeRef,
    pub owner: String,
    pub method_name: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ResolutionLog {
    pub direct_edges: usize,
    pub cha_edges: usize,
    pub proxy_edges: usize,
    pub trigger_edges: usize,
    /// invokedynamic sites, which never produce edges.
    pub dynamic_sites: usize,
    pub unresolved: Vec<UnresolvedSite>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CallGraph {
    nodes: Vec<NodeRef>,
    #[serde(skip)]
    ids: BTreeMap<NodeRef, usize>,
    adjacency: Vec<BTreeSet<(usize, EdgeKind)>>,
    sink_nodes: BTreeSet<usize>,
    pub resolution_log: ResolutionLog,
}

impl CallGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum()
    }

    pub fn node(&self, id: usize) -> &NodeRef {
        &self.nodes[id]
    }

    pub fn node_id(&self, class_name: &str, method_name: &str, descriptor: &str) -> Option<usize> {
        self.ids
            .get(&NodeRef {
                class_name: class_name.to_owned(),
                method_name: method_name.to_owned(),
                descriptor: descriptor.to_owned(),
            })
            .copied()
    }

    /// Nodes for every descriptor overload of `class_name.method_name`.
    pub fn nodes_named(&self, class_name: &str, method_name: &str) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.class_name == class_name && n.method_name == method_name)
            .map(|(id, _)| id)
            .collect()
    }

    pub fn successors(&self, id: usize) -> &BTreeSet<(usize, EdgeKind)> {
        &self.adjacency[id]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, EdgeKind)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(from, outs)| outs.iter().map(move |&(to, kind)| (from, to, kind)))
    }

    pub fn has_edge(&self, from: usize, to: usize, kind: EdgeKind) -> bool {
        self.adjacency[from].contains(&(to, kind))
    }

    pub fn is_sink(&self, id: usize) -> bool {
        self.sink_nodes.contains(&id)
    }

    pub fn sink_ids(&self) -> &BTreeSet<usize> {
        &self.sink_nodes
    }

    fn intern(&mut self, node: NodeRef) -> usize {
        if let Some(&id) = self.ids.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        self.ids.insert(node.clone(), id);
        self.nodes.push(node);
        self.adjacency.push(BTreeSet::new());
        id
    }

    fn add_edge(&mut self, from: usize, to: usize, kind: EdgeKind) -> bool {
        if self.adjacency[from].insert((to, kind)) {
            match kind {
                EdgeKind::Direct => self.resolution_log.direct_edges += 1,
                EdgeKind::Cha => self.resolution_log.cha_edges += 1,
                EdgeKind::Proxy => self.resolution_log.proxy_edges += 1,
                EdgeKind::Trigger => self.resolution_log.trigger_edges += 1,
            }
            true
        } else {
            false
        }
    }

    /// Builds a graph from explicit parts, for synthetic-topology tests and
    /// tools that post-process graphs.
    pub fn from_parts(
        nodes: Vec<NodeRef>,
        edges: &[(usize, usize, EdgeKind)],
        sink_nodes: BTreeSet<usize>,
    ) -> CallGraph {
        let mut graph = CallGraph {
            adjacency: alloc::vec![BTreeSet::new(); nodes.len()],
            ids: nodes
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, n)| (n, i))
                .collect(),
            nodes,
            sink_nodes,
            resolution_log: ResolutionLog::default(),
        };
        for &(from, to, kind) in edges {
            graph.add_edge(from, to, kind);
        }
        graph
    }
}

struct GraphBuilder<'a> {
    index: &'a ClasspathIndex,
    options: &'a GraphOptions,
    serializable: BTreeSet<String>,
    /// Ancestor names per indexed class: resolved ones plus the frontier of
    /// names the index could not resolve, so declaring an off-classpath
    /// interface (the common case for runtime types) still counts.
    closures: BTreeMap<String, BTreeSet<String>>,
    graph: CallGraph,
}

impl<'a> GraphBuilder<'a> {
    fn new(index: &'a ClasspathIndex, options: &'a GraphOptions) -> Self {
        let mut closures = BTreeMap::new();
        for (name, _) in index.iter() {
            let closure = index
                .interface_closure(name)
                .expect("iterating over indexed names");
            let mut names = closure.reachable;
            names.extend(closure.unresolved);
            closures.insert(name.to_owned(), names);
        }
        GraphBuilder {
            serializable: serializable_classes(index),
            index,
            options,
            closures,
            graph: CallGraph::default(),
        }
    }

    fn is_sink_call(&self, owner: &str, method_name: &str) -> bool {
        self.options
            .sinks
            .iter()
            .any(|s| s.matches(owner, method_name))
    }

    /// Whether dispatch into `class_name.method` is admissible under the
    /// serializable-receiver restriction.
    fn admissible_target(&self, class_name: &str, method_name: &str, has_code: bool) -> bool {
        if !self.options.serializable_only_receivers {
            return true;
        }
        !has_code
            || self.serializable.contains(class_name)
            || self.is_sink_call(class_name, method_name)
    }

    fn node_for_method(&mut self, class_name: &str, method_name: &str, descriptor: &str) -> usize {
        self.graph.intern(NodeRef {
            class_name: class_name.to_owned(),
            method_name: method_name.to_owned(),
            descriptor: descriptor.to_owned(),
        })
    }

    fn mark_if_sink(&mut self, id: usize) {
        let node = self.graph.node(id).clone();
        if self.is_sink_call(&node.class_name, &node.method_name) {
            self.graph.sink_nodes.insert(id);
        }
    }

    /// Subtypes (including the class itself) of `owner` that declare
    /// `name`+`descriptor`, in name order.
    fn overriders(&self, owner: &str, name: &str, descriptor: &str) -> Vec<(String, bool)> {
        let mut out = Vec::new();
        for (class_name, model) in self.index.iter() {
            let related = class_name == owner
                || self
                    .closures
                    .get(class_name)
                    .map(|c| c.contains(owner))
                    .unwrap_or(false);
            if !related {
                continue;
            }
            if let Some(m) = model.method(name, descriptor) {
                out.push((class_name.to_owned(), m.has_code));
            }
        }
        out
    }

    fn build(mut self) -> CallGraph {
        // Materialize every declared method first so node ids follow index
        // order and stay stable regardless of edge discovery order.
        let classes: Vec<(String, ClassModel)> = self
            .index
            .iter()
            .map(|(n, m)| (n.to_owned(), m.clone()))
            .collect();
        for (name, model) in &classes {
            for method in &model.methods {
                let id = self.node_for_method(name, &method.name, &method.descriptor);
                self.mark_if_sink(id);
            }
        }

        for (name, model) in &classes {
            for method in &model.methods {
                let caller = self.node_for_method(name, &method.name, &method.descriptor);
                for site in &method.call_sites {
                    self.resolve_site(caller, site);
                }
            }
        }

        self.add_proxy_edges(&classes);
        self.add_trigger_edges(&classes);
        self.graph
    }

    fn resolve_site(&mut self, caller: usize, site: &crate::classfile::CallSite) {
        match site.kind {
            InvokeKind::Dynamic => {
                self.graph.resolution_log.dynamic_sites += 1;
            }
            InvokeKind::Static | InvokeKind::Special => {
                let target = self
                    .index
                    .get(&site.owner)
                    .and_then(|m| m.method(&site.method_name, &site.descriptor));
                match target {
                    Some(_) => {
                        let to =
                            self.node_for_method(&site.owner, &site.method_name, &site.descriptor);
                        self.mark_if_sink(to);
                        self.graph.add_edge(caller, to, EdgeKind::Direct);
                    }
                    None if self.is_sink_call(&site.owner, &site.method_name) => {
                        let to =
                            self.node_for_method(&site.owner, &site.method_name, &site.descriptor);
                        self.mark_if_sink(to);
                        self.graph.add_edge(caller, to, EdgeKind::Direct);
                    }
                    None => self.log_unresolved(caller, site),
                }
            }
            InvokeKind::Virtual | InvokeKind::Interface => {
                let mut resolved = false;
                // Edge to the statically named target, when admissible. This
                // keeps interface nodes like Map.entrySet in the graph so
                // proxy edges have somewhere to hang.
                if let Some(owner_model) = self.index.get(&site.owner) {
                    if let Some(m) = owner_model.method(&site.method_name, &site.descriptor) {
                        if self.admissible_target(&site.owner, &site.method_name, m.has_code) {
                            let to = self.node_for_method(
                                &site.owner,
                                &site.method_name,
                                &site.descriptor,
                            );
                            self.mark_if_sink(to);
                            self.graph.add_edge(caller, to, EdgeKind::Cha);
                            resolved = true;
                        }
                    }
                    // Fan out to every indexed subtype that overrides the
                    // callee.
                    for (subtype, has_code) in
                        self.overriders(&site.owner, &site.method_name, &site.descriptor)
                    {
                        if !self.admissible_target(&subtype, &site.method_name, has_code) {
                            continue;
                        }
                        let to =
                            self.node_for_method(&subtype, &site.method_name, &site.descriptor);
                        self.mark_if_sink(to);
                        self.graph.add_edge(caller, to, EdgeKind::Cha);
                        resolved = true;
                    }
                } else if self.is_sink_call(&site.owner, &site.method_name) {
                    // Off-classpath sink such as java/lang/Runtime in an
                    // application-only scan.
                    let to =
                        self.node_for_method(&site.owner, &site.method_name, &site.descriptor);
                    self.mark_if_sink(to);
                    self.graph.add_edge(caller, to, EdgeKind::Cha);
                    resolved = true;
                }
                if !resolved {
                    self.log_unresolved(caller, site);
                }
            }
        }
    }

    fn log_unresolved(&mut self, caller: usize, site: &crate::classfile::CallSite) {
        let caller = self.graph.node(caller).clone();
        self.graph.resolution_log.unresolved.push(UnresolvedSite {
            caller,
            owner: site.owner.clone(),
            method_name: site.method_name.clone(),
        });
    }

    /// Serializable invocation handlers receive every method of every
    /// indexed interface through `invoke`.
    fn add_proxy_edges(&mut self, classes: &[(String, ClassModel)]) {
        let mut handlers: Vec<(String, String)> = Vec::new();
        for (name, model) in classes {
            let implements_handler = self
                .closures
                .get(name)
                .map(|c| c.contains(INVOCATION_HANDLER_IFACE))
                .unwrap_or(false);
            if !implements_handler || !self.serializable.contains(name) {
                continue;
            }
            for method in &model.methods {
                if method.name == "invoke" && method.has_code {
                    handlers.push((name.clone(), method.descriptor.clone()));
                }
            }
        }
        if handlers.is_empty() {
            return;
        }
        for (name, model) in classes {
            if !model.is_interface() {
                continue;
            }
            for method in &model.methods {
                let from = self.node_for_method(name, &method.name, &method.descriptor);
                for (handler, descriptor) in &handlers {
                    let to = self.node_for_method(handler, "invoke", descriptor);
                    self.graph.add_edge(from, to, EdgeKind::Proxy);
                }
            }
        }
    }

    fn add_trigger_edges(&mut self, classes: &[(String, ClassModel)]) {
        let triggers = self.options.triggers.clone();
        for row in &triggers {
            let container = match self.index.get(&row.container) {
                Some(model) => model.clone(),
                None => continue,
            };
            let sources: Vec<usize> = container
                .methods
                .iter()
                .filter(|m| m.name == row.container_method)
                .map(|m| self.node_for_method(&row.container, &m.name, &m.descriptor))
                .collect();
            if sources.is_empty() {
                continue;
            }
            for (name, model) in classes {
                for method in &model.methods {
                    if !name_matches_pattern(&row.callee_pattern, &method.name) {
                        continue;
                    }
                    if !self.admissible_target(name, &method.name, method.has_code) {
                        continue;
                    }
                    let to = self.node_for_method(name, &method.name, &method.descriptor);
                    self.mark_if_sink(to);
                    for &from in &sources {
                        if from != to {
                            self.graph.add_edge(from, to, EdgeKind::Trigger);
                        }
                    }
                }
            }
        }
    }
}

/// Builds the class-hierarchy call graph over the whole index.
pub fn build_callgraph(index: &ClasspathIndex, options: &GraphOptions) -> CallGraph {
    GraphBuilder::new(index, options).build()
}

/// One path from an entry point to a sink.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct GadgetChain {
    pub frames: Vec<NodeRef>,
    /// Edge kinds between consecutive frames; one shorter than `frames`.
    pub edge_kinds: Vec<EdgeKind>,
}

impl GadgetChain {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `a.b -> c.d -> ...` rendering used in reports and logs.
    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .frames
            .iter()
            .map(|f| alloc::format!("{}.{}", f.class_name, f.method_name))
            .collect();
        parts.join(" -> ")
    }
}

/// Result of a chain search; `complete` is false when an expansion budget
/// stopped the enumeration early.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ChainSearch {
    pub chains: Vec<GadgetChain>,
    pub complete: bool,
    pub expansions: u64,
}

/// Work expansions allowed per entry point before the search gives up.
pub const DEFAULT_EXPANSION_CAP: u64 = 1_000_000;

pub fn find_chains(
    graph: &CallGraph,
    entries: &[EntryGadget],
    max_depth: usize,
) -> ChainSearch {
    find_chains_capped(graph, entries, max_depth, DEFAULT_EXPANSION_CAP)
}

/// Enumerates simple paths from each entry method to sink nodes, breadth
/// first, visiting successors in node order. Paths may continue through a
/// sink (a chain is recorded at every sink hit). Chains come back sorted by
/// length then frames; each entry point gets its own `cap` expansion budget.
pub fn find_chains_capped(
    graph: &CallGraph,
    entries: &[EntryGadget],
    max_depth: usize,
    cap: u64,
) -> ChainSearch {
    let mut entry_ids: Vec<usize> = Vec::new();
    for entry in entries {
        for id in graph.nodes_named(&entry.class_name, &entry.method_name) {
            if !entry_ids.contains(&id) {
                entry_ids.push(id);
            }
        }
    }
    entry_ids.sort_unstable();

    let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut complete = true;
    let mut expansions_total: u64 = 0;

    for &entry_id in &entry_ids {
        let mut expansions: u64 = 0;
        let mut queue: alloc::collections::VecDeque<Vec<usize>> =
            alloc::collections::VecDeque::new();
        queue.push_back(alloc::vec![entry_id]);
        'entry: while let Some(path) = queue.pop_front() {
            let last = *path.last().expect("paths are never empty");
            if path.len() >= 2 && graph.is_sink(last) {
                found.insert(path.clone());
            }
            if path.len() >= max_depth {
                continue;
            }
            for &(next, _) in graph.successors(last) {
                if path.contains(&next) {
                    continue;
                }
                expansions += 1;
                if expansions > cap {
                    complete = false;
                    break 'entry;
                }
                let mut extended = path.clone();
                extended.push(next);
                queue.push_back(extended);
            }
        }
        expansions_total += expansions;
    }

    let mut chains: Vec<GadgetChain> = found
        .into_iter()
        .map(|ids| {
            let mut kinds = Vec::with_capacity(ids.len().saturating_sub(1));
            for pair in ids.windows(2) {
                let kind = graph
                    .successors(pair[0])
                    .iter()
                    .find(|(to, _)| *to == pair[1])
                    .map(|&(_, k)| k)
                    .expect("edge existed during search");
                kinds.push(kind);
            }
            GadgetChain {
                frames: ids.iter().map(|&id| graph.node(id).clone()).collect(),
                edge_kinds: kinds,
            }
        })
        .collect();
    chains.sort_by(|a, b| {
        a.frames
            .len()
            .cmp(&b.frames.len())
            .then_with(|| a.frames.cmp(&b.frames))
    });
    ChainSearch {
        chains,
        complete,
        expansions: expansions_total,
    }
}

/// Classes a deserialization endpoint can legitimately need, computed as the
/// transitive closure of the roots' serial field types and superclasses.
#[derive(Clone, Debug, Default, Serialize)]
pub struct DeserTypes {
    /// Internal names, including names referenced but absent from the index.
    pub types: BTreeSet<String>,
    /// Roots whose field closure pulled in `java/lang/Object` or
    /// `java/io/Serializable`: an allow list built from them would admit
    /// nearly anything.
    pub over_general_roots: BTreeSet<String>,
}

impl DeserTypes {
    pub fn is_over_general(&self) -> bool {
        !self.over_general_roots.is_empty()
    }
}

/// Reference class names inside a field descriptor (array nesting stripped;
/// primitives contribute nothing).
fn descriptor_class_names(descriptor: &str) -> Option<String> {
    let stripped = descriptor.trim_start_matches('[');
    stripped
        .strip_prefix('L')
        .and_then(|s| s.strip_suffix(';'))
        .map(|s| s.to_owned())
}

pub fn extract_deser_types(
    index: &ClasspathIndex,
    roots: &[&str],
) -> Result<DeserTypes, UnknownClass> {
    let mut out = DeserTypes::default();
    for &root in roots {
        if !index.contains(root) {
            return Err(UnknownClass {
                class_name: root.to_owned(),
            });
        }
        let mut work: Vec<String> = alloc::vec![root.to_owned()];
        let mut seen: BTreeSet<String> = BTreeSet::new();
        seen.insert(root.to_owned());
        let mut over_general = false;
        while let Some(current) = work.pop() {
            out.types.insert(current.clone());
            let model = match index.get(&current) {
                Some(m) => m,
                // Referenced but not indexed: keep the name, cannot expand.
                None => continue,
            };
            let enqueue = |name: String, work: &mut Vec<String>, seen: &mut BTreeSet<String>| {
                if seen.insert(name.clone()) {
                    work.push(name);
                }
            };
            // The universal superclass never appears in a descriptor chain
            // (serialization stops at the last serializable ancestor), so it
            // neither joins the type set nor makes the list over-general.
            if let Some(sup) = &model.super_name {
                if sup != "java/lang/Object" {
                    enqueue(sup.clone(), &mut work, &mut seen);
                }
            }
            for field in &model.fields {
                if field.is_static() || field.is_transient() {
                    continue;
                }
                if let Some(name) = descriptor_class_names(&field.descriptor) {
                    // A field typed as Object or Serializable can hold any
                    // serializable value: an allow list built from this
                    // closure cannot be tight.
                    if name == "java/lang/Object" || name == SERIALIZABLE_IFACE {
                        over_general = true;
                    }
                    enqueue(name, &mut work, &mut seen);
                }
            }
        }
        if over_general {
            out.over_general_roots.insert(root.to_owned());
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FilterMode {
    Allow,
    Deny,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FilterGenError {
    /// An allow list over zero types would reject every stream; refusing to
    /// emit one beats silently bricking an endpoint.
    EmptyAllowList,
}

impl fmt::Display for FilterGenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterGenError::EmptyAllowList => {
                write!(f, "refusing to generate an allow list with no allowed types")
            }
        }
    }
}

impl core::error::Error for FilterGenError {}

/// Builds a filter from an extracted type set. Allow mode lists every type
/// then rejects the rest; deny mode rejects exactly the listed types.
pub fn generate_filter(
    types: &BTreeSet<String>,
    mode: FilterMode,
) -> Result<DeserFilter, FilterGenError> {
    let mut filter = DeserFilter::default();
    match mode {
        FilterMode::Allow => {
            if types.is_empty() {
                return Err(FilterGenError::EmptyAllowList);
            }
            for name in types {
                filter.rules.push(FilterRule {
                    negated: false,
                    pattern: Pattern::Exact(name.replace('/', ".")),
                });
            }
            filter.rules.push(FilterRule {
                negated: true,
                pattern: Pattern::All,
            });
        }
        FilterMode::Deny => {
            for name in types {
                filter.rules.push(FilterRule {
                    negated: true,
                    pattern: Pattern::Exact(name.replace('/', ".")),
                });
            }
        }
    }
    Ok(filter)
}
