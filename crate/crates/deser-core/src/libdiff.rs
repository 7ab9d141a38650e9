//! Structural diffs between two library versions and the introduction/patch
//! taxonomies built on top of them.
//!
//! [`diff_indexes`] reports what changed between two classpath indexes at the
//! granularity a deserialization audit cares about: class and package
//! presence, serializability markers, visibility, method surface, and which
//! calls a method body gained or lost. [`classify_introduction`] explains how
//! a version change created gadget material; [`classify_patch`] explains how
//! a version change removed it.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::classfile::{ClassModel, ClasspathIndex, InvokeKind, ACC_PROTECTED, ACC_PUBLIC};
use crate::gadgetgraph::{EXTERNALIZABLE_IFACE, SERIALIZABLE_IFACE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Visibility {
    Private,
    Package,
    Protected,
    Public,
}

impl Visibility {
    pub fn from_flags(flags: u16) -> Visibility {
        if flags & ACC_PUBLIC != 0 {
            Visibility::Public
        } else if flags & ACC_PROTECTED != 0 {
            Visibility::Protected
        } else if flags & crate::classfile::ACC_PRIVATE != 0 {
            Visibility::Private
        } else {
            Visibility::Package
        }
    }
}

/// A call a method body makes, independent of bytecode offset, used to
/// compare method bodies across versions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CallKey {
    pub kind: InvokeKind,
    pub owner: String,
    pub method_name: String,
    pub descriptor: String,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum DeltaKind {
    ClassAdded {
        serializable: bool,
    },
    ClassRemoved {
        serializable: bool,
    },
    InterfaceAdded {
        interface: String,
    },
    InterfaceRemoved {
        interface: String,
    },
    VisibilityChanged {
        old: Visibility,
        new: Visibility,
    },
    MethodAdded {
        method: String,
        descriptor: String,
        class_serializable: bool,
    },
    MethodRemoved {
        method: String,
        descriptor: String,
    },
    MethodSignatureChanged {
        method: String,
        old_descriptor: String,
        new_descriptor: String,
    },
    MethodBodyChanged {
        method: String,
        descriptor: String,
        added_calls: Vec<CallKey>,
        removed_calls: Vec<CallKey>,
    },
    /// Every class under the named package prefix disappeared.
    PackageRemoved {
        classes: Vec<String>,
    },
}

/// One observed change. For `PackageRemoved` the `class_name` holds the
/// package prefix instead of a class.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ClassDelta {
    pub class_name: String,
    pub kind: DeltaKind,
}

fn is_serializable_in(index: &ClasspathIndex, name: &str) -> bool {
    index
        .interface_closure(name)
        .map(|c| {
            // Marker interfaces usually live outside the compared archives;
            // a declared-but-unresolved ancestor counts.
            let declares = |iface: &str| c.contains(iface) || c.unresolved.contains(iface);
            declares(SERIALIZABLE_IFACE) || declares(EXTERNALIZABLE_IFACE)
        })
        .unwrap_or(false)
}

fn call_keys(model: &ClassModel, method: &str, descriptor: &str) -> Vec<CallKey> {
    model
        .method(method, descriptor)
        .map(|m| {
            m.call_sites
                .iter()
                .map(|s| CallKey {
                    kind: s.kind,
                    owner: s.owner.clone(),
                    method_name: s.method_name.clone(),
                    descriptor: s.descriptor.clone(),
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Package ancestor prefixes of an internal class name, innermost first:
/// `a/b/C` yields `a/b` then `a`.
fn package_prefixes(class_name: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = class_name;
    while let Some(pos) = rest.rfind('/') {
        rest = &rest[..pos];
        out.push(rest);
    }
    out
}

fn classes_under<'a>(index: &'a ClasspathIndex, prefix: &str) -> Vec<&'a str> {
    index
        .names()
        .filter(|n| n.len() > prefix.len() + 1 && n.starts_with(prefix) && n.as_bytes()[prefix.len()] == b'/')
        .collect()
}

/// Structural differences from `old` to `new`, sorted by class name then
/// delta kind. Method bodies compare equal when they make the same calls in
/// the same order; offsets and non-call instructions are not compared.
pub fn diff_indexes(old: &ClasspathIndex, new: &ClasspathIndex) -> Vec<ClassDelta> {
    let mut deltas: Vec<ClassDelta> = Vec::new();
    let old_names: BTreeSet<&str> = old.names().collect();
    let new_names: BTreeSet<&str> = new.names().collect();

    for &name in new_names.difference(&old_names) {
        deltas.push(ClassDelta {
            class_name: name.to_string(),
            kind: DeltaKind::ClassAdded {
                serializable: is_serializable_in(new, name),
            },
        });
    }

    let mut removed_classes: Vec<&str> = Vec::new();
    for &name in old_names.difference(&new_names) {
        removed_classes.push(name);
        deltas.push(ClassDelta {
            class_name: name.to_string(),
            kind: DeltaKind::ClassRemoved {
                serializable: is_serializable_in(old, name),
            },
        });
    }

    // Whole-package removals: a package prefix with classes on the old side
    // and none left on the new side, reported at the outermost such prefix.
    let mut removed_packages: BTreeSet<&str> = BTreeSet::new();
    for &name in &removed_classes {
        for prefix in package_prefixes(name) {
            if classes_under(new, prefix).is_empty() {
                removed_packages.insert(prefix);
            }
        }
    }
    let gone_prefixes: Vec<&str> = removed_packages
        .iter()
        .copied()
        .filter(|p| {
            // Keep only maximal prefixes: drop one whose parent also died.
            !package_prefixes(p)
                .iter()
                .any(|parent| removed_packages.contains(parent))
        })
        .collect();
    for prefix in gone_prefixes {
        let classes: Vec<String> = classes_under(old, prefix)
            .into_iter()
            .map(|s| s.to_string())
            .collect();
        deltas.push(ClassDelta {
            class_name: prefix.to_string(),
            kind: DeltaKind::PackageRemoved { classes },
        });
    }

    for &name in old_names.intersection(&new_names) {
        let old_model = old.get(name).expect("intersection member");
        let new_model = new.get(name).expect("intersection member");

        let old_ifaces: BTreeSet<&String> = old_model.interfaces.iter().collect();
        let new_ifaces: BTreeSet<&String> = new_model.interfaces.iter().collect();
        for &iface in new_ifaces.difference(&old_ifaces) {
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::InterfaceAdded {
                    interface: iface.clone(),
                },
            });
        }
        for &iface in old_ifaces.difference(&new_ifaces) {
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::InterfaceRemoved {
                    interface: iface.clone(),
                },
            });
        }

        let old_vis = Visibility::from_flags(old_model.access_flags);
        let new_vis = Visibility::from_flags(new_model.access_flags);
        if old_vis != new_vis {
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::VisibilityChanged {
                    old: old_vis,
                    new: new_vis,
                },
            });
        }

        diff_methods(name, old_model, new_model, is_serializable_in(new, name), &mut deltas);
    }

    deltas.sort();
    deltas
}

fn diff_methods(
    name: &str,
    old_model: &ClassModel,
    new_model: &ClassModel,
    new_serializable: bool,
    deltas: &mut Vec<ClassDelta>,
) {
    let old_sigs: BTreeSet<(String, String)> = old_model
        .methods
        .iter()
        .map(|m| (m.name.clone(), m.descriptor.clone()))
        .collect();
    let new_sigs: BTreeSet<(String, String)> = new_model
        .methods
        .iter()
        .map(|m| (m.name.clone(), m.descriptor.clone()))
        .collect();
    let old_names: BTreeSet<&String> = old_sigs.iter().map(|(n, _)| n).collect();
    let new_names: BTreeSet<&String> = new_sigs.iter().map(|(n, _)| n).collect();

    for (method, descriptor) in new_sigs.difference(&old_sigs) {
        if old_names.contains(method) && !new_old_shared(&old_sigs, &new_sigs, method) {
            // Same name, different descriptor, and the old descriptor is
            // gone: the signature changed rather than a method being added.
            continue;
        }
        if !old_names.contains(method) {
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::MethodAdded {
                    method: method.clone(),
                    descriptor: descriptor.clone(),
                    class_serializable: new_serializable,
                },
            });
        }
    }
    for (method, descriptor) in old_sigs.difference(&new_sigs) {
        if !new_names.contains(method) {
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::MethodRemoved {
                    method: method.clone(),
                    descriptor: descriptor.clone(),
                },
            });
        }
    }

    // A name present on both sides whose descriptor set changed is a
    // signature change; report one delta per disappeared descriptor paired
    // with a appeared descriptor, in order.
    for method in old_names.intersection(&new_names) {
        let old_descs: Vec<&String> = old_sigs
            .iter()
            .filter(|(n, _)| n == *method)
            .map(|(_, d)| d)
            .collect();
        let new_descs: Vec<&String> = new_sigs
            .iter()
            .filter(|(n, _)| n == *method)
            .map(|(_, d)| d)
            .collect();
        let gone: Vec<&&String> = old_descs.iter().filter(|d| !new_descs.contains(d)).collect();
        let appeared: Vec<&&String> = new_descs.iter().filter(|d| !old_descs.contains(d)).collect();
        for (old_desc, new_desc) in gone.iter().zip(appeared.iter()) {
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::MethodSignatureChanged {
                    method: (*method).clone(),
                    old_descriptor: (**old_desc).clone(),
                    new_descriptor: (**new_desc).clone(),
                },
            });
        }
        // Extra overloads beyond the pairing count as plain adds/removes.
        for extra in appeared.iter().skip(gone.len()) {
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::MethodAdded {
                    method: (*method).clone(),
                    descriptor: (**extra).clone(),
                    class_serializable: new_serializable,
                },
            });
        }
        for extra in gone.iter().skip(appeared.len()) {
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::MethodRemoved {
                    method: (*method).clone(),
                    descriptor: (**extra).clone(),
                },
            });
        }
    }

    for (method, descriptor) in old_sigs.intersection(&new_sigs) {
        let old_calls = call_keys(old_model, method, descriptor);
        let new_calls = call_keys(new_model, method, descriptor);
        let old_has_code = old_model.method(method, descriptor).map(|m| m.has_code);
        let new_has_code = new_model.method(method, descriptor).map(|m| m.has_code);
        if old_calls != new_calls || old_has_code != new_has_code {
            let old_set: BTreeSet<&CallKey> = old_calls.iter().collect();
            let new_set: BTreeSet<&CallKey> = new_calls.iter().collect();
            deltas.push(ClassDelta {
                class_name: name.to_string(),
                kind: DeltaKind::MethodBodyChanged {
                    method: method.clone(),
                    descriptor: descriptor.clone(),
                    added_calls: new_set.difference(&old_set).map(|&k| k.clone()).collect(),
                    removed_calls: old_set.difference(&new_set).map(|&k| k.clone()).collect(),
                },
            });
        }
    }
}

fn new_old_shared(
    old_sigs: &BTreeSet<(String, String)>,
    new_sigs: &BTreeSet<(String, String)>,
    method: &str,
) -> bool {
    old_sigs
        .iter()
        .any(|(n, d)| n == method && new_sigs.contains(&(n.clone(), d.clone())))
}

// ---- Introduction taxonomy ----

/// How a version change created deserialization gadget material.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum IntroductionAction {
    /// A serializable class appeared.
    AddClass,
    /// An existing class became serializable.
    MakeSerializable,
    /// An existing class became more visible.
    ChangeToPublic,
    /// A serializable class gained methods.
    AddMethods,
}

impl IntroductionAction {
    pub fn as_str(self) -> &'static str {
        match self {
            IntroductionAction::AddClass => "add-class",
            IntroductionAction::MakeSerializable => "make-serializable",
            IntroductionAction::ChangeToPublic => "change-to-public",
            IntroductionAction::AddMethods => "add-methods",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntroductionLabel {
    pub action: IntroductionAction,
    pub classes: BTreeSet<String>,
    pub evidence: Vec<ClassDelta>,
}

fn delta_touches(delta: &ClassDelta, focus: Option<&BTreeSet<String>>) -> bool {
    let Some(focus) = focus else { return true };
    match &delta.kind {
        DeltaKind::PackageRemoved { classes } => classes.iter().any(|c| focus.contains(c)),
        _ => focus.contains(&delta.class_name),
    }
}

/// Explains a version delta as gadget-introducing actions. `focus` restricts
/// attention to the named classes (the gadget material under study); without
/// it every delta is considered. One label per action, carrying every class
/// and delta that exhibited it, in action order.
pub fn classify_introduction(
    deltas: &[ClassDelta],
    focus: Option<&BTreeSet<String>>,
) -> Vec<IntroductionLabel> {
    let mut buckets: BTreeMap<IntroductionAction, (BTreeSet<String>, Vec<ClassDelta>)> =
        BTreeMap::new();
    for delta in deltas {
        if !delta_touches(delta, focus) {
            continue;
        }
        let action = match &delta.kind {
            DeltaKind::ClassAdded { serializable: true } => Some(IntroductionAction::AddClass),
            DeltaKind::InterfaceAdded { interface }
                if interface == SERIALIZABLE_IFACE || interface == EXTERNALIZABLE_IFACE =>
            {
                Some(IntroductionAction::MakeSerializable)
            }
            DeltaKind::VisibilityChanged { old, new } if new > old => {
                Some(IntroductionAction::ChangeToPublic)
            }
            DeltaKind::MethodAdded {
                class_serializable: true,
                ..
            } => Some(IntroductionAction::AddMethods),
            _ => None,
        };
        if let Some(action) = action {
            let slot = buckets.entry(action).or_default();
            slot.0.insert(delta.class_name.clone());
            slot.1.push(delta.clone());
        }
    }
    buckets
        .into_iter()
        .map(|(action, (classes, evidence))| IntroductionLabel {
            action,
            classes,
            evidence,
        })
        .collect()
}

// ---- Patch taxonomy ----

/// How a version change removed or blocked gadget material, ordered from the
/// most structural remediation to the least.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PatchAction {
    RemovePackage,
    RemoveClass,
    RemoveSerializable,
    ChangeSignature,
    IntroduceCheck,
}

impl PatchAction {
    pub fn as_str(self) -> &'static str {
        match self {
            PatchAction::RemovePackage => "remove-package",
            PatchAction::RemoveClass => "remove-class",
            PatchAction::RemoveSerializable => "remove-serializable",
            PatchAction::ChangeSignature => "change-signature",
            PatchAction::IntroduceCheck => "introduce-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchLabel {
    pub action: PatchAction,
    pub classes: BTreeSet<String>,
    pub evidence: Vec<ClassDelta>,
}

/// Methods whose bodies gate deserialization when they gain validation
/// calls, plus the hook points gadget patches commonly add checks to.
pub const CHECK_METHOD_NAMES: [&str; 6] = [
    "readObject",
    "readObjectNoData",
    "readResolve",
    "readExternal",
    "validateObject",
    "transform",
];

/// Explains a version delta as gadget-removing actions. Each class gets the
/// single most structural action it exhibits; the label keeps every delta of
/// that class as evidence. Labels come back in action order.
pub fn classify_patch(
    deltas: &[ClassDelta],
    focus: Option<&BTreeSet<String>>,
) -> Vec<PatchLabel> {
    // Per affected class: the actions seen and the deltas backing them.
    let mut per_class: BTreeMap<String, (Vec<PatchAction>, Vec<ClassDelta>)> = BTreeMap::new();
    for delta in deltas {
        if !delta_touches(delta, focus) {
            continue;
        }
        let hits: Vec<(String, PatchAction)> = match &delta.kind {
            DeltaKind::PackageRemoved { classes } => classes
                .iter()
                .filter(|c| focus.map(|f| f.contains(*c)).unwrap_or(true))
                .map(|c| (c.clone(), PatchAction::RemovePackage))
                .collect(),
            DeltaKind::ClassRemoved { .. } => {
                alloc::vec![(delta.class_name.clone(), PatchAction::RemoveClass)]
            }
            DeltaKind::InterfaceRemoved { interface }
                if interface == SERIALIZABLE_IFACE || interface == EXTERNALIZABLE_IFACE =>
            {
                alloc::vec![(delta.class_name.clone(), PatchAction::RemoveSerializable)]
            }
            DeltaKind::MethodSignatureChanged { .. } => {
                alloc::vec![(delta.class_name.clone(), PatchAction::ChangeSignature)]
            }
            DeltaKind::MethodBodyChanged {
                method,
                added_calls,
                ..
            } if !added_calls.is_empty() && CHECK_METHOD_NAMES.contains(&method.as_str()) => {
                alloc::vec![(delta.class_name.clone(), PatchAction::IntroduceCheck)]
            }
            DeltaKind::MethodAdded { method, .. }
                if CHECK_METHOD_NAMES.contains(&method.as_str()) =>
            {
                alloc::vec![(delta.class_name.clone(), PatchAction::IntroduceCheck)]
            }
            _ => Vec::new(),
        };
        for (class, action) in hits {
            let slot = per_class.entry(class).or_default();
            slot.0.push(action);
            slot.1.push(delta.clone());
        }
    }
    let mut buckets: BTreeMap<PatchAction, (BTreeSet<String>, Vec<ClassDelta>)> = BTreeMap::new();
    for (class, (actions, evidence)) in per_class {
        let winner = actions
            .into_iter()
            .min()
            .expect("entry created only with an action");
        let slot = buckets.entry(winner).or_default();
        slot.0.insert(class);
        for delta in evidence {
            if !slot.1.contains(&delta) {
                slot.1.push(delta);
            }
        }
    }
    buckets
        .into_iter()
        .map(|(action, (classes, evidence))| PatchLabel {
            action,
            classes,
            evidence,
        })
        .collect()
}
