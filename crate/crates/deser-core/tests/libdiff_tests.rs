//! Library-delta classification against curated before/after class pairs.

use std::collections::{BTreeMap, BTreeSet};

use deser_core::classfile::{parse_class, ClasspathIndex};
use deser_core::libdiff::{
    classify_introduction, classify_patch, diff_indexes, CallKey, ClassDelta, DeltaKind,
    PatchAction, Visibility,
};
use deser_testkit::classes::{stat, virt, ClassSpec, ACC_PUBLIC, ACC_SUPER};
use deser_testkit::corpus::{entry, introduction_pairs, patch_pairs, NamedClass};
use deser_testkit::random::{random_class, rng};

fn index_of(classes: &[NamedClass]) -> ClasspathIndex {
    let mut index = ClasspathIndex::new();
    for (name, bytes) in classes {
        let model = parse_class(bytes).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert!(index.insert(model, name), "duplicate class {name}");
    }
    index
}

fn index_from_specs(specs: Vec<ClassSpec>) -> ClasspathIndex {
    let named: Vec<NamedClass> = specs.into_iter().map(entry).collect();
    index_of(&named)
}

fn focus_set(pair_focus: &[String]) -> BTreeSet<String> {
    pair_focus.iter().cloned().collect()
}

// ---- curated introduction pairs ----

#[test]
fn introduction_pairs_each_earn_exactly_the_expected_label() {
    let mut histogram: BTreeMap<&'static str, usize> = BTreeMap::new();
    let pairs = introduction_pairs();
    assert_eq!(pairs.len(), 14);

    for pair in &pairs {
        let old = index_of(&pair.old);
        let new = index_of(&pair.new);
        let deltas = diff_indexes(&old, &new);
        let focus = focus_set(&pair.focus);
        let labels = classify_introduction(&deltas, Some(&focus));
        let expected = pair
            .expected
            .unwrap_or_else(|| panic!("{}: introduction rows all carry a label", pair.attack));
        assert_eq!(
            labels.len(),
            1,
            "{} {}->{}: want one label, got {labels:?}",
            pair.library,
            pair.old_version,
            pair.new_version,
        );
        assert_eq!(
            labels[0].action.as_str(),
            expected,
            "{} {}->{}",
            pair.library,
            pair.old_version,
            pair.new_version,
        );
        // Every focus class with a delta shows up in the label.
        assert!(labels[0].classes.iter().all(|c| focus.contains(c)));
        assert!(!labels[0].evidence.is_empty());
        *histogram.entry(expected).or_default() += 1;
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

// ---- curated patch pairs ----

#[test]
fn patch_pairs_label_row_for_row_and_six_stay_unpatched() {
    let pairs = patch_pairs();
    assert_eq!(pairs.len(), 14);

    let mut patched = 0usize;
    let mut unpatched = 0usize;
    for pair in &pairs {
        let old = index_of(&pair.old);
        let new = index_of(&pair.new);
        let deltas = diff_indexes(&old, &new);
        let focus = focus_set(&pair.focus);
        let labels = classify_patch(&deltas, Some(&focus));
        match pair.expected {
            Some(action) => {
                patched += 1;
                assert_eq!(
                    labels.len(),
                    1,
                    "{} {}->{}: want one label, got {labels:?}",
                    pair.library,
                    pair.old_version,
                    pair.new_version,
                );
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
                unpatched += 1;
                assert!(
                    labels.is_empty(),
                    "{} {}->{}: expected no patch action, got {labels:?}",
                    pair.library,
                    pair.old_version,
                    pair.new_version,
                );
            }
        }
    }
    assert_eq!(patched, 8);
    assert_eq!(unpatched, 6);
}

// ---- visibility ----

#[test]
fn visibility_flags_rank_public_over_protected_over_private() {
    assert_eq!(Visibility::from_flags(ACC_PUBLIC), Visibility::Public);
    assert_eq!(Visibility::from_flags(0x0004), Visibility::Protected);
    assert_eq!(Visibility::from_flags(0x0002), Visibility::Private);
    assert_eq!(Visibility::from_flags(ACC_SUPER), Visibility::Package);
    // A public flag wins even when other bits are set.
    assert_eq!(
        Visibility::from_flags(ACC_PUBLIC | 0x0004 | 0x0002),
        Visibility::Public
    );
    assert!(Visibility::Private < Visibility::Package);
    assert!(Visibility::Package < Visibility::Protected);
    assert!(Visibility::Protected < Visibility::Public);
}

#[test]
fn widened_visibility_reads_as_change_to_public_but_narrowed_does_not() {
    let before = vec![ClassSpec::new("lib/Gate").access(ACC_SUPER)];
    let after = vec![ClassSpec::new("lib/Gate").access(ACC_PUBLIC | ACC_SUPER)];
    let old = index_from_specs(before.clone());
    let new = index_from_specs(after.clone());

    let widened = diff_indexes(&old, &new);
    assert_eq!(widened.len(), 1);
    assert_eq!(
        widened[0].kind,
        DeltaKind::VisibilityChanged {
            old: Visibility::Package,
            new: Visibility::Public,
        }
    );
    let labels = classify_introduction(&widened, None);
    assert_eq!(labels.len(), 1);
    assert_eq!(labels[0].action.as_str(), "change-to-public");

    // The reverse direction records the delta but earns no introduction.
    let narrowed = diff_indexes(&new, &old);
    assert_eq!(narrowed.len(), 1);
    assert!(classify_introduction(&narrowed, None).is_empty());
}

// ---- method-level deltas ----

#[test]
fn body_call_changes_carry_added_and_removed_call_keys() {
    let old = index_from_specs(vec![ClassSpec::new("app/W").method(
        "run",
        "()V",
        vec![virt("x/Y", "p", "()V"), stat("x/Y", "keep", "()V")],
    )]);
    let new = index_from_specs(vec![ClassSpec::new("app/W").method(
        "run",
        "()V",
        vec![virt("x/Y", "q", "()V"), stat("x/Y", "keep", "()V")],
    )]);

    let deltas = diff_indexes(&old, &new);
    assert_eq!(deltas.len(), 1);
    let ClassDelta { class_name, kind } = &deltas[0];
    assert_eq!(class_name, "app/W");
    let DeltaKind::MethodBodyChanged {
        method,
        descriptor,
        added_calls,
        removed_calls,
    } = kind
    else {
        panic!("expected a body change, got {kind:?}");
    };
    assert_eq!(method, "run");
    assert_eq!(descriptor, "()V");
    let names = |keys: &Vec<CallKey>| -> Vec<String> {
        keys.iter().map(|k| k.method_name.clone()).collect()
    };
    assert_eq!(names(added_calls), ["q"]);
    assert_eq!(names(removed_calls), ["p"]);
}

#[test]
fn reordered_calls_count_as_a_body_change_with_empty_call_sets() {
    let old = index_from_specs(vec![ClassSpec::new("app/W").method(
        "run",
        "()V",
        vec![virt("x/Y", "a", "()V"), virt("x/Y", "b", "()V")],
    )]);
    let new = index_from_specs(vec![ClassSpec::new("app/W").method(
        "run",
        "()V",
        vec![virt("x/Y", "b", "()V"), virt("x/Y", "a", "()V")],
    )]);
    let deltas = diff_indexes(&old, &new);
    assert_eq!(deltas.len(), 1);
    let DeltaKind::MethodBodyChanged {
        added_calls,
        removed_calls,
        ..
    } = &deltas[0].kind
    else {
        panic!("expected a body change, got {:?}", deltas[0].kind);
    };
    assert!(added_calls.is_empty());
    assert!(removed_calls.is_empty());
}

#[test]
fn overload_churn_pairs_into_signature_changes_plus_spill() {
    // Two old overloads collapse into one new descriptor: the first pairs as
    // a signature change, the leftover reads as a removal.
    let old = index_from_specs(vec![ClassSpec::new("app/Api")
        .method("call", "(I)V", vec![])
        .method("call", "(J)V", vec![])]);
    let new = index_from_specs(vec![ClassSpec::new("app/Api").method("call", "(D)V", vec![])]);

    let deltas = diff_indexes(&old, &new);
    let mut changed = Vec::new();
    let mut removed = Vec::new();
    for delta in &deltas {
        match &delta.kind {
            DeltaKind::MethodSignatureChanged {
                old_descriptor,
                new_descriptor,
                ..
            } => changed.push((old_descriptor.clone(), new_descriptor.clone())),
            DeltaKind::MethodRemoved { descriptor, .. } => removed.push(descriptor.clone()),
            other => panic!("unexpected delta {other:?}"),
        }
    }
    assert_eq!(changed, [("(I)V".to_string(), "(D)V".to_string())]);
    assert_eq!(removed, ["(J)V"]);
}

#[test]
fn new_method_on_a_serializable_class_reads_as_add_methods() {
    let base = ClassSpec::new("lib/Holder").serializable().suid(1);
    let old = index_from_specs(vec![base.clone()]);
    let new = index_from_specs(vec![base.method("grab", "()V", vec![])]);
    let deltas = diff_indexes(&old, &new);
    assert_eq!(deltas.len(), 1);
    assert_eq!(
        deltas[0].kind,
        DeltaKind::MethodAdded {
            method: "grab".to_string(),
            descriptor: "()V".to_string(),
            class_serializable: true,
        }
    );
    let labels = classify_introduction(&deltas, None);
    assert_eq!(labels.len(), 1);
    assert_eq!(labels[0].action.as_str(), "add-methods");
}

// ---- class and package level deltas ----

#[test]
fn marker_interface_counts_even_when_not_itself_indexed() {
    // java/io/Serializable is never on the compared classpaths, yet a class
    // declaring it must still register as serializable material.
    let old = index_from_specs(vec![ClassSpec::new("lib/Anchor")]);
    let new = index_from_specs(vec![
        ClassSpec::new("lib/Anchor"),
        ClassSpec::new("lib/Fresh").serializable().suid(9),
    ]);
    let deltas = diff_indexes(&old, &new);
    assert_eq!(deltas.len(), 1);
    assert_eq!(
        deltas[0].kind,
        DeltaKind::ClassAdded { serializable: true }
    );
}

#[test]
fn package_removal_reports_the_maximal_dead_prefix() {
    let old = index_from_specs(vec![
        ClassSpec::new("p/q/A"),
        ClassSpec::new("p/q/B"),
        ClassSpec::new("p/C"),
    ]);
    let new = index_from_specs(vec![ClassSpec::new("p/C")]);
    let deltas = diff_indexes(&old, &new);

    let packages: Vec<&ClassDelta> = deltas
        .iter()
        .filter(|d| matches!(d.kind, DeltaKind::PackageRemoved { .. }))
        .collect();
    assert_eq!(packages.len(), 1);
    assert_eq!(packages[0].class_name, "p/q");
    let DeltaKind::PackageRemoved { classes } = &packages[0].kind else {
        unreachable!()
    };
    assert_eq!(classes, &["p/q/A".to_string(), "p/q/B".to_string()]);

    // Each dead class still gets its own removal row.
    let removed: BTreeSet<&str> = deltas
        .iter()
        .filter(|d| matches!(d.kind, DeltaKind::ClassRemoved { .. }))
        .map(|d| d.class_name.as_str())
        .collect();
    assert_eq!(removed, BTreeSet::from(["p/q/A", "p/q/B"]));

    // Package removal outranks class removal for the classes it covers.
    let focus = BTreeSet::from(["p/q/A".to_string()]);
    let labels = classify_patch(&deltas, Some(&focus));
    assert_eq!(labels.len(), 1);
    assert_eq!(labels[0].action, PatchAction::RemovePackage);
}

#[test]
fn sibling_survivor_keeps_the_parent_package_alive() {
    let old = index_from_specs(vec![ClassSpec::new("p/q/A"), ClassSpec::new("p/r/B")]);
    let new = index_from_specs(vec![ClassSpec::new("p/r/B")]);
    let deltas = diff_indexes(&old, &new);
    let packages: Vec<&str> = deltas
        .iter()
        .filter(|d| matches!(d.kind, DeltaKind::PackageRemoved { .. }))
        .map(|d| d.class_name.as_str())
        .collect();
    // p/q died but p did not: only the inner prefix is reported.
    assert_eq!(packages, ["p/q"]);
}

#[test]
fn added_and_removed_classes_mirror_across_diff_direction() {
    let a = index_from_specs(vec![ClassSpec::new("m/Base")]);
    let b = index_from_specs(vec![
        ClassSpec::new("m/Base"),
        ClassSpec::new("m/Extra").serializable().suid(4),
    ]);
    let forward = diff_indexes(&a, &b);
    assert_eq!(forward.len(), 1);
    assert_eq!(
        forward[0].kind,
        DeltaKind::ClassAdded { serializable: true }
    );

    let backward = diff_indexes(&b, &a);
    let class_rows: Vec<&ClassDelta> = backward
        .iter()
        .filter(|d| matches!(d.kind, DeltaKind::ClassRemoved { .. }))
        .collect();
    assert_eq!(class_rows.len(), 1);
    assert_eq!(class_rows[0].class_name, "m/Extra");
    assert_eq!(
        class_rows[0].kind,
        DeltaKind::ClassRemoved { serializable: true }
    );
}

#[test]
fn identical_indexes_diff_to_nothing_across_random_classes() {
    for seed in 0..64u64 {
        let mut r = rng(seed);
        let mut specs = Vec::new();
        for _ in 0..4 {
            specs.push(random_class(&mut r));
        }
        // Random names can collide; keep the first of each.
        let mut index = ClasspathIndex::new();
        for spec in specs {
            let named = entry(spec);
            let model = parse_class(&named.1).expect("generated class parses");
            index.insert(model, &named.0);
        }
        assert!(diff_indexes(&index, &index).is_empty(), "seed {seed}");
    }
}
