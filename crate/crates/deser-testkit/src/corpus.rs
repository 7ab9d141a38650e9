//! Fixture corpora.
//!
//! Canned classpaths and payload streams the suites audit against: a
//! reference gadget classpath with a known proxy-trampoline chain, library
//! version pairs exhibiting each introduction and patch action, application
//! classpaths with and without over-general deserialization types, and one
//! payload stream per known attack with its byte offsets recorded.

use crate::classes::{
    iface_call, stat, virt, ClassSpec, Ins, ACC_FINAL, ACC_PRIVATE, ACC_PROTECTED, ACC_PUBLIC,
    ACC_SUPER, ACC_TRANSIENT, OP_ACONST_NULL, OP_ALOAD_0, OP_ARETURN, OP_POP, OP_RETURN,
};
use crate::streams::{obj_field, prim_field, StreamWriter, SC_SERIALIZABLE, TC_CLASS, TC_OBJECT};

/// `(archive entry name, class-file bytes)`.
pub type NamedClass = (String, Vec<u8>);

pub fn entry(spec: ClassSpec) -> NamedClass {
    (format!("{}.class", spec.name), spec.build())
}

// ---- Reference gadget classpath ----

pub const HANDLER_CLASS: &str = "sun/reflect/annotation/AnnotationInvocationHandler";
pub const LAZY_MAP_CLASS: &str = "org/apache/commons/collections/map/LazyMap";
pub const CHAINED_TRANSFORMER_CLASS: &str =
    "org/apache/commons/collections/functors/ChainedTransformer";
pub const INVOKER_TRANSFORMER_CLASS: &str =
    "org/apache/commons/collections/functors/InvokerTransformer";
pub const TRANSFORMER_IFACE: &str = "org/apache/commons/collections/Transformer";
pub const MAP_IFACE: &str = "java/util/Map";

const TRANSFORM_DESC: &str = "(Ljava/lang/Object;)Ljava/lang/Object;";
const GET_DESC: &str = "(Ljava/lang/Object;)Ljava/lang/Object;";
const ENTRY_SET_DESC: &str = "()Ljava/util/Set;";
const READ_OBJECT_DESC: &str = "(Ljava/io/ObjectInputStream;)V";
const INVOKE_HANDLER_DESC: &str =
    "(Ljava/lang/Object;Ljava/lang/reflect/Method;[Ljava/lang/Object;)Ljava/lang/Object;";
const METHOD_INVOKE_DESC: &str = "(Ljava/lang/Object;[Ljava/lang/Object;)Ljava/lang/Object;";
const EXEC_DESC: &str = "(Ljava/lang/String;)Ljava/lang/Process;";

/// The classpath behind the canonical proxy-trampoline chain: a serializable
/// invocation handler whose `readObject` touches a map, a lazily-filling map
/// that consults a transformer, and transformers that bottom out in
/// reflective execution.
pub fn reference_gadget_classpath() -> Vec<NamedClass> {
    gadget_classpath(true, false)
}

/// Same classpath with `LazyMap` no longer serializable.
pub fn gadget_classpath_unserializable_lazymap() -> Vec<NamedClass> {
    gadget_classpath(false, false)
}

/// Same classpath with a validation hook added to `InvokerTransformer`.
pub fn gadget_classpath_with_check() -> Vec<NamedClass> {
    gadget_classpath(true, true)
}

fn gadget_classpath(lazymap_serializable: bool, invoker_check: bool) -> Vec<NamedClass> {
    let serializable = ClassSpec::iface("java/io/Serializable");
    let map = ClassSpec::iface(MAP_IFACE)
        .abstract_method("entrySet", ENTRY_SET_DESC)
        .abstract_method("get", GET_DESC);
    let transformer = ClassSpec::iface(TRANSFORMER_IFACE).abstract_method("transform", TRANSFORM_DESC);
    let invocation_handler = ClassSpec::iface("java/lang/reflect/InvocationHandler")
        .abstract_method("invoke", INVOKE_HANDLER_DESC);

    let handler = ClassSpec::new(HANDLER_CLASS)
        .implements("java/lang/reflect/InvocationHandler")
        .serializable()
        .suid(6182022883658399397)
        .field("type", "Ljava/lang/Class;", ACC_PRIVATE)
        .field("memberValues", "Ljava/util/Map;", ACC_PRIVATE)
        .private_method(
            "readObject",
            READ_OBJECT_DESC,
            vec![
                Ins::Op(OP_ALOAD_0),
                iface_call(MAP_IFACE, "entrySet", ENTRY_SET_DESC),
                Ins::Op(OP_POP),
                Ins::Op(OP_RETURN),
            ],
        )
        .method(
            "invoke",
            INVOKE_HANDLER_DESC,
            vec![
                Ins::Op(OP_ALOAD_0),
                iface_call(MAP_IFACE, "get", GET_DESC),
                Ins::Op(OP_ARETURN),
            ],
        );

    let mut lazy_map = ClassSpec::new(LAZY_MAP_CLASS)
        .implements(MAP_IFACE)
        .suid(7990956402564206740)
        .field("factory", "Lorg/apache/commons/collections/Transformer;", ACC_PROTECTED)
        .method(
            "get",
            GET_DESC,
            vec![
                Ins::Op(OP_ALOAD_0),
                virt(CHAINED_TRANSFORMER_CLASS, "transform", TRANSFORM_DESC),
                Ins::Op(OP_ARETURN),
            ],
        );
    if lazymap_serializable {
        lazy_map = lazy_map.serializable();
    }

    let chained = ClassSpec::new(CHAINED_TRANSFORMER_CLASS)
        .implements(TRANSFORMER_IFACE)
        .serializable()
        .suid(3514945074733160196)
        .field(
            "iTransformers",
            "[Lorg/apache/commons/collections/Transformer;",
            ACC_PRIVATE,
        )
        .method(
            "transform",
            TRANSFORM_DESC,
            vec![
                Ins::Op(OP_ALOAD_0),
                iface_call(TRANSFORMER_IFACE, "transform", TRANSFORM_DESC),
                Ins::Op(OP_ARETURN),
            ],
        );

    let mut invoker = ClassSpec::new(INVOKER_TRANSFORMER_CLASS)
        .implements(TRANSFORMER_IFACE)
        .serializable()
        .suid(-8653385846894047688)
        .field("iMethodName", "Ljava/lang/String;", ACC_PRIVATE)
        .method(
            "transform",
            TRANSFORM_DESC,
            vec![
                Ins::Op(OP_ALOAD_0),
                virt("java/lang/reflect/Method", "invoke", METHOD_INVOKE_DESC),
                Ins::Op(OP_ARETURN),
            ],
        );
    if invoker_check {
        invoker = invoker.private_method(
            "readObject",
            READ_OBJECT_DESC,
            vec![
                stat(
                    "org/apache/commons/collections/functors/FunctorUtils",
                    "checkUnsafeSerialization",
                    "(Ljava/lang/Class;)V",
                ),
                Ins::Op(OP_RETURN),
            ],
        );
    }

    let method = ClassSpec::new("java/lang/reflect/Method").method(
        "invoke",
        METHOD_INVOKE_DESC,
        vec![
            Ins::Op(OP_ALOAD_0),
            virt("java/lang/Runtime", "exec", EXEC_DESC),
            Ins::Op(OP_ARETURN),
        ],
    );
    let runtime = ClassSpec::new("java/lang/Runtime").method(
        "exec",
        EXEC_DESC,
        vec![Ins::Op(OP_ACONST_NULL), Ins::Op(OP_ARETURN)],
    );

    vec![
        entry(serializable),
        entry(map),
        entry(transformer),
        entry(invocation_handler),
        entry(handler),
        entry(lazy_map),
        entry(chained),
        entry(invoker),
        entry(method),
        entry(runtime),
    ]
}

// ---- Library version pairs ----

/// Two versions of one library plus what the delta between them should be
/// labelled as. `expected` is `None` for pairs that ship no change.
pub struct LibraryPair {
    pub attack: &'static str,
    pub library: &'static str,
    pub old_version: &'static str,
    pub new_version: &'static str,
    pub old: Vec<NamedClass>,
    pub new: Vec<NamedClass>,
    /// Gadget classes under study (internal names).
    pub focus: Vec<String>,
    /// Expected label in its `as_str` form.
    pub expected: Option<&'static str>,
}

fn pair(
    attack: &'static str,
    library: &'static str,
    old_version: &'static str,
    new_version: &'static str,
    old: Vec<ClassSpec>,
    new: Vec<ClassSpec>,
    focus: &[&str],
    expected: Option<&'static str>,
) -> LibraryPair {
    LibraryPair {
        attack,
        library,
        old_version,
        new_version,
        old: old.into_iter().map(entry).collect(),
        new: new.into_iter().map(entry).collect(),
        focus: focus.iter().map(|s| s.to_string()).collect(),
        expected,
    }
}

/// A small stable class so fixture libraries never diff to empty-vs-empty.
fn marker(name: &str) -> ClassSpec {
    ClassSpec::new(name).field("version", "I", ACC_PRIVATE | ACC_FINAL)
}

fn comparator(name: &str) -> ClassSpec {
    ClassSpec::new(name)
        .serializable()
        .suid(1)
        .method(
            "compare",
            "(Ljava/lang/Object;Ljava/lang/Object;)I",
            vec![Ins::Op(OP_ACONST_NULL), Ins::Op(OP_POP), Ins::Op(OP_RETURN)],
        )
}

/// Version pairs that first shipped gadget material, one per published
/// introduction, labelled with the expected explanation.
pub fn introduction_pairs() -> Vec<LibraryPair> {
    let mut pairs = Vec::new();

    // A package-private helper became public.
    let xthis_old = ClassSpec::new("bsh/XThis")
        .access(ACC_SUPER)
        .serializable()
        .suid(1)
        .field("interp", "Lbsh/Interpreter;", ACC_PRIVATE);
    let xthis_new = xthis_old.clone().access(ACC_PUBLIC | ACC_SUPER);
    pairs.push(pair(
        "BeanShell1",
        "beanshell",
        "2.0b2",
        "2.0b4",
        vec![marker("bsh/Interpreter"), xthis_old],
        vec![marker("bsh/Interpreter"), xthis_new],
        &["bsh/XThis"],
        Some("change-to-public"),
    ));

    // A generated serializable proxy class appeared.
    let proxy_class = "clojure/core/proxy$AbstractTableModel$ff19274a";
    pairs.push(pair(
        "Clojure",
        "clojure",
        "1.6.0-alpha3",
        "1.6.0-beta1",
        vec![marker("clojure/lang/RT")],
        vec![
            marker("clojure/lang/RT"),
            ClassSpec::new(proxy_class).serializable().suid(1),
        ],
        &[proxy_class],
        Some("add-class"),
    ));

    // A serializable comparator appeared.
    pairs.push(pair(
        "CommonsBeanUtils1",
        "commons-beanutils",
        "1.4.1",
        "1.5",
        vec![marker("org/apache/commons/beanutils/BeanUtils")],
        vec![
            marker("org/apache/commons/beanutils/BeanUtils"),
            comparator("org/apache/commons/beanutils/BeanComparator"),
        ],
        &["org/apache/commons/beanutils/BeanComparator"],
        Some("add-class"),
    ));

    pairs.push(pair(
        "CommonsBeanUtils1",
        "commons-collections",
        "2.0",
        "2.1.1",
        vec![marker("org/apache/commons/collections/CollectionUtils")],
        vec![
            marker("org/apache/commons/collections/CollectionUtils"),
            comparator("org/apache/commons/collections/comparators/ComparableComparator"),
        ],
        &["org/apache/commons/collections/comparators/ComparableComparator"],
        Some("add-class"),
    ));

    // Two map helpers became serializable in the same release.
    let lazy_plain = ClassSpec::new(LAZY_MAP_CLASS)
        .implements(MAP_IFACE)
        .suid(7990956402564206740)
        .field("factory", "Lorg/apache/commons/collections/Transformer;", ACC_PROTECTED);
    let tied_plain = ClassSpec::new("org/apache/commons/collections/keyvalue/TiedMapEntry")
        .suid(1)
        .field("map", "Ljava/util/Map;", ACC_PRIVATE);
    pairs.push(pair(
        "CommonsCollections1",
        "commons-collections",
        "3.0",
        "3.1",
        vec![
            marker("org/apache/commons/collections/CollectionUtils"),
            lazy_plain.clone(),
            tied_plain.clone(),
        ],
        vec![
            marker("org/apache/commons/collections/CollectionUtils"),
            lazy_plain.serializable(),
            tied_plain.serializable(),
        ],
        &[
            LAZY_MAP_CLASS,
            "org/apache/commons/collections/keyvalue/TiedMapEntry",
        ],
        Some("make-serializable"),
    ));

    pairs.push(pair(
        "CommonsCollections2",
        "commons-collections4",
        "3.2.2",
        "4.0-alpha1",
        vec![marker("org/apache/commons/collections4/CollectionUtils")],
        vec![
            marker("org/apache/commons/collections4/CollectionUtils"),
            comparator("org/apache/commons/collections4/comparators/TransformingComparator"),
        ],
        &["org/apache/commons/collections4/comparators/TransformingComparator"],
        Some("add-class"),
    ));

    pairs.push(pair(
        "Groovy1",
        "groovy",
        "2.3.0-beta1",
        "2.3.0-beta2",
        vec![marker("org/codehaus/groovy/runtime/InvokerHelper")],
        vec![
            marker("org/codehaus/groovy/runtime/InvokerHelper"),
            ClassSpec::new("org/codehaus/groovy/runtime/Opcodes").serializable().suid(1),
        ],
        &["org/codehaus/groovy/runtime/Opcodes"],
        Some("add-class"),
    ));

    pairs.push(pair(
        "ROME",
        "rome",
        "0.4",
        "0.5",
        vec![marker("com/sun/syndication/feed/WireFeed")],
        vec![
            marker("com/sun/syndication/feed/WireFeed"),
            ClassSpec::new("com/sun/syndication/feed/impl/ObjectBean")
                .serializable()
                .suid(1)
                .field("obj", "Ljava/lang/Object;", ACC_PRIVATE),
        ],
        &["com/sun/syndication/feed/impl/ObjectBean"],
        Some("add-class"),
    ));

    // A serializable scope object gained a slot accessor.
    let scriptable_old = ClassSpec::new("org/mozilla/javascript/ScriptableObject")
        .serializable()
        .suid(2)
        .field("slots", "[Lorg/mozilla/javascript/Slot;", ACC_PRIVATE | ACC_TRANSIENT);
    let scriptable_new = scriptable_old.clone().private_method(
        "accessSlot",
        "(I)Lorg/mozilla/javascript/Slot;",
        vec![Ins::Op(OP_ACONST_NULL), Ins::Op(OP_ARETURN)],
    );
    pairs.push(pair(
        "MozillaRhino1",
        "js-rhino",
        "1.6R5",
        "1.6R6",
        vec![marker("org/mozilla/javascript/Context"), scriptable_old],
        vec![marker("org/mozilla/javascript/Context"), scriptable_new],
        &["org/mozilla/javascript/ScriptableObject"],
        Some("add-methods"),
    ));

    let ofdih =
        "org/springframework/beans/factory/support/AutowireUtils$ObjectFactoryDelegatingInvocationHandler";
    pairs.push(pair(
        "Spring1",
        "spring-beans",
        "2.5.6.SEC01",
        "3.0.0.RELEASE",
        vec![marker("org/springframework/beans/BeanUtils")],
        vec![
            marker("org/springframework/beans/BeanUtils"),
            ClassSpec::new(ofdih)
                .serializable()
                .suid(1)
                .field("objectFactory", "Ljava/lang/Object;", ACC_PRIVATE),
        ],
        &[ofdih],
        Some("add-class"),
    ));

    let mitp = "org/springframework/core/SerializableTypeWrapper$MethodInvokeTypeProvider";
    pairs.push(pair(
        "Spring1",
        "spring-core",
        "3.2.5.RELEASE",
        "4.0.0.RELEASE",
        vec![marker("org/springframework/core/SpringVersion")],
        vec![
            marker("org/springframework/core/SpringVersion"),
            ClassSpec::new(mitp)
                .serializable()
                .suid(1)
                .field("methodName", "Ljava/lang/String;", ACC_PRIVATE),
        ],
        &[mitp],
        Some("add-class"),
    ));

    let aop_proxy = "org/springframework/aop/framework/JdkDynamicAopProxy";
    let aop_old = ClassSpec::new(aop_proxy)
        .suid(1)
        .field("advised", "Ljava/lang/Object;", ACC_PRIVATE);
    pairs.push(pair(
        "Spring2",
        "spring-aop",
        "1.0-rc1",
        "1.1-rc1",
        vec![marker("org/springframework/aop/framework/AopContext"), aop_old.clone()],
        vec![
            marker("org/springframework/aop/framework/AopContext"),
            aop_old.serializable(),
        ],
        &[aop_proxy],
        Some("make-serializable"),
    ));

    let column_comparator = "org/apache/click/control/Column$ColumnComparator";
    let column_old = ClassSpec::new(column_comparator)
        .suid(1)
        .field("column", "Lorg/apache/click/control/Column;", ACC_PRIVATE);
    pairs.push(pair(
        "Click1",
        "click-nodeps",
        "2.0.1-incubating",
        "2.1.0",
        vec![marker("org/apache/click/control/Column"), column_old.clone()],
        vec![
            marker("org/apache/click/control/Column"),
            column_old.serializable(),
        ],
        &[column_comparator],
        Some("make-serializable"),
    ));

    // A serializable utility gained a string helper.
    let shared_old = ClassSpec::new("com/vaadin/shared/util/SharedUtil")
        .serializable()
        .suid(1)
        .field("cache", "Ljava/lang/String;", ACC_PRIVATE);
    let shared_new = shared_old.clone().method(
        "capitalize",
        "(Ljava/lang/String;)Ljava/lang/String;",
        vec![Ins::Op(OP_ACONST_NULL), Ins::Op(OP_ARETURN)],
    );
    pairs.push(pair(
        "Vaadin1",
        "vaadin-shared",
        "7.4.0-alpha14",
        "7.4.0-beta1",
        vec![marker("com/vaadin/shared/VaadinUri"), shared_old],
        vec![marker("com/vaadin/shared/VaadinUri"), shared_new],
        &["com/vaadin/shared/util/SharedUtil"],
        Some("add-methods"),
    ));

    pairs
}

/// Version pairs around each published patch (or non-patch): eight ship a
/// remediation, six ship nothing.
pub fn patch_pairs() -> Vec<LibraryPair> {
    let mut pairs = Vec::new();

    // Serializable dropped from the scripted-object handler.
    let handler_old = ClassSpec::new("bsh/XThis$Handler")
        .serializable()
        .suid(1)
        .field("xthis", "Lbsh/XThis;", ACC_PRIVATE);
    let handler_new = ClassSpec::new("bsh/XThis$Handler")
        .suid(1)
        .field("xthis", "Lbsh/XThis;", ACC_PRIVATE);
    pairs.push(pair(
        "BeanShell1",
        "beanshell",
        "2.0b5",
        "2.0b6",
        vec![marker("bsh/XThis"), handler_old],
        vec![marker("bsh/XThis"), handler_new],
        &["bsh/XThis$Handler"],
        Some("remove-serializable"),
    ));

    // A whole speculative package was dropped.
    pairs.push(pair(
        "Clojure",
        "clojure",
        "1.9.0-alpha15",
        "1.9.0-alpha16",
        vec![
            marker("clojure/lang/RT"),
            ClassSpec::new("clojure/spec/Spec").serializable().suid(1),
            ClassSpec::new("clojure/spec/Keys").serializable().suid(1),
        ],
        vec![marker("clojure/lang/RT")],
        &["clojure/spec/Spec", "clojure/spec/Keys"],
        Some("remove-package"),
    ));

    // The reflective transformer gained a deserialization guard.
    let invoker_plain = ClassSpec::new(INVOKER_TRANSFORMER_CLASS)
        .implements(TRANSFORMER_IFACE)
        .serializable()
        .suid(-8653385846894047688)
        .field("iMethodName", "Ljava/lang/String;", ACC_PRIVATE)
        .method(
            "transform",
            TRANSFORM_DESC,
            vec![Ins::Op(OP_ACONST_NULL), Ins::Op(OP_ARETURN)],
        );
    let invoker_checked = invoker_plain.clone().private_method(
        "readObject",
        READ_OBJECT_DESC,
        vec![
            stat(
                "org/apache/commons/collections/functors/FunctorUtils",
                "checkUnsafeSerialization",
                "(Ljava/lang/Class;)V",
            ),
            Ins::Op(OP_RETURN),
        ],
    );
    pairs.push(pair(
        "CommonsCollections1",
        "commons-collections",
        "3.2.1",
        "3.2.2",
        vec![
            marker("org/apache/commons/collections/CollectionUtils"),
            invoker_plain,
        ],
        vec![
            marker("org/apache/commons/collections/CollectionUtils"),
            invoker_checked,
        ],
        &[INVOKER_TRANSFORMER_CLASS],
        Some("introduce-check"),
    ));

    // Both dangerous transformers lost Serializable.
    let c4_invoker = "org/apache/commons/collections4/functors/InvokerTransformer";
    let c4_instantiate = "org/apache/commons/collections4/functors/InstantiateTransformer";
    let c4_transformer = |name: &str, serializable: bool| {
        let spec = ClassSpec::new(name)
            .suid(1)
            .method(
                "transform",
                TRANSFORM_DESC,
                vec![Ins::Op(OP_ACONST_NULL), Ins::Op(OP_ARETURN)],
            );
        if serializable {
            spec.serializable()
        } else {
            spec
        }
    };
    pairs.push(pair(
        "CommonsCollections2",
        "commons-collections4",
        "4.0",
        "4.4.1",
        vec![
            marker("org/apache/commons/collections4/CollectionUtils"),
            c4_transformer(c4_invoker, true),
            c4_transformer(c4_instantiate, true),
        ],
        vec![
            marker("org/apache/commons/collections4/CollectionUtils"),
            c4_transformer(c4_invoker, false),
            c4_transformer(c4_instantiate, false),
        ],
        &[c4_invoker, c4_instantiate],
        Some("remove-serializable"),
    ));

    // The method-handle closure gained a readResolve hook.
    let closure_old = ClassSpec::new("org/codehaus/groovy/runtime/MethodClosure")
        .serializable()
        .suid(1)
        .field("method", "Ljava/lang/String;", ACC_PRIVATE);
    let closure_new = closure_old.clone().method(
        "readResolve",
        "()Ljava/lang/Object;",
        vec![Ins::Op(OP_ACONST_NULL), Ins::Op(OP_ARETURN)],
    );
    pairs.push(pair(
        "Groovy1",
        "groovy",
        "2.4.3",
        "2.4.4",
        vec![marker("org/codehaus/groovy/runtime/InvokerHelper"), closure_old],
        vec![marker("org/codehaus/groovy/runtime/InvokerHelper"), closure_new],
        &["org/codehaus/groovy/runtime/MethodClosure"],
        Some("introduce-check"),
    ));

    // The slot accessor now takes Object, breaking recorded payloads.
    let rhino_class = "org/mozilla/javascript/ScriptableObject";
    let getslot = |desc: &str| {
        ClassSpec::new(rhino_class)
            .serializable()
            .suid(2)
            .method(
                "getSlot",
                desc,
                vec![Ins::Op(OP_ACONST_NULL), Ins::Op(OP_ARETURN)],
            )
    };
    pairs.push(pair(
        "MozillaRhino1",
        "js-rhino",
        "1.7.7.1",
        "1.7.7.2",
        vec![
            marker("org/mozilla/javascript/Context"),
            getslot("(Ljava/lang/String;II)Lorg/mozilla/javascript/Slot;"),
        ],
        vec![
            marker("org/mozilla/javascript/Context"),
            getslot("(Ljava/lang/Object;II)Lorg/mozilla/javascript/Slot;"),
        ],
        &[rhino_class],
        Some("change-signature"),
    ));

    // readObject now asserts on the resolved method.
    let mitp = "org/springframework/core/SerializableTypeWrapper$MethodInvokeTypeProvider";
    let mitp_body = |checked: bool| {
        let mut body = vec![
            Ins::Op(OP_ALOAD_0),
            virt("java/io/ObjectInputStream", "defaultReadObject", "()V"),
        ];
        if checked {
            body.push(stat(
                "org/springframework/util/Assert",
                "state",
                "(ZLjava/lang/String;)V",
            ));
        }
        body.push(Ins::Op(OP_RETURN));
        ClassSpec::new(mitp)
            .serializable()
            .suid(1)
            .private_method("readObject", READ_OBJECT_DESC, body)
    };
    pairs.push(pair(
        "Spring1",
        "spring-core",
        "4.2.2",
        "4.2.3",
        vec![marker("org/springframework/core/SpringVersion"), mitp_body(false)],
        vec![marker("org/springframework/core/SpringVersion"), mitp_body(true)],
        &[mitp],
        Some("introduce-check"),
    ));

    // The item container was removed outright.
    let propertyset = ClassSpec::new("com/vaadin/data/util/PropertysetItem")
        .serializable()
        .suid(1);
    pairs.push(pair(
        "Vaadin1",
        "vaadin-server",
        "7.7.17",
        "8.0.0",
        vec![
            marker("com/vaadin/data/util/ObjectProperty"),
            propertyset,
        ],
        vec![marker("com/vaadin/data/util/ObjectProperty")],
        &["com/vaadin/data/util/PropertysetItem"],
        Some("remove-class"),
    ));

    // The remaining six libraries shipped no remediation.
    let unpatched: [(&str, &str, &str, ClassSpec); 6] = [
        (
            "CommonsBeanUtils1",
            "commons-beanutils",
            "1.9.4",
            comparator("org/apache/commons/beanutils/BeanComparator"),
        ),
        (
            "ROME",
            "rome",
            "1.0",
            ClassSpec::new("com/sun/syndication/feed/impl/ObjectBean")
                .serializable()
                .suid(1),
        ),
        (
            "Spring1",
            "spring-beans",
            "3.0.0.RELEASE",
            ClassSpec::new(
                "org/springframework/beans/factory/support/AutowireUtils$ObjectFactoryDelegatingInvocationHandler",
            )
            .serializable()
            .suid(1),
        ),
        (
            "Click1",
            "click-nodeps",
            "2.3.0-RC1",
            ClassSpec::new("org/apache/click/control/Column$ColumnComparator")
                .serializable()
                .suid(1),
        ),
        (
            "Click1",
            "javax-servlet",
            "4.0.1",
            ClassSpec::new("javax/servlet/http/HttpServlet").suid(1),
        ),
        (
            "Vaadin1",
            "vaadin-shared",
            "7.4.0-beta1",
            ClassSpec::new("com/vaadin/shared/util/SharedUtil")
                .serializable()
                .suid(1),
        ),
    ];
    for (attack, library, version, gadget) in unpatched {
        let focus_name = gadget.name.clone();
        let classes = vec![marker(&format!("{}/Marker", library.replace('-', ""))), gadget];
        let built: Vec<NamedClass> = classes.iter().cloned().map(entry).collect();
        pairs.push(LibraryPair {
            attack,
            library,
            old_version: version,
            new_version: version,
            old: built.clone(),
            new: built,
            focus: vec![focus_name],
            expected: None,
        });
    }

    pairs
}

// ---- Application classpaths ----

/// An application classpath plus the class its deserialization call reads
/// into, and whether the type extraction should flag it as over-general.
pub struct AppFixture {
    pub name: &'static str,
    pub classes: Vec<NamedClass>,
    /// Internal name of the deserialized root type.
    pub root: &'static str,
    pub over_general: bool,
}

pub fn app_fixtures() -> Vec<AppFixture> {
    let mut apps = Vec::new();

    // A message type holding a growable list: the list's backing array is
    // Object[], so an allow list from it admits anything. The array field
    // stays non-transient here so the closure has to walk through it.
    apps.push(AppFixture {
        name: "inventory-service",
        classes: vec![
            entry(
                ClassSpec::new("com/example/inventory/OrderMessage")
                    .serializable()
                    .suid(1)
                    .field("orderId", "J", ACC_PRIVATE)
                    .field("items", "Ljava/util/ArrayList;", ACC_PRIVATE),
            ),
            entry(
                ClassSpec::new("java/util/ArrayList")
                    .serializable()
                    .suid(8683452581122892189)
                    .field("elementData", "[Ljava/lang/Object;", ACC_PRIVATE),
            ),
        ],
        root: "com/example/inventory/OrderMessage",
        over_general: true,
    });

    apps.push(AppFixture {
        name: "report-queue",
        classes: vec![entry(
            ClassSpec::new("com/example/report/ReportJob")
                .serializable()
                .suid(1)
                .field("title", "Ljava/lang/String;", ACC_PRIVATE)
                .field("payload", "Ljava/io/Serializable;", ACC_PRIVATE),
        )],
        root: "com/example/report/ReportJob",
        over_general: true,
    });

    apps.push(AppFixture {
        name: "session-cache",
        classes: vec![
            entry(
                ClassSpec::new("com/example/session/SessionBlob")
                    .extends("com/example/session/BaseBlob")
                    .serializable()
                    .suid(1)
                    .field("sessionId", "Ljava/lang/String;", ACC_PRIVATE),
            ),
            entry(
                ClassSpec::new("com/example/session/BaseBlob")
                    .serializable()
                    .suid(1)
                    .field("attributes", "Ljava/util/HashMap;", ACC_PROTECTED),
            ),
            entry(
                ClassSpec::new("java/util/HashMap")
                    .serializable()
                    .suid(362498820763181265)
                    .field("table", "[Ljava/util/HashMap$Node;", ACC_PRIVATE),
            ),
            entry(
                ClassSpec::new("java/util/HashMap$Node")
                    .field("key", "Ljava/lang/Object;", ACC_PRIVATE)
                    .field("value", "Ljava/lang/Object;", ACC_PRIVATE),
            ),
        ],
        root: "com/example/session/SessionBlob",
        over_general: true,
    });

    apps.push(AppFixture {
        name: "telemetry-bus",
        classes: vec![entry(
            ClassSpec::new("com/example/telemetry/Event")
                .serializable()
                .suid(1)
                .field("timestamp", "J", ACC_PRIVATE)
                .field("data", "Ljava/lang/Object;", ACC_PRIVATE),
        )],
        root: "com/example/telemetry/Event",
        over_general: true,
    });

    // Negative control: every field is primitive or concretely typed.
    apps.push(AppFixture {
        name: "payroll-export",
        classes: vec![
            entry(
                ClassSpec::new("com/example/payroll/PayrollRow")
                    .serializable()
                    .suid(1)
                    .field("name", "Ljava/lang/String;", ACC_PRIVATE)
                    .field("amountCents", "J", ACC_PRIVATE)
                    .field("dept", "Lcom/example/payroll/Dept;", ACC_PRIVATE),
            ),
            entry(
                ClassSpec::new("com/example/payroll/Dept")
                    .serializable()
                    .suid(1)
                    .field("code", "Ljava/lang/String;", ACC_PRIVATE),
            ),
        ],
        root: "com/example/payroll/PayrollRow",
        over_general: false,
    });

    apps
}

// ---- Attack payload streams ----

/// One payload stream per known attack: a serialized object of the attack's
/// marker class with one primitive and one object field. The recorded
/// offsets let tests pin where a filter rejection must land.
pub struct AttackStream {
    pub attack: &'static str,
    /// Dot-form class a one-line deny rule should reject on.
    pub marker_class: &'static str,
    pub bytes: Vec<u8>,
    /// Byte offset of the rejected element's tag.
    pub element_start: usize,
    /// Byte offset of its first field value byte.
    pub first_field_byte: usize,
}

pub const ATTACK_MARKERS: [(&str, &str); 19] = [
    ("BeanShell1", "bsh.XThis$Handler"),
    ("Clojure", "clojure.core.proxy$AbstractTableModel$ff19274a"),
    ("CommonsBeanUtils1", "org.apache.commons.beanutils.BeanComparator"),
    ("CommonsCollections1", "org.apache.commons.collections.functors.ChainedTransformer"),
    ("CommonsCollections2", "org.apache.commons.collections4.functors.InvokerTransformer"),
    ("CommonsCollections3", "org.apache.commons.collections.functors.InstantiateTransformer"),
    ("CommonsCollections4", "org.apache.commons.collections4.functors.InstantiateTransformer"),
    ("CommonsCollections5", "org.apache.commons.collections.keyvalue.TiedMapEntry"),
    ("CommonsCollections6", "org.apache.commons.collections.map.LazyMap"),
    ("CommonsCollections7", "org.apache.commons.collections.functors.ConstantTransformer"),
    ("Groovy1", "org.codehaus.groovy.runtime.ConvertedClosure"),
    ("ROME", "com.sun.syndication.feed.impl.ObjectBean"),
    ("MozillaRhino1", "org.mozilla.javascript.NativeError"),
    ("MozillaRhino2", "org.mozilla.javascript.NativeJavaObject"),
    ("Spring1", "org.springframework.core.SerializableTypeWrapper$MethodInvokeTypeProvider"),
    ("Spring2", "org.springframework.aop.framework.JdkDynamicAopProxy"),
    ("Click1", "org.apache.click.control.Column$ColumnComparator"),
    ("Vaadin1", "com.vaadin.data.util.PropertysetItem"),
    ("JDK7U21", "com.sun.org.apache.xalan.internal.xsltc.trax.TemplatesImpl"),
];

pub fn attack_streams() -> Vec<AttackStream> {
    ATTACK_MARKERS
        .iter()
        .map(|&(attack, marker_class)| {
            let mut w = StreamWriter::new();
            let element_start = w.pos();
            w.u8(TC_OBJECT);
            w.class_desc(
                marker_class,
                1,
                SC_SERIALIZABLE,
                &[
                    prim_field(b'I', "id"),
                    obj_field("payload", "Ljava/lang/Object;"),
                ],
            );
            w.take_handle();
            let first_field_byte = w.pos();
            w.u32(7);
            w.string("calc");
            AttackStream {
                attack,
                marker_class,
                bytes: w.finish(),
                element_start,
                first_field_byte,
            }
        })
        .collect()
}

// ---- Reference payload stream ----

/// A proxy-trampoline payload skeleton: handler object wrapping a map proxy
/// whose invocation handler is a second handler instance holding the lazy
/// map and its transformer chain.
pub struct ProxyPayload {
    pub bytes: Vec<u8>,
    /// Distinct display class names, in first-encounter order.
    pub expected_class_names: Vec<String>,
    pub root_desc_handle: u32,
    pub root_object_handle: u32,
    pub handles_taken: u32,
}

pub fn proxy_payload_stream() -> ProxyPayload {
    let mut w = StreamWriter::new();

    w.u8(TC_OBJECT);
    let root_desc = w.class_desc(
        "sun.reflect.annotation.AnnotationInvocationHandler",
        6182022883658399397,
        SC_SERIALIZABLE,
        &[
            obj_field("memberValues", "Ljava/util/Map;"),
            obj_field("type", "Ljava/lang/Class;"),
        ],
    );
    let root_obj = w.take_handle();

    // memberValues: a map proxy whose handler is a second handler instance.
    w.u8(TC_OBJECT);
    w.proxy_desc_open(&["java.util.Map"]);
    w.class_desc(
        "java.lang.reflect.Proxy",
        -2222430588158568118,
        SC_SERIALIZABLE,
        &[obj_field("h", "Ljava/lang/reflect/InvocationHandler;")],
    );
    w.take_handle();

    // Proxy.h (super-first classdata): the inner handler.
    w.u8(TC_OBJECT);
    w.reference(root_desc);
    w.take_handle();

    // Inner handler memberValues: the lazy map with its transformer chain.
    w.u8(TC_OBJECT);
    w.class_desc(
        "org.apache.commons.collections.map.LazyMap",
        7990956402564206740,
        SC_SERIALIZABLE,
        &[obj_field("factory", "Lorg/apache/commons/collections/Transformer;")],
    );
    w.take_handle();

    w.u8(TC_OBJECT);
    w.class_desc(
        "org.apache.commons.collections.functors.ChainedTransformer",
        3514945074733160196,
        SC_SERIALIZABLE,
        &[obj_field("iTransformers", "[Lorg/apache/commons/collections/Transformer;")],
    );
    w.take_handle();
    w.null(); // iTransformers

    w.null(); // inner handler's type

    // Root handler's type: a class object.
    w.u8(TC_CLASS);
    w.class_desc("java.lang.Override", 0, 0, &[]);
    w.take_handle();

    let handles_taken = w.handles_taken();
    ProxyPayload {
        bytes: w.finish(),
        expected_class_names: vec![
            "sun.reflect.annotation.AnnotationInvocationHandler".to_string(),
            "$Proxy(java.util.Map)".to_string(),
            "java.lang.reflect.Proxy".to_string(),
            "org.apache.commons.collections.map.LazyMap".to_string(),
            "org.apache.commons.collections.functors.ChainedTransformer".to_string(),
            "java.lang.Override".to_string(),
        ],
        root_desc_handle: root_desc,
        root_object_handle: root_obj,
        handles_taken,
    }
}

// ---- Small structural streams ----

/// A class element, then two strings: pins down handle numbering from the
/// base value. Returns `(bytes, expected_handles_in_assignment_order)`.
pub fn handle_numbering_stream() -> (Vec<u8>, Vec<u32>) {
    let mut w = StreamWriter::new();
    w.u8(TC_CLASS);
    let desc = w.class_desc("com.example.Widget", 42, SC_SERIALIZABLE, &[]);
    let class_handle = w.take_handle();
    let s1 = w.string("alpha");
    let s2 = w.string("beta");
    (w.finish(), vec![desc, class_handle, s1, s2])
}

/// `depth` objects nested through an Object-typed field, sharing one
/// descriptor; the innermost field value is null.
pub fn nested_stream(depth: usize) -> Vec<u8> {
    assert!(depth >= 1);
    let mut w = StreamWriter::new();
    w.u8(TC_OBJECT);
    let desc = w.class_desc(
        "com.example.Node",
        1,
        SC_SERIALIZABLE,
        &[obj_field("next", "Ljava/lang/Object;")],
    );
    w.take_handle();
    for _ in 1..depth {
        w.u8(TC_OBJECT);
        w.reference(desc);
        w.take_handle();
    }
    w.null();
    w.finish()
}
