//! Seeded random generators for round-trip and fuzz suites.
//!
//! Class generation returns a `ClassSpec` and nothing else: the returned
//! value is the expectation a decoder's output gets compared against. Stream
//! generation returns the bytes plus the facts the writer accumulated while
//! encoding. Mutators derive hostile inputs from valid ones.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classes::{iface_call, indy, special, stat, virt, ClassSpec, FieldSpec, Ins, MethodSpec};
use crate::classes::{
    ACC_ABSTRACT, ACC_FINAL, ACC_PRIVATE, ACC_PROTECTED, ACC_PUBLIC, ACC_STATIC, ACC_SUPER,
    ACC_TRANSIENT, OP_ACONST_NULL, OP_ALOAD_0, OP_ARETURN, OP_DUP, OP_NOP, OP_POP, OP_RETURN,
};
use crate::streams::{obj_field, prim_field, DescField, StreamWriter, SC_SERIALIZABLE};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- Random class files ----

const CLASS_NAMES: [&str; 8] = [
    "fixture/alpha/Widget",
    "fixture/alpha/Gauge",
    "fixture/beta/deep/Conduit",
    "fixture/beta/Relay",
    "fixture/gamma/Manifold$Inner",
    "fixture/gamma/Prism",
    "fixture/TopLevel",
    "fixture/delta/Turbine",
];

const FIELD_DESCS: [&str; 8] = [
    "I",
    "J",
    "Z",
    "D",
    "[B",
    "Ljava/lang/String;",
    "[Ljava/lang/Object;",
    "[[I",
];

const METHOD_DESCS: [&str; 6] = [
    "()V",
    "(I)V",
    "(Ljava/lang/Object;)Ljava/lang/Object;",
    "(JD)J",
    "([Ljava/lang/String;)V",
    "(Ljava/lang/String;IZ)Ljava/lang/Object;",
];

const IFACES: [&str; 3] = [
    "java/io/Serializable",
    "java/lang/Cloneable",
    "fixture/api/Port",
];

fn random_body(rng: &mut impl Rng) -> Vec<Ins> {
    let mut body = Vec::new();
    let len = rng.gen_range(0..8);
    for _ in 0..len {
        let ins = match rng.gen_range(0..9) {
            0 => Ins::Op(OP_NOP),
            1 => Ins::Op(OP_ACONST_NULL),
            2 => Ins::Op(OP_POP),
            3 => Ins::Op(OP_DUP),
            4 => Ins::Op(OP_ALOAD_0),
            5 => virt(
                CLASS_NAMES.choose(rng).unwrap(),
                "poke",
                METHOD_DESCS.choose(rng).unwrap(),
            ),
            6 => stat(
                CLASS_NAMES.choose(rng).unwrap(),
                "prod",
                METHOD_DESCS.choose(rng).unwrap(),
            ),
            7 => iface_call(
                IFACES.choose(rng).unwrap(),
                "signal",
                METHOD_DESCS.choose(rng).unwrap(),
            ),
            _ => match rng.gen_range(0..2) {
                0 => special(CLASS_NAMES.choose(rng).unwrap(), "<init>", "()V"),
                _ => indy("dispatch", METHOD_DESCS.choose(rng).unwrap()),
            },
        };
        body.push(ins);
    }
    body.push(Ins::Op(if rng.gen_bool(0.5) {
        OP_RETURN
    } else {
        OP_ARETURN
    }));
    body
}

/// Random well-formed class spec. Decoding its built bytes must reproduce
/// exactly the names, flags, descriptors, call sites, and constant fields
/// declared here.
pub fn random_class(rng: &mut impl Rng) -> ClassSpec {
    let mut spec = ClassSpec::new(CLASS_NAMES.choose(rng).unwrap());
    spec.major = rng.gen_range(45..=70);
    spec.access = ACC_PUBLIC | ACC_SUPER | if rng.gen_bool(0.3) { ACC_FINAL } else { 0 };
    if rng.gen_bool(0.2) {
        spec.super_name = None;
    } else if rng.gen_bool(0.3) {
        spec.super_name = Some(CLASS_NAMES.choose(rng).unwrap().to_string());
    }
    for iface in IFACES {
        if rng.gen_bool(0.4) {
            spec.interfaces.push(iface.to_string());
        }
    }
    if rng.gen_bool(0.5) {
        spec.serial_version_uid = Some(rng.gen());
    }
    let field_count = rng.gen_range(0..5);
    for i in 0..field_count {
        let vis = *[ACC_PUBLIC, ACC_PRIVATE, ACC_PROTECTED, 0].choose(rng).unwrap();
        let access = vis
            | if rng.gen_bool(0.3) { ACC_STATIC } else { 0 }
            | if rng.gen_bool(0.3) { ACC_TRANSIENT } else { 0 };
        spec.fields.push(FieldSpec {
            name: format!("field{i}"),
            descriptor: FIELD_DESCS.choose(rng).unwrap().to_string(),
            access,
        });
    }
    let method_count = rng.gen_range(0..4);
    for i in 0..method_count {
        if rng.gen_bool(0.2) {
            spec.methods.push(MethodSpec {
                name: format!("method{i}"),
                descriptor: METHOD_DESCS.choose(rng).unwrap().to_string(),
                access: ACC_PUBLIC | ACC_ABSTRACT,
                code: None,
            });
        } else {
            spec.methods.push(MethodSpec {
                name: format!("method{i}"),
                descriptor: METHOD_DESCS.choose(rng).unwrap().to_string(),
                access: ACC_PUBLIC,
                code: Some(random_body(rng)),
            });
        }
    }
    spec
}

// ---- Random streams ----

/// What the writer encoded, for comparison against a decode.
#[derive(Clone, Debug, Default)]
pub struct StreamFacts {
    pub root_count: usize,
    pub handles_taken: u32,
    /// Texts of the strings written (in order), excluding field type strings.
    pub string_texts: Vec<String>,
}

const STRING_POOL: [&str; 6] = ["axle", "beacon", "cairn", "delta", "ember", "fjord"];
const STREAM_CLASS_NAMES: [&str; 4] = [
    "fixture.stream.Carton",
    "fixture.stream.Ledger",
    "fixture.stream.Pylon",
    "fixture.stream.Quarry",
];

const PRIM_CODES: [u8; 8] = [b'B', b'C', b'D', b'F', b'I', b'J', b'S', b'Z'];

fn write_prim_value(w: &mut StreamWriter, rng: &mut impl Rng, code: u8) {
    match code {
        b'B' | b'Z' => w.u8(rng.gen()),
        b'C' | b'S' => w.u16(rng.gen()),
        b'I' | b'F' => w.u32(rng.gen()),
        b'J' | b'D' => w.u64(rng.gen()),
        _ => unreachable!("prim codes are fixed"),
    }
}

/// Random well-formed stream: a handful of top-level strings, objects,
/// primitive arrays, blocks, nulls, and back-references.
pub fn random_stream(rng: &mut impl Rng) -> (Vec<u8>, StreamFacts) {
    let mut w = StreamWriter::new();
    let mut facts = StreamFacts::default();
    let mut handles: Vec<u32> = Vec::new();

    let items = rng.gen_range(1..6);
    for _ in 0..items {
        facts.root_count += 1;
        match rng.gen_range(0..7) {
            0 => {
                let text = STRING_POOL.choose(rng).unwrap().to_string();
                handles.push(w.string(&text));
                facts.string_texts.push(text);
            }
            1 => {
                // Object with random primitive fields, values in declaration
                // order.
                let field_count = rng.gen_range(0..4);
                let fields: Vec<DescField> = (0..field_count)
                    .map(|i| prim_field(*PRIM_CODES.choose(rng).unwrap(), &format!("f{i}")))
                    .collect();
                let name = STREAM_CLASS_NAMES.choose(rng).unwrap();
                w.u8(crate::streams::TC_OBJECT);
                let desc = w.class_desc(name, rng.gen(), SC_SERIALIZABLE, &fields);
                let obj = w.take_handle();
                for field in &fields {
                    write_prim_value(&mut w, rng, field.type_code);
                }
                handles.push(desc);
                handles.push(obj);
            }
            2 => {
                // Object with one Object-typed field holding null or a string.
                let name = STREAM_CLASS_NAMES.choose(rng).unwrap();
                let fields = vec![obj_field("payload", "Ljava/lang/Object;")];
                w.u8(crate::streams::TC_OBJECT);
                let desc = w.class_desc(name, rng.gen(), SC_SERIALIZABLE, &fields);
                let obj = w.take_handle();
                if rng.gen_bool(0.5) {
                    w.null();
                } else {
                    let text = STRING_POOL.choose(rng).unwrap().to_string();
                    handles.push(w.string(&text));
                    facts.string_texts.push(text);
                }
                handles.push(desc);
                handles.push(obj);
            }
            3 => {
                // int[] with random members.
                w.u8(crate::streams::TC_ARRAY);
                let desc = w.class_desc("[I", rng.gen(), SC_SERIALIZABLE, &[]);
                let arr = w.take_handle();
                let len = rng.gen_range(0..6);
                w.i32(len);
                for _ in 0..len {
                    w.u32(rng.gen());
                }
                handles.push(desc);
                handles.push(arr);
            }
            4 => {
                let len = rng.gen_range(0..32);
                let data: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
                w.block(&data);
            }
            5 => w.null(),
            _ => {
                if let Some(&h) = handles.as_slice().choose(rng) {
                    w.reference(h);
                } else {
                    w.null();
                }
            }
        }
    }
    facts.handles_taken = w.handles_taken();
    (w.finish(), facts)
}

// ---- Mutators ----

pub fn truncated(bytes: &[u8], rng: &mut impl Rng) -> Vec<u8> {
    if bytes.is_empty() {
        return Vec::new();
    }
    let cut = rng.gen_range(0..bytes.len());
    bytes[..cut].to_vec()
}

pub fn bitflipped(bytes: &[u8], rng: &mut impl Rng) -> Vec<u8> {
    let mut out = bytes.to_vec();
    if out.is_empty() {
        return out;
    }
    let idx = rng.gen_range(0..out.len());
    let bit = 1u8 << rng.gen_range(0..8);
    out[idx] ^= bit;
    out
}

/// Purely random bytes with a plausible prefix half the time.
pub fn garbage(rng: &mut impl Rng, magic_prefix: &[u8]) -> Vec<u8> {
    let len = rng.gen_range(0..320);
    let mut out: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
    if rng.gen_bool(0.5) && out.len() >= magic_prefix.len() {
        out[..magic_prefix.len()].copy_from_slice(magic_prefix);
    }
    out
}
