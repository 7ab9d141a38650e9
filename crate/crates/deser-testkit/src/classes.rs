//! Minimal class-file assembler.
//!
//! Builds syntactically complete class files from declarative specs: constant
//! pool interning, field and method tables, `Code` attributes with real
//! bytecode, and `ConstantValue`-backed `serialVersionUID` constants. The
//! layout is written straight from the format definition so assembled bytes
//! serve as an independent oracle for any decoder.

use std::collections::BTreeMap;

// ---- Access flags ----

pub const ACC_PUBLIC: u16 = 0x0001;
pub const ACC_PRIVATE: u16 = 0x0002;
pub const ACC_PROTECTED: u16 = 0x0004;
pub const ACC_STATIC: u16 = 0x0008;
pub const ACC_FINAL: u16 = 0x0010;
pub const ACC_SUPER: u16 = 0x0020;
pub const ACC_TRANSIENT: u16 = 0x0080;
pub const ACC_INTERFACE: u16 = 0x0200;
pub const ACC_ABSTRACT: u16 = 0x0400;

// ---- Opcodes used by fixtures ----

pub const OP_NOP: u8 = 0x00;
pub const OP_ACONST_NULL: u8 = 0x01;
pub const OP_ICONST_0: u8 = 0x03;
pub const OP_POP: u8 = 0x57;
pub const OP_DUP: u8 = 0x59;
pub const OP_ALOAD_0: u8 = 0x2A;
pub const OP_ARETURN: u8 = 0xB0;
pub const OP_RETURN: u8 = 0xB1;

/// Modified UTF-8: NUL escapes to two bytes, supplementary characters become
/// surrogate pairs encoded as two three-byte units.
pub fn encode_mutf8(s: &str) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.len());
    let push_bmp = |out: &mut Vec<u8>, c: u32| match c {
        0 => out.extend_from_slice(&[0xC0, 0x80]),
        1..=0x7F => out.push(c as u8),
        0x80..=0x7FF => {
            out.push(0xC0 | (c >> 6) as u8);
            out.push(0x80 | (c & 0x3F) as u8);
        }
        _ => {
            out.push(0xE0 | (c >> 12) as u8);
            out.push(0x80 | ((c >> 6) & 0x3F) as u8);
            out.push(0x80 | (c & 0x3F) as u8);
        }
    };
    for ch in s.chars() {
        let c = ch as u32;
        if c <= 0xFFFF {
            push_bmp(&mut out, c);
        } else {
            let v = c - 0x1_0000;
            push_bmp(&mut out, 0xD800 + (v >> 10));
            push_bmp(&mut out, 0xDC00 + (v & 0x3FF));
        }
    }
    out
}

// ---- Instructions ----

/// One instruction in a fixture method body. `Raw` splices arbitrary bytes
/// for shapes the builder does not model (switches, wide forms, bad opcodes).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ins {
    /// Any zero-operand opcode.
    Op(u8),
    Virtual(String, String, String),
    Special(String, String, String),
    Static(String, String, String),
    Interface(String, String, String),
    /// `invokedynamic` names only a method and descriptor.
    Dynamic(String, String),
    Raw(Vec<u8>),
}

pub fn virt(owner: &str, name: &str, desc: &str) -> Ins {
    Ins::Virtual(owner.into(), name.into(), desc.into())
}

pub fn special(owner: &str, name: &str, desc: &str) -> Ins {
    Ins::Special(owner.into(), name.into(), desc.into())
}

pub fn stat(owner: &str, name: &str, desc: &str) -> Ins {
    Ins::Static(owner.into(), name.into(), desc.into())
}

pub fn iface_call(owner: &str, name: &str, desc: &str) -> Ins {
    Ins::Interface(owner.into(), name.into(), desc.into())
}

pub fn indy(name: &str, desc: &str) -> Ins {
    Ins::Dynamic(name.into(), desc.into())
}

impl Ins {
    fn encoded_len(&self) -> usize {
        match self {
            Ins::Op(_) => 1,
            Ins::Virtual(..) | Ins::Special(..) | Ins::Static(..) => 3,
            Ins::Interface(..) | Ins::Dynamic(..) => 5,
            Ins::Raw(bytes) => bytes.len(),
        }
    }
}

/// A call the assembled body is expected to surface, with the bytecode
/// offset its instruction lands at. Offsets are recomputed here from
/// instruction lengths alone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpectedCall {
    pub kind: &'static str,
    pub owner: String,
    pub method_name: String,
    pub descriptor: String,
    pub offset: u32,
}

pub fn expected_calls(code: &[Ins]) -> Vec<ExpectedCall> {
    let mut out = Vec::new();
    let mut offset = 0usize;
    for ins in code {
        let expect = match ins {
            Ins::Virtual(o, n, d) => Some(("virtual", o.clone(), n.clone(), d.clone())),
            Ins::Special(o, n, d) => Some(("special", o.clone(), n.clone(), d.clone())),
            Ins::Static(o, n, d) => Some(("static", o.clone(), n.clone(), d.clone())),
            Ins::Interface(o, n, d) => Some(("interface", o.clone(), n.clone(), d.clone())),
            Ins::Dynamic(n, d) => Some(("dynamic", "<dynamic>".to_string(), n.clone(), d.clone())),
            _ => None,
        };
        if let Some((kind, owner, method_name, descriptor)) = expect {
            out.push(ExpectedCall {
                kind,
                owner,
                method_name,
                descriptor,
                offset: offset as u32,
            });
        }
        offset += ins.encoded_len();
    }
    out
}

/// Argument slot count of a method descriptor (long and double take two),
/// used for the `invokeinterface` count byte.
fn arg_slots(descriptor: &str) -> u8 {
    let inner = descriptor
        .strip_prefix('(')
        .and_then(|s| s.split(')').next())
        .unwrap_or("");
    let mut slots = 0u8;
    let bytes = inner.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        while i < bytes.len() && bytes[i] == b'[' {
            i += 1;
        }
        if i >= bytes.len() {
            break;
        }
        match bytes[i] {
            b'J' | b'D' => slots += 2,
            b'L' => {
                slots += 1;
                while i < bytes.len() && bytes[i] != b';' {
                    i += 1;
                }
            }
            _ => slots += 1,
        }
        i += 1;
    }
    slots
}

// ---- Specs ----

#[derive(Clone, Debug)]
pub struct FieldSpec {
    pub name: String,
    pub descriptor: String,
    pub access: u16,
}

#[derive(Clone, Debug)]
pub struct MethodSpec {
    pub name: String,
    pub descriptor: String,
    pub access: u16,
    /// `None` assembles a code-less (abstract-style) method.
    pub code: Option<Vec<Ins>>,
}

#[derive(Clone, Debug)]
pub struct ClassSpec {
    /// Internal (slash) binary name.
    pub name: String,
    pub access: u16,
    pub major: u16,
    /// `None` writes super index 0 (the `java/lang/Object` root case).
    pub super_name: Option<String>,
    pub interfaces: Vec<String>,
    pub fields: Vec<FieldSpec>,
    pub methods: Vec<MethodSpec>,
    /// Emitted as a `private static final long serialVersionUID` constant.
    pub serial_version_uid: Option<i64>,
}

impl ClassSpec {
    pub fn new(name: &str) -> ClassSpec {
        ClassSpec {
            name: name.into(),
            access: ACC_PUBLIC | ACC_SUPER,
            major: 52,
            super_name: Some("java/lang/Object".into()),
            interfaces: Vec::new(),
            fields: Vec::new(),
            methods: Vec::new(),
            serial_version_uid: None,
        }
    }

    pub fn iface(name: &str) -> ClassSpec {
        let mut spec = ClassSpec::new(name);
        spec.access = ACC_PUBLIC | ACC_INTERFACE | ACC_ABSTRACT;
        spec
    }

    pub fn access(mut self, flags: u16) -> Self {
        self.access = flags;
        self
    }

    pub fn major(mut self, major: u16) -> Self {
        self.major = major;
        self
    }

    pub fn extends(mut self, super_name: &str) -> Self {
        self.super_name = Some(super_name.into());
        self
    }

    pub fn implements(mut self, iface: &str) -> Self {
        self.interfaces.push(iface.into());
        self
    }

    pub fn serializable(self) -> Self {
        self.implements("java/io/Serializable")
    }

    pub fn suid(mut self, value: i64) -> Self {
        self.serial_version_uid = Some(value);
        self
    }

    pub fn field(mut self, name: &str, descriptor: &str, access: u16) -> Self {
        self.fields.push(FieldSpec {
            name: name.into(),
            descriptor: descriptor.into(),
            access,
        });
        self
    }

    /// Public concrete method with the given body.
    pub fn method(self, name: &str, descriptor: &str, code: Vec<Ins>) -> Self {
        self.method_acc(name, descriptor, ACC_PUBLIC, Some(code))
    }

    /// Private concrete method (deserialization hooks are usually private).
    pub fn private_method(self, name: &str, descriptor: &str, code: Vec<Ins>) -> Self {
        self.method_acc(name, descriptor, ACC_PRIVATE, Some(code))
    }

    pub fn method_acc(
        mut self,
        name: &str,
        descriptor: &str,
        access: u16,
        code: Option<Vec<Ins>>,
    ) -> Self {
        self.methods.push(MethodSpec {
            name: name.into(),
            descriptor: descriptor.into(),
            access,
            code,
        });
        self
    }

    /// Public abstract method (no `Code` attribute).
    pub fn abstract_method(mut self, name: &str, descriptor: &str) -> Self {
        self.methods.push(MethodSpec {
            name: name.into(),
            descriptor: descriptor.into(),
            access: ACC_PUBLIC | ACC_ABSTRACT,
            code: None,
        });
        self
    }

    pub fn build(&self) -> Vec<u8> {
        assemble(self)
    }
}

// ---- Constant pool ----

#[derive(Default)]
struct Pool {
    bytes: Vec<u8>,
    /// Next free index; the pool count field is this value.
    next: u16,
    utf8: BTreeMap<String, u16>,
    classes: BTreeMap<String, u16>,
    nats: BTreeMap<(String, String), u16>,
    members: BTreeMap<(u8, String, String, String), u16>,
    longs: BTreeMap<i64, u16>,
    indys: BTreeMap<(String, String), u16>,
}

impl Pool {
    fn new() -> Pool {
        Pool {
            next: 1,
            ..Pool::default()
        }
    }

    fn utf8(&mut self, s: &str) -> u16 {
        if let Some(&idx) = self.utf8.get(s) {
            return idx;
        }
        let encoded = encode_mutf8(s);
        self.bytes.push(1);
        self.bytes
            .extend_from_slice(&(encoded.len() as u16).to_be_bytes());
        self.bytes.extend_from_slice(&encoded);
        let idx = self.next;
        self.next += 1;
        self.utf8.insert(s.to_string(), idx);
        idx
    }

    fn class(&mut self, name: &str) -> u16 {
        if let Some(&idx) = self.classes.get(name) {
            return idx;
        }
        let name_idx = self.utf8(name);
        self.bytes.push(7);
        self.bytes.extend_from_slice(&name_idx.to_be_bytes());
        let idx = self.next;
        self.next += 1;
        self.classes.insert(name.to_string(), idx);
        idx
    }

    fn nat(&mut self, name: &str, descriptor: &str) -> u16 {
        let key = (name.to_string(), descriptor.to_string());
        if let Some(&idx) = self.nats.get(&key) {
            return idx;
        }
        let name_idx = self.utf8(name);
        let desc_idx = self.utf8(descriptor);
        self.bytes.push(12);
        self.bytes.extend_from_slice(&name_idx.to_be_bytes());
        self.bytes.extend_from_slice(&desc_idx.to_be_bytes());
        let idx = self.next;
        self.next += 1;
        self.nats.insert(key, idx);
        idx
    }

    /// Fieldref (9), Methodref (10), or InterfaceMethodref (11).
    fn member(&mut self, tag: u8, owner: &str, name: &str, descriptor: &str) -> u16 {
        let key = (tag, owner.to_string(), name.to_string(), descriptor.to_string());
        if let Some(&idx) = self.members.get(&key) {
            return idx;
        }
        let class_idx = self.class(owner);
        let nat_idx = self.nat(name, descriptor);
        self.bytes.push(tag);
        self.bytes.extend_from_slice(&class_idx.to_be_bytes());
        self.bytes.extend_from_slice(&nat_idx.to_be_bytes());
        let idx = self.next;
        self.next += 1;
        self.members.insert(key, idx);
        idx
    }

    fn long(&mut self, value: i64) -> u16 {
        if let Some(&idx) = self.longs.get(&value) {
            return idx;
        }
        self.bytes.push(5);
        self.bytes.extend_from_slice(&value.to_be_bytes());
        let idx = self.next;
        // Longs occupy two pool slots.
        self.next += 2;
        self.longs.insert(value, idx);
        idx
    }

    fn indy(&mut self, name: &str, descriptor: &str) -> u16 {
        let key = (name.to_string(), descriptor.to_string());
        if let Some(&idx) = self.indys.get(&key) {
            return idx;
        }
        let nat_idx = self.nat(name, descriptor);
        self.bytes.push(18);
        // Bootstrap method attribute index; fixtures do not carry the table.
        self.bytes.extend_from_slice(&0u16.to_be_bytes());
        self.bytes.extend_from_slice(&nat_idx.to_be_bytes());
        let idx = self.next;
        self.next += 1;
        self.indys.insert(key, idx);
        idx
    }
}

fn assemble_code(pool: &mut Pool, code: &[Ins]) -> Vec<u8> {
    let mut out = Vec::new();
    for ins in code {
        match ins {
            Ins::Op(op) => out.push(*op),
            Ins::Virtual(owner, name, desc) => {
                let idx = pool.member(10, owner, name, desc);
                out.push(0xB6);
                out.extend_from_slice(&idx.to_be_bytes());
            }
            Ins::Special(owner, name, desc) => {
                let idx = pool.member(10, owner, name, desc);
                out.push(0xB7);
                out.extend_from_slice(&idx.to_be_bytes());
            }
            Ins::Static(owner, name, desc) => {
                let idx = pool.member(10, owner, name, desc);
                out.push(0xB8);
                out.extend_from_slice(&idx.to_be_bytes());
            }
            Ins::Interface(owner, name, desc) => {
                let idx = pool.member(11, owner, name, desc);
                out.push(0xB9);
                out.extend_from_slice(&idx.to_be_bytes());
                out.push(arg_slots(desc) + 1);
                out.push(0);
            }
            Ins::Dynamic(name, desc) => {
                let idx = pool.indy(name, desc);
                out.push(0xBA);
                out.extend_from_slice(&idx.to_be_bytes());
                out.push(0);
                out.push(0);
            }
            Ins::Raw(bytes) => out.extend_from_slice(bytes),
        }
    }
    out
}

fn assemble(spec: &ClassSpec) -> Vec<u8> {
    let mut pool = Pool::new();

    // Interning happens while laying out bodies; the pool is serialized once
    // every reference is known.
    let this_idx = pool.class(&spec.name);
    let super_idx = match &spec.super_name {
        Some(name) => pool.class(name),
        None => 0,
    };
    let iface_idxs: Vec<u16> = spec.interfaces.iter().map(|i| pool.class(i)).collect();

    // field_info entries.
    let mut field_bytes = Vec::new();
    let mut field_count = spec.fields.len() as u16;
    for field in &spec.fields {
        let name_idx = pool.utf8(&field.name);
        let desc_idx = pool.utf8(&field.descriptor);
        field_bytes.extend_from_slice(&field.access.to_be_bytes());
        field_bytes.extend_from_slice(&name_idx.to_be_bytes());
        field_bytes.extend_from_slice(&desc_idx.to_be_bytes());
        field_bytes.extend_from_slice(&0u16.to_be_bytes());
    }
    if let Some(suid) = spec.serial_version_uid {
        field_count += 1;
        let name_idx = pool.utf8("serialVersionUID");
        let desc_idx = pool.utf8("J");
        let attr_name = pool.utf8("ConstantValue");
        let value_idx = pool.long(suid);
        let access = ACC_PRIVATE | ACC_STATIC | ACC_FINAL;
        field_bytes.extend_from_slice(&access.to_be_bytes());
        field_bytes.extend_from_slice(&name_idx.to_be_bytes());
        field_bytes.extend_from_slice(&desc_idx.to_be_bytes());
        field_bytes.extend_from_slice(&1u16.to_be_bytes());
        field_bytes.extend_from_slice(&attr_name.to_be_bytes());
        field_bytes.extend_from_slice(&2u32.to_be_bytes());
        field_bytes.extend_from_slice(&value_idx.to_be_bytes());
    }

    // method_info entries.
    let mut method_bytes = Vec::new();
    for method in &spec.methods {
        let name_idx = pool.utf8(&method.name);
        let desc_idx = pool.utf8(&method.descriptor);
        method_bytes.extend_from_slice(&method.access.to_be_bytes());
        method_bytes.extend_from_slice(&name_idx.to_be_bytes());
        method_bytes.extend_from_slice(&desc_idx.to_be_bytes());
        match &method.code {
            None => method_bytes.extend_from_slice(&0u16.to_be_bytes()),
            Some(code) => {
                let attr_name = pool.utf8("Code");
                let body = assemble_code(&mut pool, code);
                method_bytes.extend_from_slice(&1u16.to_be_bytes());
                method_bytes.extend_from_slice(&attr_name.to_be_bytes());
                // max_stack, max_locals, code_length, code, exceptions, attrs.
                let attr_len = 2 + 2 + 4 + body.len() as u32 + 2 + 2;
                method_bytes.extend_from_slice(&attr_len.to_be_bytes());
                method_bytes.extend_from_slice(&8u16.to_be_bytes());
                method_bytes.extend_from_slice(&8u16.to_be_bytes());
                method_bytes.extend_from_slice(&(body.len() as u32).to_be_bytes());
                method_bytes.extend_from_slice(&body);
                method_bytes.extend_from_slice(&0u16.to_be_bytes());
                method_bytes.extend_from_slice(&0u16.to_be_bytes());
            }
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(&0xCAFE_BABEu32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&spec.major.to_be_bytes());
    out.extend_from_slice(&pool.next.to_be_bytes());
    out.extend_from_slice(&pool.bytes);
    out.extend_from_slice(&spec.access.to_be_bytes());
    out.extend_from_slice(&this_idx.to_be_bytes());
    out.extend_from_slice(&super_idx.to_be_bytes());
    out.extend_from_slice(&(iface_idxs.len() as u16).to_be_bytes());
    for idx in iface_idxs {
        out.extend_from_slice(&idx.to_be_bytes());
    }
    out.extend_from_slice(&field_count.to_be_bytes());
    out.extend_from_slice(&field_bytes);
    out.extend_from_slice(&(spec.methods.len() as u16).to_be_bytes());
    out.extend_from_slice(&method_bytes);
    // No class-level attributes.
    out.extend_from_slice(&0u16.to_be_bytes());
    out
}
