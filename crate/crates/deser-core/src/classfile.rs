//! Class-file parsing and the classpath index.
//!
//! The parser reads a single `.class` byte image into a [`ClassModel`]: names,
//! hierarchy, fields, declared methods, and every call site found by walking
//! bytecode. It deliberately skips what a static deserialization audit never
//! needs (stack maps, generic signatures, annotations), but it walks the parts
//! it does read strictly so that hostile input fails with a typed error
//! instead of a panic or a silently wrong model.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

pub const ACC_PUBLIC: u16 = 0x0001;
pub const ACC_PRIVATE: u16 = 0x0002;
pub const ACC_PROTECTED: u16 = 0x0004;
pub const ACC_STATIC: u16 = 0x0008;
pub const ACC_FINAL: u16 = 0x0010;
pub const ACC_TRANSIENT: u16 = 0x0080;
pub const ACC_INTERFACE: u16 = 0x0200;
pub const ACC_ABSTRACT: u16 = 0x0400;

const MAGIC: u32 = 0xCAFE_BABE;
/// Oldest class-file major version ever emitted (JDK 1.0.2).
const MIN_MAJOR: u16 = 45;

/// How a call site dispatches to its target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum InvokeKind {
    Virtual,
    Special,
    Static,
    Interface,
    Dynamic,
}

impl InvokeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InvokeKind::Virtual => "virtual",
            InvokeKind::Special => "special",
            InvokeKind::Static => "static",
            InvokeKind::Interface => "interface",
            InvokeKind::Dynamic => "dynamic",
        }
    }
}

/// One resolved invoke instruction inside a method body.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CallSite {
    pub kind: InvokeKind,
    /// Internal (slash-separated) name of the referenced owner. Call sites
    /// from `invokedynamic` carry the placeholder owner `<dynamic>` because
    /// the constant pool names no receiver class for them.
    pub owner: String,
    pub method_name: String,
    pub descriptor: String,
    pub bytecode_offset: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldModel {
    pub name: String,
    pub descriptor: String,
    pub access_flags: u16,
}

impl FieldModel {
    pub fn is_static(&self) -> bool {
        self.access_flags & ACC_STATIC != 0
    }

    pub fn is_transient(&self) -> bool {
        self.access_flags & ACC_TRANSIENT != 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MethodModel {
    pub name: String,
    pub descriptor: String,
    pub access_flags: u16,
    /// Whether the method carried a Code attribute. Abstract and native
    /// methods do not.
    pub has_code: bool,
    pub call_sites: Vec<CallSite>,
}

/// Parsed view of one class file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassModel {
    /// Internal binary name, e.g. `java/util/HashMap`.
    pub binary_name: String,
    pub access_flags: u16,
    pub major_version: u16,
    /// `None` only for `java/lang/Object`.
    pub super_name: Option<String>,
    pub interfaces: Vec<String>,
    pub fields: Vec<FieldModel>,
    pub methods: Vec<MethodModel>,
    /// Value of an explicit `static final long serialVersionUID` constant,
    /// when the class declares one.
    pub serial_version_uid: Option<i64>,
}

impl ClassModel {
    pub fn is_interface(&self) -> bool {
        self.access_flags & ACC_INTERFACE != 0
    }

    pub fn method(&self, name: &str, descriptor: &str) -> Option<&MethodModel> {
        self.methods
            .iter()
            .find(|m| m.name == name && m.descriptor == descriptor)
    }

    pub fn methods_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a MethodModel> {
        self.methods.iter().filter(move |m| m.name == name)
    }
}

/// Typed failures for hostile or truncated class files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassParseError {
    BadMagic { found: u32 },
    UnsupportedVersion { major: u16 },
    TruncatedInput { offset: usize },
    MalformedPool { index: u16, detail: &'static str },
    BadDescriptor { descriptor: String },
    BadOpcode { opcode: u8, offset: usize },
}

impl fmt::Display for ClassParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassParseError::BadMagic { found } => {
                write!(f, "bad class file magic 0x{found:08X}")
            }
            ClassParseError::UnsupportedVersion { major } => {
                write!(f, "unsupported class file major version {major}")
            }
            ClassParseError::TruncatedInput { offset } => {
                write!(f, "class file truncated at byte {offset}")
            }
            ClassParseError::MalformedPool { index, detail } => {
                write!(f, "malformed constant pool entry #{index}: {detail}")
            }
            ClassParseError::BadDescriptor { descriptor } => {
                write!(f, "malformed descriptor {descriptor:?}")
            }
            ClassParseError::BadOpcode { opcode, offset } => {
                write!(f, "undefined or malformed opcode 0x{opcode:02X} at code offset {offset}")
            }
        }
    }
}

impl core::error::Error for ClassParseError {}

// ---- Constant pool ----

/// Payloads are stored even where the audit never reads them back; the pool
/// must be decoded slot-exactly anyway, and keeping the values makes pool
/// dumps under a debugger meaningful.
#[derive(Clone, Debug)]
#[allow(dead_code)]
enum PoolEntry {
    Utf8(String),
    Integer(i32),
    Float(u32),
    Long(i64),
    Double(u64),
    Class(u16),
    Str(u16),
    FieldRef(u16, u16),
    MethodRef(u16, u16),
    InterfaceMethodRef(u16, u16),
    NameAndType(u16, u16),
    MethodHandle(u8, u16),
    MethodType(u16),
    Dynamic(u16, u16),
    InvokeDynamic(u16, u16),
    Module(u16),
    Package(u16),
    /// Phantom second slot occupied by a Long or Double entry.
    Wide,
}

struct Pool {
    entries: Vec<Option<PoolEntry>>,
}

impl Pool {
    fn get(&self, index: u16) -> Result<&PoolEntry, ClassParseError> {
        self.entries
            .get(index as usize)
            .and_then(|e| e.as_ref())
            .ok_or(ClassParseError::MalformedPool {
                index,
                detail: "index out of range or unusable slot",
            })
    }

    fn utf8(&self, index: u16) -> Result<&str, ClassParseError> {
        match self.get(index)? {
            PoolEntry::Utf8(s) => Ok(s),
            _ => Err(ClassParseError::MalformedPool {
                index,
                detail: "expected Utf8 entry",
            }),
        }
    }

    fn class_name(&self, index: u16) -> Result<&str, ClassParseError> {
        match self.get(index)? {
            PoolEntry::Class(name_idx) => self.utf8(*name_idx),
            _ => Err(ClassParseError::MalformedPool {
                index,
                detail: "expected Class entry",
            }),
        }
    }

    fn name_and_type(&self, index: u16) -> Result<(&str, &str), ClassParseError> {
        match self.get(index)? {
            PoolEntry::NameAndType(name_idx, desc_idx) => {
                Ok((self.utf8(*name_idx)?, self.utf8(*desc_idx)?))
            }
            _ => Err(ClassParseError::MalformedPool {
                index,
                detail: "expected NameAndType entry",
            }),
        }
    }

    /// Owner/name/descriptor of a Methodref or InterfaceMethodref.
    fn method_ref(&self, index: u16) -> Result<(&str, &str, &str), ClassParseError> {
        match self.get(index)? {
            PoolEntry::MethodRef(class_idx, nat_idx)
            | PoolEntry::InterfaceMethodRef(class_idx, nat_idx) => {
                let owner = self.class_name(*class_idx)?;
                let (name, desc) = self.name_and_type(*nat_idx)?;
                Ok((owner, name, desc))
            }
            _ => Err(ClassParseError::MalformedPool {
                index,
                detail: "expected Methodref or InterfaceMethodref entry",
            }),
        }
    }
}

// ---- Byte reader ----

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn truncated(&self) -> ClassParseError {
        ClassParseError::TruncatedInput { offset: self.pos }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ClassParseError> {
        let end = self.pos.checked_add(n).ok_or(self.truncated())?;
        if end > self.bytes.len() {
            return Err(self.truncated());
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, ClassParseError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ClassParseError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, ClassParseError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Decodes the modified UTF-8 used inside class files. Rejects raw NUL bytes
/// (the format requires the two-byte form) and unpaired surrogate damage.
fn decode_mutf8(bytes: &[u8]) -> Option<String> {
    let mut units: Vec<u16> = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        let a = bytes[i];
        if (1..0x80).contains(&a) {
            units.push(a as u16);
            i += 1;
        } else if a & 0xE0 == 0xC0 {
            let b = *bytes.get(i + 1)?;
            if b & 0xC0 != 0x80 {
                return None;
            }
            units.push(((a as u16 & 0x1F) << 6) | (b as u16 & 0x3F));
            i += 2;
        } else if a & 0xF0 == 0xE0 {
            let b = *bytes.get(i + 1)?;
            let c = *bytes.get(i + 2)?;
            if b & 0xC0 != 0x80 || c & 0xC0 != 0x80 {
                return None;
            }
            units.push(((a as u16 & 0x0F) << 12) | ((b as u16 & 0x3F) << 6) | (c as u16 & 0x3F));
            i += 3;
        } else {
            return None;
        }
    }
    String::from_utf16(&units).ok()
}

// ---- Descriptor grammar ----

/// Consumes one field type starting at `pos`; returns the position after it.
fn field_type_end(s: &[u8], pos: usize) -> Option<usize> {
    let mut p = pos;
    while s.get(p) == Some(&b'[') {
        p += 1;
    }
    match s.get(p)? {
        b'B' | b'C' | b'D' | b'F' | b'I' | b'J' | b'S' | b'Z' => Some(p + 1),
        b'L' => {
            let semi = s[p + 1..].iter().position(|&c| c == b';')?;
            if semi == 0 {
                return None;
            }
            Some(p + 1 + semi + 1)
        }
        _ => None,
    }
}

pub fn valid_field_descriptor(desc: &str) -> bool {
    let b = desc.as_bytes();
    field_type_end(b, 0) == Some(b.len())
}

pub fn valid_method_descriptor(desc: &str) -> bool {
    let b = desc.as_bytes();
    if b.first() != Some(&b'(') {
        return false;
    }
    let mut pos = 1;
    while b.get(pos) != Some(&b')') {
        match field_type_end(b, pos) {
            Some(next) => pos = next,
            None => return false,
        }
    }
    pos += 1; // consume ')'
    if b.get(pos) == Some(&b'V') {
        pos + 1 == b.len()
    } else {
        field_type_end(b, pos) == Some(b.len())
    }
}

// ---- Bytecode walk ----

/// Operand byte count per opcode; `-1` marks undefined opcodes and `-2` the
/// variable-length instructions handled out of line.
const OPERAND_LEN: [i8; 256] = build_operand_table();

const fn build_operand_table() -> [i8; 256] {
    let mut t = [-1i8; 256];
    let mut op = 0x00;
    while op <= 0x0f {
        t[op] = 0; // nop, const loads
        op += 1;
    }
    t[0x10] = 1; // bipush
    t[0x11] = 2; // sipush
    t[0x12] = 1; // ldc
    t[0x13] = 2; // ldc_w
    t[0x14] = 2; // ldc2_w
    op = 0x15;
    while op <= 0x19 {
        t[op] = 1; // iload..aload
        op += 1;
    }
    op = 0x1a;
    while op <= 0x35 {
        t[op] = 0; // iload_0..saload
        op += 1;
    }
    op = 0x36;
    while op <= 0x3a {
        t[op] = 1; // istore..astore
        op += 1;
    }
    op = 0x3b;
    while op <= 0x83 {
        t[op] = 0; // istore_0..lxor
        op += 1;
    }
    t[0x84] = 2; // iinc
    op = 0x85;
    while op <= 0x98 {
        t[op] = 0; // conversions, comparisons
        op += 1;
    }
    op = 0x99;
    while op <= 0xa8 {
        t[op] = 2; // if*, goto, jsr
        op += 1;
    }
    t[0xa9] = 1; // ret
    t[0xaa] = -2; // tableswitch
    t[0xab] = -2; // lookupswitch
    op = 0xac;
    while op <= 0xb1 {
        t[op] = 0; // returns
        op += 1;
    }
    t[0xb2] = 2; // getstatic
    t[0xb3] = 2; // putstatic
    t[0xb4] = 2; // getfield
    t[0xb5] = 2; // putfield
    t[0xb6] = 2; // invokevirtual
    t[0xb7] = 2; // invokespecial
    t[0xb8] = 2; // invokestatic
    t[0xb9] = 4; // invokeinterface
    t[0xba] = 4; // invokedynamic
    t[0xbb] = 2; // new
    t[0xbc] = 1; // newarray
    t[0xbd] = 2; // anewarray
    t[0xbe] = 0; // arraylength
    t[0xbf] = 0; // athrow
    t[0xc0] = 2; // checkcast
    t[0xc1] = 2; // instanceof
    t[0xc2] = 0; // monitorenter
    t[0xc3] = 0; // monitorexit
    t[0xc4] = -2; // wide
    t[0xc5] = 3; // multianewarray
    t[0xc6] = 2; // ifnull
    t[0xc7] = 2; // ifnonnull
    t[0xc8] = 4; // goto_w
    t[0xc9] = 4; // jsr_w
    t
}

fn read_u16_at(code: &[u8], at: usize, op_offset: usize, opcode: u8) -> Result<u16, ClassParseError> {
    if at + 2 > code.len() {
        return Err(ClassParseError::BadOpcode { opcode, offset: op_offset });
    }
    Ok(u16::from_be_bytes([code[at], code[at + 1]]))
}

fn read_i32_at(code: &[u8], at: usize, op_offset: usize, opcode: u8) -> Result<i32, ClassParseError> {
    if at + 4 > code.len() {
        return Err(ClassParseError::BadOpcode { opcode, offset: op_offset });
    }
    Ok(i32::from_be_bytes([code[at], code[at + 1], code[at + 2], code[at + 3]]))
}

/// Walks a Code attribute body, collecting resolved call sites. Bounds and
/// alignment are validated so that a corrupt method body cannot push the walk
/// out of the array or into an infinite loop.
fn walk_code(code: &[u8], pool: &Pool, out: &mut Vec<CallSite>) -> Result<(), ClassParseError> {
    let mut i = 0usize;
    while i < code.len() {
        let opcode = code[i];
        match opcode {
            // invokevirtual / invokespecial / invokestatic
            0xb6 | 0xb7 | 0xb8 => {
                let idx = read_u16_at(code, i + 1, i, opcode)?;
                let (owner, name, desc) = pool.method_ref(idx)?;
                out.push(CallSite {
                    kind: match opcode {
                        0xb6 => InvokeKind::Virtual,
                        0xb7 => InvokeKind::Special,
                        _ => InvokeKind::Static,
                    },
                    owner: owner.to_owned(),
                    method_name: name.to_owned(),
                    descriptor: desc.to_owned(),
                    bytecode_offset: i as u32,
                });
                i += 3;
            }
            // invokeinterface: index u16, count u8, zero u8
            0xb9 => {
                let idx = read_u16_at(code, i + 1, i, opcode)?;
                if i + 5 > code.len() {
                    return Err(ClassParseError::BadOpcode { opcode, offset: i });
                }
                let (owner, name, desc) = pool.method_ref(idx)?;
                out.push(CallSite {
                    kind: InvokeKind::Interface,
                    owner: owner.to_owned(),
                    method_name: name.to_owned(),
                    descriptor: desc.to_owned(),
                    bytecode_offset: i as u32,
                });
                i += 5;
            }
            // invokedynamic: index u16, two zero bytes
            0xba => {
                let idx = read_u16_at(code, i + 1, i, opcode)?;
                if i + 5 > code.len() {
                    return Err(ClassParseError::BadOpcode { opcode, offset: i });
                }
                let (name, desc) = match pool.get(idx)? {
                    PoolEntry::InvokeDynamic(_, nat_idx) | PoolEntry::Dynamic(_, nat_idx) => {
                        pool.name_and_type(*nat_idx)?
                    }
                    _ => {
                        return Err(ClassParseError::MalformedPool {
                            index: idx,
                            detail: "expected InvokeDynamic entry",
                        })
                    }
                };
                out.push(CallSite {
                    kind: InvokeKind::Dynamic,
                    owner: String::from("<dynamic>"),
                    method_name: name.to_owned(),
                    descriptor: desc.to_owned(),
                    bytecode_offset: i as u32,
                });
                i += 5;
            }
            // tableswitch: 0-3 pad bytes to a 4-byte boundary, then
            // default/low/high and (high - low + 1) jump offsets.
            0xaa => {
                let mut p = i + 1;
                p += (4 - (p % 4)) % 4;
                let _default = read_i32_at(code, p, i, opcode)?;
                let low = read_i32_at(code, p + 4, i, opcode)?;
                let high = read_i32_at(code, p + 8, i, opcode)?;
                if low > high {
                    return Err(ClassParseError::BadOpcode { opcode, offset: i });
                }
                let count = (high as i64 - low as i64 + 1) as u64;
                let jumps_end = (p as u64 + 12).checked_add(count * 4);
                match jumps_end {
                    Some(end) if end <= code.len() as u64 => i = end as usize,
                    _ => return Err(ClassParseError::BadOpcode { opcode, offset: i }),
                }
            }
            // lookupswitch: pad, default, npairs, then npairs (match, offset) pairs.
            0xab => {
                let mut p = i + 1;
                p += (4 - (p % 4)) % 4;
                let _default = read_i32_at(code, p, i, opcode)?;
                let npairs = read_i32_at(code, p + 4, i, opcode)?;
                if npairs < 0 {
                    return Err(ClassParseError::BadOpcode { opcode, offset: i });
                }
                let pairs_end = (p as u64 + 8).checked_add(npairs as u64 * 8);
                match pairs_end {
                    Some(end) if end <= code.len() as u64 => i = end as usize,
                    _ => return Err(ClassParseError::BadOpcode { opcode, offset: i }),
                }
            }
            // wide: iinc takes four extra operand bytes, the widened
            // load/store/ret forms take two.
            0xc4 => {
                let modified = *code.get(i + 1).ok_or(ClassParseError::BadOpcode {
                    opcode,
                    offset: i,
                })?;
                let extra = match modified {
                    0x84 => 4,
                    0x15..=0x19 | 0x36..=0x3a | 0xa9 => 2,
                    _ => return Err(ClassParseError::BadOpcode { opcode: modified, offset: i }),
                };
                if i + 2 + extra > code.len() {
                    return Err(ClassParseError::BadOpcode { opcode, offset: i });
                }
                i += 2 + extra;
            }
            _ => match OPERAND_LEN[opcode as usize] {
                -1 | -2 => return Err(ClassParseError::BadOpcode { opcode, offset: i }),
                len => {
                    let next = i + 1 + len as usize;
                    if next > code.len() {
                        return Err(ClassParseError::BadOpcode { opcode, offset: i });
                    }
                    i = next;
                }
            },
        }
    }
    Ok(())
}

// ---- Class file parser ----

fn read_pool(r: &mut Reader<'_>) -> Result<Pool, ClassParseError> {
    let count = r.u16()?;
    let mut entries: Vec<Option<PoolEntry>> = Vec::with_capacity(count as usize);
    entries.push(None); // slot 0 is never addressable
    let mut index = 1u16;
    while index < count {
        let tag = r.u8()?;
        let entry = match tag {
            1 => {
                let len = r.u16()? as usize;
                let raw = r.take(len)?;
                let s = decode_mutf8(raw).ok_or(ClassParseError::MalformedPool {
                    index,
                    detail: "invalid modified UTF-8",
                })?;
                PoolEntry::Utf8(s)
            }
            3 => PoolEntry::Integer(r.u32()? as i32),
            4 => PoolEntry::Float(r.u32()?),
            5 => {
                let hi = r.u32()? as u64;
                let lo = r.u32()? as u64;
                PoolEntry::Long(((hi << 32) | lo) as i64)
            }
            6 => {
                let hi = r.u32()? as u64;
                let lo = r.u32()? as u64;
                PoolEntry::Double((hi << 32) | lo)
            }
            7 => PoolEntry::Class(r.u16()?),
            8 => PoolEntry::Str(r.u16()?),
            9 => PoolEntry::FieldRef(r.u16()?, r.u16()?),
            10 => PoolEntry::MethodRef(r.u16()?, r.u16()?),
            11 => PoolEntry::InterfaceMethodRef(r.u16()?, r.u16()?),
            12 => PoolEntry::NameAndType(r.u16()?, r.u16()?),
            15 => PoolEntry::MethodHandle(r.u8()?, r.u16()?),
            16 => PoolEntry::MethodType(r.u16()?),
            17 => PoolEntry::Dynamic(r.u16()?, r.u16()?),
            18 => PoolEntry::InvokeDynamic(r.u16()?, r.u16()?),
            19 => PoolEntry::Module(r.u16()?),
            20 => PoolEntry::Package(r.u16()?),
            _ => {
                return Err(ClassParseError::MalformedPool {
                    index,
                    detail: "unknown constant tag",
                })
            }
        };
        let is_wide = matches!(entry, PoolEntry::Long(_) | PoolEntry::Double(_));
        entries.push(Some(entry));
        index += 1;
        if is_wide {
            // Longs and doubles occupy two pool slots; the second is unusable.
            if index < count {
                entries.push(Some(PoolEntry::Wide));
            }
            index += 1;
        }
    }
    Ok(Pool { entries })
}

struct RawAttribute<'a> {
    name_index: u16,
    data: &'a [u8],
}

fn read_attributes<'a>(r: &mut Reader<'a>) -> Result<Vec<RawAttribute<'a>>, ClassParseError> {
    let count = r.u16()?;
    let mut attrs = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let name_index = r.u16()?;
        let len = r.u32()? as usize;
        let data = r.take(len)?;
        attrs.push(RawAttribute { name_index, data });
    }
    Ok(attrs)
}

/// Parses one class-file image. Trailing bytes after the final attribute are
/// ignored, matching the leniency of most classpath scanners.
pub fn parse_class(bytes: &[u8]) -> Result<ClassModel, ClassParseError> {
    let mut r = Reader::new(bytes);
    let magic = r.u32()?;
    if magic != MAGIC {
        return Err(ClassParseError::BadMagic { found: magic });
    }
    let _minor = r.u16()?;
    let major = r.u16()?;
    if major < MIN_MAJOR {
        return Err(ClassParseError::UnsupportedVersion { major });
    }
    let pool = read_pool(&mut r)?;

    let access_flags = r.u16()?;
    let this_class = r.u16()?;
    let binary_name = pool.class_name(this_class)?.to_owned();
    let super_class = r.u16()?;
    let super_name = if super_class == 0 {
        None
    } else {
        Some(pool.class_name(super_class)?.to_owned())
    };
    let iface_count = r.u16()?;
    let mut interfaces = Vec::with_capacity(iface_count as usize);
    for _ in 0..iface_count {
        interfaces.push(pool.class_name(r.u16()?)?.to_owned());
    }

    let field_count = r.u16()?;
    let mut fields = Vec::with_capacity(field_count as usize);
    let mut serial_version_uid = None;
    for _ in 0..field_count {
        let flags = r.u16()?;
        let name = pool.utf8(r.u16()?)?.to_owned();
        let descriptor = pool.utf8(r.u16()?)?.to_owned();
        if !valid_field_descriptor(&descriptor) {
            return Err(ClassParseError::BadDescriptor { descriptor });
        }
        let attrs = read_attributes(&mut r)?;
        if name == "serialVersionUID" && descriptor == "J" {
            for attr in &attrs {
                if pool.utf8(attr.name_index)? == "ConstantValue" && attr.data.len() == 2 {
                    let idx = u16::from_be_bytes([attr.data[0], attr.data[1]]);
                    if let PoolEntry::Long(v) = pool.get(idx)? {
                        serial_version_uid = Some(*v);
                    }
                }
            }
        }
        fields.push(FieldModel {
            name,
            descriptor,
            access_flags: flags,
        });
    }

    let method_count = r.u16()?;
    let mut methods = Vec::with_capacity(method_count as usize);
    for _ in 0..method_count {
        let flags = r.u16()?;
        let name = pool.utf8(r.u16()?)?.to_owned();
        let descriptor = pool.utf8(r.u16()?)?.to_owned();
        if !valid_method_descriptor(&descriptor) {
            return Err(ClassParseError::BadDescriptor { descriptor });
        }
        let attrs = read_attributes(&mut r)?;
        let mut has_code = false;
        let mut call_sites = Vec::new();
        for attr in &attrs {
            if pool.utf8(attr.name_index)? != "Code" {
                continue;
            }
            has_code = true;
            let mut cr = Reader::new(attr.data);
            let _max_stack = cr.u16()?;
            let _max_locals = cr.u16()?;
            let code_len = cr.u32()? as usize;
            let code = cr.take(code_len)?;
            walk_code(code, &pool, &mut call_sites)?;
            let exc_count = cr.u16()?;
            cr.take(exc_count as usize * 8)?;
            let _nested = read_attributes(&mut cr)?;
        }
        methods.push(MethodModel {
            name,
            descriptor,
            access_flags: flags,
            has_code,
            call_sites,
        });
    }

    let _class_attrs = read_attributes(&mut r)?;

    Ok(ClassModel {
        binary_name,
        access_flags,
        major_version: major,
        super_name,
        interfaces,
        fields,
        methods,
        serial_version_uid,
    })
}

// ---- Classpath index ----

/// Record of a class that was shadowed by an earlier classpath entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DuplicateRecord {
    pub binary_name: String,
    pub kept_origin: String,
    pub shadowed_origin: String,
}

/// Resolution failure for hierarchy queries against the index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownClass {
    pub class_name: String,
}

impl fmt::Display for UnknownClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class {} is not on the indexed classpath", self.class_name)
    }
}

impl core::error::Error for UnknownClass {}

/// Ancestors of a class that could be resolved inside the index, plus the
/// names that could not.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InterfaceClosure {
    /// Every superclass and superinterface (transitively) present in the
    /// index. The queried class itself is not included.
    pub reachable: BTreeSet<String>,
    /// Ancestor names referenced by the hierarchy but absent from the index.
    pub unresolved: BTreeSet<String>,
}

impl InterfaceClosure {
    pub fn contains(&self, name: &str) -> bool {
        self.reachable.contains(name)
    }
}

/// Classes keyed by binary name with classpath-order shadowing: the first
/// definition of a name wins and later ones are logged, mirroring how a JVM
/// resolves duplicate classpath entries.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ClasspathIndex {
    entries: BTreeMap<String, ClassModel>,
    origins: BTreeMap<String, String>,
    duplicates: Vec<DuplicateRecord>,
}

impl ClasspathIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a class under its binary name. Returns `false` (and records a
    /// duplicate) when an earlier insert already claimed the name.
    pub fn insert(&mut self, model: ClassModel, origin: &str) -> bool {
        let name = model.binary_name.clone();
        if let Some(kept_origin) = self.origins.get(&name) {
            self.duplicates.push(DuplicateRecord {
                binary_name: name,
                kept_origin: kept_origin.clone(),
                shadowed_origin: origin.to_owned(),
            });
            return false;
        }
        self.origins.insert(name.clone(), origin.to_owned());
        self.entries.insert(name, model);
        true
    }

    pub fn get(&self, name: &str) -> Option<&ClassModel> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn origin(&self, name: &str) -> Option<&str> {
        self.origins.get(name).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Class models in binary-name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &ClassModel)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn duplicate_log(&self) -> &[DuplicateRecord] {
        &self.duplicates
    }

    /// Transitive superclass/superinterface closure of `name`, resolved
    /// against this index only. Ancestors that are named but not indexed are
    /// reported in `unresolved` rather than guessed at.
    pub fn interface_closure(&self, name: &str) -> Result<InterfaceClosure, UnknownClass> {
        let root = self.get(name).ok_or_else(|| UnknownClass {
            class_name: name.to_owned(),
        })?;
        let mut closure = InterfaceClosure::default();
        let mut work: Vec<String> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let enqueue = |work: &mut Vec<String>, seen: &mut BTreeSet<String>, n: &str| {
            if n != name && seen.insert(n.to_owned()) {
                work.push(n.to_owned());
            }
        };
        if let Some(s) = &root.super_name {
            enqueue(&mut work, &mut seen, s);
        }
        for i in &root.interfaces {
            enqueue(&mut work, &mut seen, i);
        }
        while let Some(current) = work.pop() {
            match self.get(&current) {
                Some(model) => {
                    if let Some(s) = &model.super_name {
                        enqueue(&mut work, &mut seen, s);
                    }
                    for i in &model.interfaces {
                        enqueue(&mut work, &mut seen, i);
                    }
                    closure.reachable.insert(current);
                }
                None => {
                    closure.unresolved.insert(current);
                }
            }
        }
        Ok(closure)
    }
}

/// Formats a class and method pair for log and report lines.
pub fn qualified(class_name: &str, method_name: &str) -> String {
    format!("{class_name}.{method_name}")
}
