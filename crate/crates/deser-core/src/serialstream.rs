//! Java object-serialization stream decoding.
//!
//! [`parse_stream`] decodes a serialized byte stream into a [`StreamGraph`]:
//! an arena of [`StreamElement`]s in encounter order, with wire handles
//! assigned exactly where the stream grammar assigns them. Nothing is ever
//! instantiated; the decoder only reads structure, which is what makes it
//! safe to point at attack payloads.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

pub const STREAM_MAGIC: u16 = 0xACED;
pub const STREAM_VERSION: u16 = 5;
/// First wire handle assigned in a stream (and again after each reset).
pub const BASE_WIRE_HANDLE: u32 = 0x7E0000;

pub const SC_WRITE_METHOD: u8 = 0x01;
pub const SC_SERIALIZABLE: u8 = 0x02;
pub const SC_EXTERNALIZABLE: u8 = 0x04;
pub const SC_BLOCK_DATA: u8 = 0x08;
pub const SC_ENUM: u8 = 0x10;

/// Content tags, one per wire byte 0x70..=0x7E.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Tag {
    Null,
    Reference,
    ClassDesc,
    Object,
    Str,
    Array,
    Class,
    BlockData,
    EndBlockData,
    Reset,
    BlockDataLong,
    Exception,
    LongStr,
    ProxyClassDesc,
    Enum,
}

impl Tag {
    pub fn from_byte(b: u8) -> Option<Tag> {
        Some(match b {
            0x70 => Tag::Null,
            0x71 => Tag::Reference,
            0x72 => Tag::ClassDesc,
            0x73 => Tag::Object,
            0x74 => Tag::Str,
            0x75 => Tag::Array,
            0x76 => Tag::Class,
            0x77 => Tag::BlockData,
            0x78 => Tag::EndBlockData,
            0x79 => Tag::Reset,
            0x7A => Tag::BlockDataLong,
            0x7B => Tag::Exception,
            0x7C => Tag::LongStr,
            0x7D => Tag::ProxyClassDesc,
            0x7E => Tag::Enum,
        _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::Null => "TC_NULL",
            Tag::Reference => "TC_REFERENCE",
            Tag::ClassDesc => "TC_CLASSDESC",
            Tag::Object => "TC_OBJECT",
            Tag::Str => "TC_STRING",
            Tag::Array => "TC_ARRAY",
            Tag::Class => "TC_CLASS",
            Tag::BlockData => "TC_BLOCKDATA",
            Tag::EndBlockData => "TC_ENDBLOCKDATA",
            Tag::Reset => "TC_RESET",
            Tag::BlockDataLong => "TC_BLOCKDATALONG",
            Tag::Exception => "TC_EXCEPTION",
            Tag::LongStr => "TC_LONGSTRING",
            Tag::ProxyClassDesc => "TC_PROXYCLASSDESC",
            Tag::Enum => "TC_ENUM",
        }
    }
}

/// Index of an element inside [`StreamGraph::elements`].
pub type ElemId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PrimValue {
    Byte(i8),
    Char(u16),
    Double(f64),
    Float(f32),
    Int(i32),
    Long(i64),
    Short(i16),
    Bool(bool),
}

impl PrimValue {
    /// Renders the value as `decimal (hex)`; floats show their raw bit
    /// pattern as the hex half.
    pub fn render(&self) -> String {
        match self {
            PrimValue::Byte(v) => format!("{v} (0x{:02X})", *v as u8),
            PrimValue::Char(v) => format!("{v} (0x{v:04X})"),
            PrimValue::Double(v) => format!("{v} (0x{:016X})", v.to_bits()),
            PrimValue::Float(v) => format!("{v} (0x{:08X})", v.to_bits()),
            PrimValue::Int(v) => format!("{v} (0x{:08X})", *v as u32),
            PrimValue::Long(v) => format!("{v} (0x{:016X})", *v as u64),
            PrimValue::Short(v) => format!("{v} (0x{:04X})", *v as u16),
            PrimValue::Bool(v) => format!("{v} (0x{:02X})", *v as u8),
        }
    }
}

/// A serial field value inside an object's class data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FieldValue {
    Prim(PrimValue),
    Ref(ElemId),
}

/// One declared serial field inside a class descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FieldDecl {
    /// Wire type code: one of `B C D F I J S Z L [`.
    pub type_code: u8,
    pub name: String,
    /// Field type as written in the stream for object/array fields
    /// (descriptor syntax with dots, e.g. `Ljava.util.Map;`).
    pub class_name: Option<String>,
}

/// One decoded element. Fields that do not apply to the element's tag stay at
/// their empty defaults; `span` is the half-open byte range the element
/// occupies, including its tag byte and everything nested beneath it.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StreamElement {
    pub tag: Option<Tag>,
    /// Wire handle, for the grammar positions that assign one.
    pub handle: Option<u32>,
    /// Display class name: dot form for plain classes and arrays, a
    /// `$Proxy(iface, ...)` placeholder for proxy descriptors and their
    /// instances, the enum type for enum constants.
    pub class_name: Option<String>,
    /// Proxy interface list (proxy descriptors and proxy instances).
    pub interfaces: Vec<String>,
    pub suid: Option<i64>,
    pub flags: Option<u8>,
    pub field_decls: Vec<FieldDecl>,
    /// Field-name strings of object-typed declarations, in declaration order
    /// (they are string elements in their own right).
    pub decl_type_elems: Vec<ElemId>,
    pub super_desc: Option<ElemId>,
    /// Class descriptor for objects, arrays, enums, and class elements.
    pub desc: Option<ElemId>,
    /// Field values in declaration order, superclass data first.
    pub field_values: Vec<(String, FieldValue)>,
    /// Object annotation (custom `writeObject`/`writeExternal` payload) or a
    /// class descriptor's annotation.
    pub annotation: Vec<ElemId>,
    /// Array members (object arrays), the enum constant name element, or the
    /// nested throwable of an exception marker.
    pub children: Vec<ElemId>,
    /// Array members for primitive arrays.
    pub prim_children: Vec<PrimValue>,
    pub array_len: Option<u32>,
    /// String contents, or the constant name for enum elements.
    pub text: Option<String>,
    /// Raw block-data payload.
    pub block: Vec<u8>,
    /// Referenced wire handle (`TC_REFERENCE` elements).
    pub ref_handle: Option<u32>,
    /// Element the reference resolves to.
    pub ref_target: Option<ElemId>,
    /// Nesting depth; top-level contents sit at depth 1.
    pub depth: u32,
    pub span: (usize, usize),
}

impl StreamElement {
    pub fn tag(&self) -> Tag {
        // Every element the parser returns has its tag filled in.
        self.tag.expect("constructed element missing tag")
    }
}

/// Decoded stream: elements in encounter order plus walk-level statistics.
#[derive(Clone, Debug, Default, Serialize)]
pub struct StreamGraph {
    pub elements: Vec<StreamElement>,
    /// Top-level contents, in order.
    pub roots: Vec<ElemId>,
    /// Latest element assigned to each wire handle (a reset lets later
    /// elements reuse handle numbers; the last assignment wins here).
    pub handle_table: BTreeMap<u32, ElemId>,
    pub max_depth_observed: u32,
    /// Handle assignments plus back-references, the budgets that a
    /// reference-count limit meters.
    pub total_refs: u64,
    pub total_bytes: u64,
    pub max_array_len: u32,
}

impl StreamGraph {
    pub fn element(&self, id: ElemId) -> &StreamElement {
        &self.elements[id]
    }

    /// Distinct class names in first-encounter order, covering descriptors,
    /// instances, arrays, and enum constants.
    pub fn class_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for el in &self.elements {
            if let Some(name) = &el.class_name {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StreamParseError {
    BadStreamMagic { found: u16 },
    BadStreamVersion { found: u16 },
    UnknownTag { byte: u8, offset: usize },
    TruncatedStream { offset: usize },
    DanglingReference { handle: u32, offset: usize },
    /// Structurally well-tagged but semantically impossible value, e.g. a
    /// negative array length or a reference used where a descriptor is
    /// required but pointing at a non-descriptor.
    BadValue { offset: usize, detail: &'static str },
    /// Nesting exceeded the configured recursion cap.
    DepthCapExceeded { depth: u32, offset: usize },
}

impl fmt::Display for StreamParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamParseError::BadStreamMagic { found } => {
                write!(f, "bad stream magic 0x{found:04X}")
            }
            StreamParseError::BadStreamVersion { found } => {
                write!(f, "unsupported stream version {found}")
            }
            StreamParseError::UnknownTag { byte, offset } => {
                write!(f, "unknown or misplaced tag 0x{byte:02X} at byte {offset}")
            }
            StreamParseError::TruncatedStream { offset } => {
                write!(f, "stream truncated at byte {offset}")
            }
            StreamParseError::DanglingReference { handle, offset } => {
                write!(f, "reference to unassigned handle 0x{handle:X} at byte {offset}")
            }
            StreamParseError::BadValue { offset, detail } => {
                write!(f, "invalid value at byte {offset}: {detail}")
            }
            StreamParseError::DepthCapExceeded { depth, offset } => {
                write!(f, "nesting depth {depth} exceeds the recursion cap at byte {offset}")
            }
        }
    }
}

impl core::error::Error for StreamParseError {}

const DEFAULT_DEPTH_CAP: u32 = 1024;

pub fn parse_stream(bytes: &[u8]) -> Result<StreamGraph, StreamParseError> {
    parse_stream_with_depth_cap(bytes, DEFAULT_DEPTH_CAP)
}

pub fn parse_stream_with_depth_cap(
    bytes: &[u8],
    depth_cap: u32,
) -> Result<StreamGraph, StreamParseError> {
    let mut p = Parser {
        bytes,
        pos: 0,
        depth_cap,
        elements: Vec::new(),
        handles: BTreeMap::new(),
        handle_log: BTreeMap::new(),
        next_handle: BASE_WIRE_HANDLE,
        max_depth: 0,
        total_refs: 0,
        max_array: 0,
    };
    let magic = p.u16()?;
    if magic != STREAM_MAGIC {
        return Err(StreamParseError::BadStreamMagic { found: magic });
    }
    let version = p.u16()?;
    if version != STREAM_VERSION {
        return Err(StreamParseError::BadStreamVersion { found: version });
    }
    let mut roots = Vec::new();
    while p.pos < p.bytes.len() {
        roots.push(p.content(1)?);
    }
    Ok(StreamGraph {
        max_depth_observed: p.max_depth,
        total_refs: p.total_refs,
        total_bytes: bytes.len() as u64,
        max_array_len: p.max_array,
        handle_table: p.handle_log,
        elements: p.elements,
        roots,
    })
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    depth_cap: u32,
    elements: Vec<StreamElement>,
    /// Live handle table for resolving back-references; cleared by resets.
    handles: BTreeMap<u32, ElemId>,
    /// Cumulative handle assignments, last writer wins across resets.
    handle_log: BTreeMap<u32, ElemId>,
    next_handle: u32,
    max_depth: u32,
    total_refs: u64,
    max_array: u32,
}

impl<'a> Parser<'a> {
    fn truncated(&self) -> StreamParseError {
        StreamParseError::TruncatedStream { offset: self.pos }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], StreamParseError> {
        let end = self.pos.checked_add(n).ok_or(self.truncated())?;
        if end > self.bytes.len() {
            return Err(self.truncated());
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, StreamParseError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, StreamParseError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, StreamParseError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64, StreamParseError> {
        let b = self.take(8)?;
        Ok(u64::from_be_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]))
    }

    fn utf(&mut self) -> Result<String, StreamParseError> {
        let len = self.u16()? as usize;
        let at = self.pos;
        let raw = self.take(len)?;
        decode_stream_utf(raw).ok_or(StreamParseError::BadValue {
            offset: at,
            detail: "invalid modified UTF-8",
        })
    }

    fn long_utf(&mut self) -> Result<String, StreamParseError> {
        let len = self.u64()?;
        if len > self.bytes.len() as u64 {
            return Err(self.truncated());
        }
        let at = self.pos;
        let raw = self.take(len as usize)?;
        decode_stream_utf(raw).ok_or(StreamParseError::BadValue {
            offset: at,
            detail: "invalid modified UTF-8",
        })
    }

    fn peek_tag(&self) -> Result<(u8, usize), StreamParseError> {
        match self.bytes.get(self.pos) {
            Some(&b) => Ok((b, self.pos)),
            None => Err(self.truncated()),
        }
    }

    /// Reserves the arena slot for an element starting at `start`, so arena
    /// order stays equal to encounter order even though children finish
    /// parsing before their parent.
    fn alloc(&mut self, tag: Tag, start: usize, depth: u32) -> ElemId {
        let id = self.elements.len();
        self.elements.push(StreamElement {
            tag: Some(tag),
            depth,
            span: (start, start),
            ..StreamElement::default()
        });
        if depth > self.max_depth {
            self.max_depth = depth;
        }
        id
    }

    fn assign_handle(&mut self, id: ElemId) {
        let h = self.next_handle;
        self.next_handle += 1;
        self.handles.insert(h, id);
        self.handle_log.insert(h, id);
        self.elements[id].handle = Some(h);
        self.total_refs += 1;
    }

    fn finish(&mut self, id: ElemId) -> ElemId {
        self.elements[id].span.1 = self.pos;
        id
    }

    /// Parses one `content` production.
    fn content(&mut self, depth: u32) -> Result<ElemId, StreamParseError> {
        if depth > self.depth_cap {
            return Err(StreamParseError::DepthCapExceeded {
                depth,
                offset: self.pos,
            });
        }
        let (byte, start) = self.peek_tag()?;
        let tag = Tag::from_byte(byte).ok_or(StreamParseError::UnknownTag {
            byte,
            offset: start,
        })?;
        match tag {
            Tag::Object => {
                self.pos += 1;
                let id = self.alloc(Tag::Object, start, depth);
                let desc = self.required_desc(depth + 1)?;
                self.elements[id].desc = Some(desc);
                self.elements[id].class_name = self.elements[desc].class_name.clone();
                self.elements[id].interfaces = self.elements[desc].interfaces.clone();
                self.assign_handle(id);
                self.read_class_data(id, desc, depth)?;
                Ok(self.finish(id))
            }
            Tag::ClassDesc | Tag::ProxyClassDesc => self.class_desc_new(depth),
            Tag::Str => {
                self.pos += 1;
                let id = self.alloc(Tag::Str, start, depth);
                self.assign_handle(id);
                let s = self.utf()?;
                self.elements[id].text = Some(s);
                Ok(self.finish(id))
            }
            Tag::LongStr => {
                self.pos += 1;
                let id = self.alloc(Tag::LongStr, start, depth);
                self.assign_handle(id);
                let s = self.long_utf()?;
                self.elements[id].text = Some(s);
                Ok(self.finish(id))
            }
            Tag::Array => {
                self.pos += 1;
                let id = self.alloc(Tag::Array, start, depth);
                let desc = self.required_desc(depth + 1)?;
                self.elements[id].desc = Some(desc);
                let name = self.elements[desc].class_name.clone();
                self.elements[id].class_name = name.clone();
                self.assign_handle(id);
                let len_at = self.pos;
                let len = self.u32()?;
                if len & 0x8000_0000 != 0 {
                    return Err(StreamParseError::BadValue {
                        offset: len_at,
                        detail: "negative array length",
                    });
                }
                self.elements[id].array_len = Some(len);
                if len > self.max_array {
                    self.max_array = len;
                }
                match component_type_code(name.as_deref()) {
                    Some(code @ (b'B' | b'C' | b'D' | b'F' | b'I' | b'J' | b'S' | b'Z')) => {
                        for _ in 0..len {
                            let v = self.prim_value(code)?;
                            self.elements[id].prim_children.push(v);
                        }
                    }
                    Some(b'L') | Some(b'[') => {
                        for _ in 0..len {
                            let child = self.content(depth + 1)?;
                            self.elements[id].children.push(child);
                        }
                    }
                    _ => {
                        return Err(StreamParseError::BadValue {
                            offset: len_at,
                            detail: "array descriptor lacks a valid component type",
                        });
                    }
                }
                Ok(self.finish(id))
            }
            Tag::Enum => {
                self.pos += 1;
                let id = self.alloc(Tag::Enum, start, depth);
                let desc = self.required_desc(depth + 1)?;
                self.elements[id].desc = Some(desc);
                self.elements[id].class_name = self.elements[desc].class_name.clone();
                self.assign_handle(id);
                let name_at = self.pos;
                let name_el = self.content(depth + 1)?;
                let name = self.elements[name_el].text.clone().ok_or(
                    StreamParseError::BadValue {
                        offset: name_at,
                        detail: "enum constant name is not a string",
                    },
                )?;
                self.elements[id].children.push(name_el);
                self.elements[id].text = Some(name);
                Ok(self.finish(id))
            }
            Tag::Class => {
                self.pos += 1;
                let id = self.alloc(Tag::Class, start, depth);
                let desc = self.required_desc(depth + 1)?;
                self.elements[id].desc = Some(desc);
                self.elements[id].class_name = self.elements[desc].class_name.clone();
                self.assign_handle(id);
                Ok(self.finish(id))
            }
            Tag::Null => {
                self.pos += 1;
                let id = self.alloc(Tag::Null, start, depth);
                Ok(self.finish(id))
            }
            Tag::Reference => {
                self.pos += 1;
                let id = self.alloc(Tag::Reference, start, depth);
                let handle = self.u32()?;
                let target =
                    self.handles
                        .get(&handle)
                        .copied()
                        .ok_or(StreamParseError::DanglingReference {
                            handle,
                            offset: start,
                        })?;
                self.total_refs += 1;
                self.elements[id].ref_handle = Some(handle);
                self.elements[id].ref_target = Some(target);
                self.elements[id].class_name = self.elements[target].class_name.clone();
                self.elements[id].interfaces = self.elements[target].interfaces.clone();
                Ok(self.finish(id))
            }
            Tag::BlockData => {
                self.pos += 1;
                let id = self.alloc(Tag::BlockData, start, depth);
                let len = self.u8()? as usize;
                self.elements[id].block = self.take(len)?.to_vec();
                Ok(self.finish(id))
            }
            Tag::BlockDataLong => {
                self.pos += 1;
                let id = self.alloc(Tag::BlockDataLong, start, depth);
                let len = self.u32()? as usize;
                if len > self.bytes.len() {
                    return Err(self.truncated());
                }
                self.elements[id].block = self.take(len)?.to_vec();
                Ok(self.finish(id))
            }
            Tag::Reset => {
                self.pos += 1;
                let id = self.alloc(Tag::Reset, start, depth);
                self.reset_handles();
                Ok(self.finish(id))
            }
            Tag::Exception => {
                self.pos += 1;
                let id = self.alloc(Tag::Exception, start, depth);
                // The writer resets before and after serializing the
                // throwable that replaced the stream tail.
                self.reset_handles();
                let throwable = self.content(depth + 1)?;
                self.elements[id].children.push(throwable);
                self.reset_handles();
                Ok(self.finish(id))
            }
            Tag::EndBlockData => Err(StreamParseError::UnknownTag {
                byte,
                offset: start,
            }),
        }
    }

    fn reset_handles(&mut self) {
        self.handles.clear();
        self.next_handle = BASE_WIRE_HANDLE;
    }

    /// Parses the `classDesc` production where a descriptor must be present:
    /// a new descriptor, a back-reference to one, or null (which is an error
    /// here; object/array/enum instances never carry a null descriptor).
    fn required_desc(&mut self, depth: u32) -> Result<ElemId, StreamParseError> {
        self.class_desc(depth)?.ok_or(StreamParseError::BadValue {
            offset: self.pos,
            detail: "null class descriptor where one is required",
        })
    }

    /// Parses the `classDesc` production: null, a back-reference, or a new
    /// (possibly proxy) descriptor. Returns `None` for null.
    fn class_desc(&mut self, depth: u32) -> Result<Option<ElemId>, StreamParseError> {
        if depth > self.depth_cap {
            return Err(StreamParseError::DepthCapExceeded {
                depth,
                offset: self.pos,
            });
        }
        let (byte, start) = self.peek_tag()?;
        match Tag::from_byte(byte) {
            Some(Tag::Null) => {
                self.pos += 1;
                let id = self.alloc(Tag::Null, start, depth);
                self.finish(id);
                Ok(None)
            }
            Some(Tag::Reference) => {
                let id = self.content(depth)?;
                let target = self.elements[id].ref_target.expect("reference resolved");
                match self.elements[target].tag() {
                    Tag::ClassDesc | Tag::ProxyClassDesc => Ok(Some(target)),
                    _ => Err(StreamParseError::BadValue {
                        offset: start,
                        detail: "reference does not designate a class descriptor",
                    }),
                }
            }
            Some(Tag::ClassDesc) | Some(Tag::ProxyClassDesc) => {
                Ok(Some(self.class_desc_new(depth)?))
            }
            _ => Err(StreamParseError::UnknownTag {
                byte,
                offset: start,
            }),
        }
    }

    /// Parses a `TC_CLASSDESC` or `TC_PROXYCLASSDESC` element, cursor on the
    /// tag byte.
    fn class_desc_new(&mut self, depth: u32) -> Result<ElemId, StreamParseError> {
        let (byte, start) = self.peek_tag()?;
        let tag = Tag::from_byte(byte).expect("caller checked tag");
        self.pos += 1;
        match tag {
            Tag::ClassDesc => {
                let id = self.alloc(Tag::ClassDesc, start, depth);
                let name = self.utf()?;
                let suid = self.u64()? as i64;
                self.elements[id].class_name = Some(name);
                self.elements[id].suid = Some(suid);
                // classDescInfo: the handle lands after name and suid, before
                // flags and fields.
                self.assign_handle(id);
                let flags = self.u8()?;
                self.elements[id].flags = Some(flags);
                let field_count = self.u16()?;
                for _ in 0..field_count {
                    let code_at = self.pos;
                    let type_code = self.u8()?;
                    let name = self.utf()?;
                    let class_name = match type_code {
                        b'B' | b'C' | b'D' | b'F' | b'I' | b'J' | b'S' | b'Z' => None,
                        b'L' | b'[' => {
                            // The field type is written as a string object and
                            // participates in handle assignment.
                            let ty_at = self.pos;
                            let ty_el = self.content(depth + 1)?;
                            let ty = self.elements[ty_el].text.clone().ok_or(
                                StreamParseError::BadValue {
                                    offset: ty_at,
                                    detail: "field type is not a string",
                                },
                            )?;
                            self.elements[id].decl_type_elems.push(ty_el);
                            Some(ty)
                        }
                        _ => {
                            return Err(StreamParseError::BadValue {
                                offset: code_at,
                                detail: "unknown field type code",
                            })
                        }
                    };
                    self.elements[id].field_decls.push(FieldDecl {
                        type_code,
                        name,
                        class_name,
                    });
                }
                self.class_annotation(id, depth)?;
                let super_desc = self.class_desc(depth + 1)?;
                self.elements[id].super_desc = super_desc;
                Ok(self.finish(id))
            }
            Tag::ProxyClassDesc => {
                let id = self.alloc(Tag::ProxyClassDesc, start, depth);
                self.assign_handle(id);
                let count = self.u32()?;
                if count as u64 * 2 > self.bytes.len() as u64 {
                    // Each interface name needs at least its length prefix.
                    return Err(self.truncated());
                }
                let mut interfaces = Vec::new();
                for _ in 0..count {
                    interfaces.push(self.utf()?);
                }
                self.elements[id].class_name = Some(format!("$Proxy({})", interfaces.join(",")));
                self.elements[id].interfaces = interfaces;
                self.class_annotation(id, depth)?;
                let super_desc = self.class_desc(depth + 1)?;
                self.elements[id].super_desc = super_desc;
                Ok(self.finish(id))
            }
            _ => unreachable!("caller dispatches only descriptor tags"),
        }
    }

    /// Reads contents until `TC_ENDBLOCKDATA` into `annotation`.
    fn class_annotation(&mut self, id: ElemId, depth: u32) -> Result<(), StreamParseError> {
        loop {
            let (byte, _) = self.peek_tag()?;
            if Tag::from_byte(byte) == Some(Tag::EndBlockData) {
                self.pos += 1;
                return Ok(());
            }
            let child = self.content(depth + 1)?;
            self.elements[id].annotation.push(child);
        }
    }

    /// Reads `classdata[]` for an object: superclass data first, then each
    /// descriptor's primitive fields, object fields, and (when flagged) the
    /// custom write-method annotation.
    fn read_class_data(
        &mut self,
        obj: ElemId,
        desc: ElemId,
        depth: u32,
    ) -> Result<(), StreamParseError> {
        // Collect the descriptor chain root-first (most-super first).
        let mut chain = Vec::new();
        let mut cur = Some(desc);
        while let Some(d) = cur {
            chain.push(d);
            cur = self.elements[d].super_desc;
        }
        chain.reverse();
        for d in chain {
            let flags = self.elements[d].flags.unwrap_or(0);
            if flags & SC_SERIALIZABLE != 0 {
                let decls = self.elements[d].field_decls.clone();
                for decl in &decls {
                    match decl.type_code {
                        b'L' | b'[' => {
                            let v = self.content(depth + 1)?;
                            self.elements[obj]
                                .field_values
                                .push((decl.name.clone(), FieldValue::Ref(v)));
                        }
                        code => {
                            let v = self.prim_value(code)?;
                            self.elements[obj]
                                .field_values
                                .push((decl.name.clone(), FieldValue::Prim(v)));
                        }
                    }
                }
                if flags & SC_WRITE_METHOD != 0 {
                    self.object_annotation(obj, depth)?;
                }
            } else if flags & SC_EXTERNALIZABLE != 0 {
                if flags & SC_BLOCK_DATA != 0 {
                    // Protocol 2: block-data mode with an explicit terminator.
                    self.object_annotation(obj, depth)?;
                } else {
                    // Protocol 1 external contents have no framing and cannot
                    // be skipped without running the class's own code.
                    return Err(StreamParseError::BadValue {
                        offset: self.pos,
                        detail: "externalizable protocol 1 data is not decodable statically",
                    });
                }
            }
            // A proxy descriptor (no flags) contributes no class data of its
            // own; its concrete superclass descriptor carries the fields.
        }
        Ok(())
    }

    fn object_annotation(&mut self, obj: ElemId, depth: u32) -> Result<(), StreamParseError> {
        loop {
            let (byte, _) = self.peek_tag()?;
            if Tag::from_byte(byte) == Some(Tag::EndBlockData) {
                self.pos += 1;
                return Ok(());
            }
            let child = self.content(depth + 1)?;
            self.elements[obj].annotation.push(child);
        }
    }

    fn prim_value(&mut self, code: u8) -> Result<PrimValue, StreamParseError> {
        Ok(match code {
            b'B' => PrimValue::Byte(self.u8()? as i8),
            b'C' => PrimValue::Char(self.u16()?),
            b'D' => PrimValue::Double(f64::from_bits(self.u64()?)),
            b'F' => PrimValue::Float(f32::from_bits(self.u32()?)),
            b'I' => PrimValue::Int(self.u32()? as i32),
            b'J' => PrimValue::Long(self.u64()? as i64),
            b'S' => PrimValue::Short(self.u16()? as i16),
            b'Z' => PrimValue::Bool(self.u8()? != 0),
            _ => unreachable!("callers pass validated primitive type codes"),
        })
    }
}

/// Component type code of an array class name like `[I` or `[Ljava.util.Map;`.
fn component_type_code(name: Option<&str>) -> Option<u8> {
    let name = name?;
    let b = name.as_bytes();
    if b.first() != Some(&b'[') {
        return None;
    }
    b.get(1).copied()
}

/// Strings in streams use the same modified UTF-8 as class files.
fn decode_stream_utf(bytes: &[u8]) -> Option<String> {
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

// ---- Dump rendering ----

const BLOCK_DUMP_LIMIT: usize = 32;

/// Renders the decoded stream as an indented text tree, one line per element,
/// with tag names, wire handles, class names, and primitive values in both
/// decimal and hex. Output is deterministic for a given stream.
pub fn dump(graph: &StreamGraph) -> String {
    let mut out = String::new();
    out.push_str("stream magic 0xACED version 5\n");
    for &root in &graph.roots {
        render_element(graph, root, 0, "", &mut out);
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn handle_part(el: &StreamElement) -> String {
    match el.handle {
        Some(h) => format!(" handle 0x{h:X}"),
        None => String::new(),
    }
}

fn render_element(graph: &StreamGraph, id: ElemId, level: usize, label: &str, out: &mut String) {
    let el = graph.element(id);
    indent(out, level);
    if !label.is_empty() {
        out.push_str(label);
        out.push_str(" = ");
    }
    let tag = el.tag();
    out.push_str(tag.name());
    out.push_str(&handle_part(el));
    match tag {
        Tag::ClassDesc => {
            let decls: Vec<String> = el
                .field_decls
                .iter()
                .map(|d| match &d.class_name {
                    Some(ty) => format!("{}:{}", d.name, ty),
                    None => format!("{}:{}", d.name, d.type_code as char),
                })
                .collect();
            out.push_str(&format!(
                " class {} suid {} flags 0x{:02X} fields [{}]\n",
                el.class_name.as_deref().unwrap_or("?"),
                el.suid.unwrap_or(0),
                el.flags.unwrap_or(0),
                decls.join(", ")
            ));
            for &a in &el.annotation {
                render_element(graph, a, level + 1, "annotation", out);
            }
            if let Some(s) = el.super_desc {
                render_element(graph, s, level + 1, "extends", out);
            }
        }
        Tag::ProxyClassDesc => {
            out.push_str(&format!(" interfaces [{}]\n", el.interfaces.join(", ")));
            for &a in &el.annotation {
                render_element(graph, a, level + 1, "annotation", out);
            }
            if let Some(s) = el.super_desc {
                render_element(graph, s, level + 1, "extends", out);
            }
        }
        Tag::Object => {
            out.push_str(&format!(
                " class {}\n",
                el.class_name.as_deref().unwrap_or("?")
            ));
            for (name, value) in &el.field_values {
                match value {
                    FieldValue::Prim(p) => {
                        indent(out, level + 1);
                        out.push_str(&format!(".{name} = {}\n", p.render()));
                    }
                    FieldValue::Ref(child) => {
                        let label = format!(".{name}");
                        render_element(graph, *child, level + 1, &label, out);
                    }
                }
            }
            for &a in &el.annotation {
                render_element(graph, a, level + 1, "annotation", out);
            }
        }
        Tag::Str | Tag::LongStr => {
            out.push_str(&format!(" {:?}\n", el.text.as_deref().unwrap_or("")));
        }
        Tag::Array => {
            out.push_str(&format!(
                " class {} length {}\n",
                el.class_name.as_deref().unwrap_or("?"),
                el.array_len.unwrap_or(0)
            ));
            for (i, p) in el.prim_children.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&format!("[{i}] = {}\n", p.render()));
            }
            for (i, &child) in el.children.iter().enumerate() {
                let label = format!("[{i}]");
                render_element(graph, child, level + 1, &label, out);
            }
        }
        Tag::Enum => {
            out.push_str(&format!(
                " class {} name {:?}\n",
                el.class_name.as_deref().unwrap_or("?"),
                el.text.as_deref().unwrap_or("")
            ));
        }
        Tag::Class => {
            out.push_str(&format!(
                " class {}\n",
                el.class_name.as_deref().unwrap_or("?")
            ));
        }
        Tag::Null | Tag::Reset | Tag::EndBlockData => {
            out.push('\n');
        }
        Tag::Reference => {
            out.push_str(&format!(" handle 0x{:X}\n", el.ref_handle.unwrap_or(0)));
        }
        Tag::BlockData | Tag::BlockDataLong => {
            let shown = el.block.len().min(BLOCK_DUMP_LIMIT);
            let mut hex = String::with_capacity(shown * 2);
            for b in &el.block[..shown] {
                hex.push_str(&format!("{b:02x}"));
            }
            if el.block.len() > shown {
                out.push_str(&format!(" {} bytes {hex}... \n", el.block.len()));
            } else {
                out.push_str(&format!(" {} bytes {hex}\n", el.block.len()));
            }
        }
        Tag::Exception => {
            out.push('\n');
            for &child in &el.children {
                render_element(graph, child, level + 1, "throwable", out);
            }
        }
    }
}
