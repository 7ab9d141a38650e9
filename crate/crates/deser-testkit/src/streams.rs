//! Serialization-stream encoder.
//!
//! Writes streams element by element with the same wire-handle bookkeeping
//! the format mandates: every descriptor, object, array, enum constant, and
//! string takes the next handle, `TC_RESET` rewinds the counter. Fixtures
//! read handles back from the writer rather than hard-coding them, and every
//! write happens at a byte position the fixture can capture.

// ---- Wire constants ----

pub const TC_NULL: u8 = 0x70;
pub const TC_REFERENCE: u8 = 0x71;
pub const TC_CLASSDESC: u8 = 0x72;
pub const TC_OBJECT: u8 = 0x73;
pub const TC_STRING: u8 = 0x74;
pub const TC_ARRAY: u8 = 0x75;
pub const TC_CLASS: u8 = 0x76;
pub const TC_BLOCKDATA: u8 = 0x77;
pub const TC_ENDBLOCKDATA: u8 = 0x78;
pub const TC_RESET: u8 = 0x79;
pub const TC_BLOCKDATALONG: u8 = 0x7A;
pub const TC_EXCEPTION: u8 = 0x7B;
pub const TC_LONGSTRING: u8 = 0x7C;
pub const TC_PROXYCLASSDESC: u8 = 0x7D;
pub const TC_ENUM: u8 = 0x7E;

pub const BASE_HANDLE: u32 = 0x7E_0000;

pub const SC_WRITE_METHOD: u8 = 0x01;
pub const SC_SERIALIZABLE: u8 = 0x02;
pub const SC_EXTERNALIZABLE: u8 = 0x04;
pub const SC_BLOCK_DATA: u8 = 0x08;
pub const SC_ENUM: u8 = 0x10;

/// One field declaration inside a class descriptor. Object-typed fields
/// carry their type as a string element, either written fresh (taking a
/// handle) or as a back-reference to an earlier string.
#[derive(Clone, Debug)]
pub struct DescField {
    pub type_code: u8,
    pub name: String,
    pub type_string: Option<TypeStr>,
}

#[derive(Clone, Debug)]
pub enum TypeStr {
    New(String),
    Ref(u32),
}

/// Primitive field declaration (`B C D F I J S Z`).
pub fn prim_field(type_code: u8, name: &str) -> DescField {
    DescField {
        type_code,
        name: name.into(),
        type_string: None,
    }
}

/// Object or array field with a fresh type string, e.g. `"Ljava/lang/Object;"`.
pub fn obj_field(name: &str, type_descriptor: &str) -> DescField {
    let code = if type_descriptor.starts_with('[') {
        b'['
    } else {
        b'L'
    };
    DescField {
        type_code: code,
        name: name.into(),
        type_string: Some(TypeStr::New(type_descriptor.into())),
    }
}

/// Object field whose type string back-references an earlier string handle.
pub fn obj_field_ref(name: &str, handle: u32) -> DescField {
    DescField {
        type_code: b'L',
        name: name.into(),
        type_string: Some(TypeStr::Ref(handle)),
    }
}

pub struct StreamWriter {
    pub buf: Vec<u8>,
    next_handle: u32,
}

impl Default for StreamWriter {
    fn default() -> Self {
        StreamWriter::new()
    }
}

impl StreamWriter {
    /// Starts a stream with the magic and version words.
    pub fn new() -> StreamWriter {
        let mut w = StreamWriter::bare();
        w.u16(0xACED);
        w.u16(0x0005);
        w
    }

    /// Starts with an empty buffer, for deliberately malformed fixtures.
    pub fn bare() -> StreamWriter {
        StreamWriter {
            buf: Vec::new(),
            next_handle: BASE_HANDLE,
        }
    }

    pub fn pos(&self) -> usize {
        self.buf.len()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    // ---- Raw scalars ----

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn i32(&mut self, v: i32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn i64(&mut self, v: i64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    /// Length-prefixed modified UTF-8 (u16 length).
    pub fn utf(&mut self, s: &str) {
        let encoded = crate::classes::encode_mutf8(s);
        self.u16(encoded.len() as u16);
        self.bytes(&encoded);
    }

    /// Claims the next wire handle.
    pub fn take_handle(&mut self) -> u32 {
        let h = self.next_handle;
        self.next_handle += 1;
        h
    }

    /// Handles claimed since the start (or the last reset).
    pub fn handles_taken(&self) -> u32 {
        self.next_handle - BASE_HANDLE
    }

    // ---- Elements ----

    pub fn null(&mut self) {
        self.u8(TC_NULL);
    }

    pub fn reference(&mut self, handle: u32) {
        self.u8(TC_REFERENCE);
        self.u32(handle);
    }

    /// `TC_RESET` rewinds the handle counter along with the reader's table.
    pub fn reset(&mut self) {
        self.u8(TC_RESET);
        self.next_handle = BASE_HANDLE;
    }

    pub fn string(&mut self, s: &str) -> u32 {
        self.u8(TC_STRING);
        let h = self.take_handle();
        self.utf(s);
        h
    }

    pub fn long_string(&mut self, s: &str) -> u32 {
        self.u8(TC_LONGSTRING);
        let h = self.take_handle();
        let encoded = crate::classes::encode_mutf8(s);
        self.u64(encoded.len() as u64);
        self.bytes(&encoded);
        h
    }

    pub fn block(&mut self, data: &[u8]) {
        assert!(data.len() <= u8::MAX as usize, "short block overflow");
        self.u8(TC_BLOCKDATA);
        self.u8(data.len() as u8);
        self.bytes(data);
    }

    pub fn block_long(&mut self, data: &[u8]) {
        self.u8(TC_BLOCKDATALONG);
        self.u32(data.len() as u32);
        self.bytes(data);
    }

    pub fn end_block(&mut self) {
        self.u8(TC_ENDBLOCKDATA);
    }

    /// Writes a class descriptor up to and including its empty annotation;
    /// the caller provides the super descriptor next (`null()`,
    /// `reference()`, or another descriptor). Field type strings claim their
    /// handles in declaration order, before the descriptor's annotation.
    pub fn class_desc_open(
        &mut self,
        name: &str,
        suid: i64,
        flags: u8,
        fields: &[DescField],
    ) -> u32 {
        self.u8(TC_CLASSDESC);
        self.utf(name);
        self.i64(suid);
        let h = self.take_handle();
        self.u8(flags);
        self.u16(fields.len() as u16);
        for field in fields {
            self.u8(field.type_code);
            self.utf(&field.name);
            match &field.type_string {
                None => {}
                Some(TypeStr::New(s)) => {
                    self.string(s);
                }
                Some(TypeStr::Ref(handle)) => self.reference(*handle),
            }
        }
        self.end_block();
        h
    }

    /// Full class descriptor with no superclass.
    pub fn class_desc(&mut self, name: &str, suid: i64, flags: u8, fields: &[DescField]) -> u32 {
        let h = self.class_desc_open(name, suid, flags, fields);
        self.null();
        h
    }

    /// Proxy descriptor: the handle lands immediately after the tag, before
    /// the interface count. No superclass is written (caller supplies it).
    pub fn proxy_desc_open(&mut self, interfaces: &[&str]) -> u32 {
        self.u8(TC_PROXYCLASSDESC);
        let h = self.take_handle();
        self.u32(interfaces.len() as u32);
        for iface in interfaces {
            self.utf(iface);
        }
        self.end_block();
        h
    }

    /// Object header against an already-written descriptor; returns the
    /// object handle. Field values follow in declaration order.
    pub fn object_ref(&mut self, desc_handle: u32) -> u32 {
        self.u8(TC_OBJECT);
        self.reference(desc_handle);
        self.take_handle()
    }

    /// Object header with a fresh inline descriptor (no super): returns
    /// `(object_handle, desc_handle)`.
    pub fn object_with_desc(
        &mut self,
        name: &str,
        suid: i64,
        flags: u8,
        fields: &[DescField],
    ) -> (u32, u32) {
        self.u8(TC_OBJECT);
        let desc = self.class_desc(name, suid, flags, fields);
        let obj = self.take_handle();
        (obj, desc)
    }

    /// Enum constant against an existing descriptor; the constant name is a
    /// fresh string element.
    pub fn enum_ref(&mut self, desc_handle: u32, constant: &str) -> u32 {
        self.u8(TC_ENUM);
        self.reference(desc_handle);
        let h = self.take_handle();
        self.string(constant);
        h
    }

    /// Array header against an existing descriptor; caller writes `len`
    /// member values next.
    pub fn array_ref(&mut self, desc_handle: u32, len: i32) -> u32 {
        self.u8(TC_ARRAY);
        self.reference(desc_handle);
        let h = self.take_handle();
        self.i32(len);
        h
    }
}
