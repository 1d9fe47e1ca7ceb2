//! Tensor-table container shared by weight files and feature dumps.
//!
//! ```text
//! magic[4] | version u32 | header u32 x n | count u32 | tensors... | crc32 u32
//! tensor  = name_len u32 | name (ASCII) | rank u32 | dims u32 x rank | f32 x prod(dims)
//! ```
//!
//! All integers and floats are little-endian; the CRC-32 covers every byte before it.

use crate::error::{bail, Result};

pub const VERSION: u32 = 1;
pub(crate) const MAX_NAME_LEN: usize = 256;
pub(crate) const MAX_RANK: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, dims: Vec<usize>, data: Vec<f32>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Self { name: name.into(), dims, data }
    }
}

/// Serializes a full container, CRC included.
pub fn encode(magic: &[u8; 4], header: &[u32], tensors: &[Tensor]) -> Vec<u8> {
    let payload: usize = tensors.iter().map(|t| 12 + t.name.len() + 4 * t.dims.len() + 4 * t.data.len()).sum();
    let mut out = Vec::with_capacity(16 + 4 * header.len() + payload);
    out.extend_from_slice(magic);
    put_u32(&mut out, VERSION);
    for &h in header {
        put_u32(&mut out, h);
    }
    put_u32(&mut out, tensors.len() as u32);
    for t in tensors {
        put_u32(&mut out, t.name.len() as u32);
        out.extend_from_slice(t.name.as_bytes());
        put_u32(&mut out, t.dims.len() as u32);
        for &d in &t.dims {
            put_u32(&mut out, d as u32);
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    out
}

/// Parses a container, checking magic, version and CRC before anything else.
/// Returns the `header_len` header words and the tensors in file order.
pub fn decode(bytes: &[u8], magic: &[u8; 4], header_len: usize) -> Result<(Vec<u32>, Vec<Tensor>)> {
    if bytes.len() < 12 {
        bail!(Format, "file is {} bytes, too short for a header", bytes.len());
    }
    if &bytes[..4] != magic {
        bail!(Format, "bad magic {:?}, expected {:?}", ascii(&bytes[..4]), ascii(magic));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4-byte trailer"));
    let version = u32::from_le_bytes(body[4..8].try_into().expect("4-byte version"));
    if version != VERSION {
        bail!(Format, "unsupported format version {version}, expected {VERSION}");
    }
    let actual = crc32fast::hash(body);
    if stored != actual {
        bail!(Format, "CRC mismatch: stored {stored:#010x}, computed {actual:#010x}");
    }

    let mut r = Reader { bytes: body, pos: 8 };
    let header = (0..header_len).map(|_| r.u32("header")).collect::<Result<Vec<_>>>()?;
    let count = r.u32("tensor count")? as usize;
    // Each tensor needs at least 8 bytes, which bounds the preallocation.
    if count > r.remaining() / 8 {
        bail!(Format, "tensor count {count} exceeds what {} remaining bytes can hold", r.remaining());
    }
    let mut tensors = Vec::with_capacity(count);
    for i in 0..count {
        tensors.push(r.tensor(i)?);
    }
    if r.remaining() != 0 {
        bail!(Format, "{} trailing bytes after the tensor table", r.remaining());
    }
    Ok((header, tensors))
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn ascii(bytes: &[u8]) -> String {
    bytes.escape_ascii().to_string()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if n > self.remaining() {
            bail!(Format, "truncated while reading {what}: need {n} bytes at offset {}, {} left", self.pos, self.remaining());
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn tensor(&mut self, index: usize) -> Result<Tensor> {
        let name_len = self.u32("name length")? as usize;
        if name_len == 0 || name_len > MAX_NAME_LEN {
            bail!(Format, "tensor {index}: name length {name_len} out of range 1..={MAX_NAME_LEN}");
        }
        let raw = self.take(name_len, "tensor name")?;
        if !raw.iter().all(|b| b.is_ascii_graphic()) {
            bail!(Format, "tensor {index}: name {:?} is not printable ASCII", ascii(raw));
        }
        let name = String::from_utf8(raw.to_vec()).expect("ASCII is UTF-8");
        let rank = self.u32("rank")? as usize;
        if rank == 0 || rank > MAX_RANK {
            bail!(Format, "tensor {name}: rank {rank} out of range 1..={MAX_RANK}");
        }
        let mut dims = Vec::with_capacity(rank);
        let mut len = 1usize;
        for _ in 0..rank {
            let d = self.u32("dimension")? as usize;
            dims.push(d);
            len = len.saturating_mul(d);
        }
        if len.saturating_mul(4) > self.remaining() {
            bail!(Format, "tensor {name}: shape {dims:?} needs {} payload bytes, {} left", len.saturating_mul(4), self.remaining());
        }
        let data = self
            .take(4 * len, "payload")?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Ok(Tensor { name, dims, data })
    }
}
