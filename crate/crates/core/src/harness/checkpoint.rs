//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "SCICCKPT" | u32 format version | u64 len + UTF-8 config echo
//! u64 array count
//! per array: u64 len + UTF-8 name | u8 dtype | u32 ndim | u64 dims.. | data
//! u64 FNV-1a hash of every preceding byte | end marker "SCICDONE"
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::HarnessError;

pub const MAGIC: &[u8; 8] = b"SCICCKPT";
pub const END_MARKER: &[u8; 8] = b"SCICDONE";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    F64(Vec<f64>),
    U64(Vec<u64>),
    U8(Vec<u8>),
}

impl ArrayData {
    fn len(&self) -> usize {
        match self {
            ArrayData::F64(v) => v.len(),
            ArrayData::U64(v) => v.len(),
            ArrayData::U8(v) => v.len(),
        }
    }

    fn tag(&self) -> u8 {
        match self {
            ArrayData::F64(_) => 0,
            ArrayData::U64(_) => 1,
            ArrayData::U8(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: ArrayData,
}

/// An ordered set of named arrays plus the config text they belong to.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub config_echo: String,
    pub arrays: Vec<NamedArray>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn corrupt(msg: impl Into<String>) -> HarnessError {
    HarnessError::CorruptCheckpoint(msg.into())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], HarnessError> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| corrupt("unexpected end of file"))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, HarnessError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, HarnessError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, HarnessError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn size(&mut self) -> Result<usize, HarnessError> {
        usize::try_from(self.u64()?).map_err(|_| corrupt("size overflow"))
    }

    fn string(&mut self) -> Result<String, HarnessError> {
        let n = self.size()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| corrupt("invalid UTF-8"))
    }
}

impl Checkpoint {
    pub fn new(config_echo: impl Into<String>) -> Self {
        Self {
            config_echo: config_echo.into(),
            arrays: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize], data: ArrayData) {
        self.arrays.push(NamedArray {
            name: name.into(),
            shape: shape.to_vec(),
            data,
        });
    }

    pub fn push_f64(&mut self, name: impl Into<String>, data: &[f64]) {
        self.push(name, &[data.len()], ArrayData::F64(data.to_vec()));
    }

    pub fn push_u64(&mut self, name: impl Into<String>, data: &[u64]) {
        self.push(name, &[data.len()], ArrayData::U64(data.to_vec()));
    }

    pub fn get(&self, name: &str) -> Result<&NamedArray, HarnessError> {
        self.arrays
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| HarnessError::CheckpointMismatch(format!("missing array '{name}'")))
    }

    pub fn f64s(&self, name: &str) -> Result<&[f64], HarnessError> {
        match &self.get(name)?.data {
            ArrayData::F64(v) => Ok(v),
            _ => Err(HarnessError::CheckpointMismatch(format!("'{name}' is not f64"))),
        }
    }

    pub fn u64s(&self, name: &str) -> Result<&[u64], HarnessError> {
        match &self.get(name)?.data {
            ArrayData::U64(v) => Ok(v),
            _ => Err(HarnessError::CheckpointMismatch(format!("'{name}' is not u64"))),
        }
    }

    pub fn u8s(&self, name: &str) -> Result<&[u8], HarnessError> {
        match &self.get(name)?.data {
            ArrayData::U8(v) => Ok(v),
            _ => Err(HarnessError::CheckpointMismatch(format!("'{name}' is not u8"))),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let put_str = |out: &mut Vec<u8>, s: &str| {
            out.extend_from_slice(&(s.len() as u64).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        };
        put_str(&mut out, &self.config_echo);
        out.extend_from_slice(&(self.arrays.len() as u64).to_le_bytes());
        for a in &self.arrays {
            put_str(&mut out, &a.name);
            out.push(a.data.tag());
            out.extend_from_slice(&(a.shape.len() as u32).to_le_bytes());
            for &d in &a.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            match &a.data {
                ArrayData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                ArrayData::U64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
                ArrayData::U8(v) => out.extend_from_slice(v),
            }
        }
        let hash = fnv1a(&out);
        out.extend_from_slice(&hash.to_le_bytes());
        out.extend_from_slice(END_MARKER);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HarnessError> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..8] != MAGIC {
            return Err(corrupt("bad magic bytes"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != FORMAT_VERSION {
            return Err(HarnessError::CheckpointVersion(version));
        }
        if bytes.len() < 12 + 16 || &bytes[bytes.len() - 8..] != END_MARKER {
            return Err(corrupt("missing end marker (truncated file?)"));
        }
        let body_end = bytes.len() - 16;
        let stored = u64::from_le_bytes(bytes[body_end..body_end + 8].try_into().expect("8 bytes"));
        if fnv1a(&bytes[..body_end]) != stored {
            return Err(corrupt("checksum mismatch"));
        }
        let mut c = Cursor {
            bytes: &bytes[..body_end],
            at: 12,
        };
        let config_echo = c.string()?;
        let count = c.size()?;
        let mut arrays = Vec::new();
        for _ in 0..count {
            let name = c.string()?;
            let tag = c.u8()?;
            let ndim = c.u32()? as usize;
            let shape = (0..ndim).map(|_| c.size()).collect::<Result<Vec<_>, _>>()?;
            let n = shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| corrupt("shape overflow"))?;
            let data = match tag {
                0 => ArrayData::F64(
                    c.take(n.checked_mul(8).ok_or_else(|| corrupt("size overflow"))?)?
                        .chunks_exact(8)
                        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                        .collect(),
                ),
                1 => ArrayData::U64(
                    c.take(n.checked_mul(8).ok_or_else(|| corrupt("size overflow"))?)?
                        .chunks_exact(8)
                        .map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
                        .collect(),
                ),
                2 => ArrayData::U8(c.take(n)?.to_vec()),
                t => return Err(corrupt(format!("unknown dtype tag {t}"))),
            };
            arrays.push(NamedArray { name, shape, data });
        }
        if c.at != body_end {
            return Err(corrupt("trailing bytes before checksum"));
        }
        Ok(Self { config_echo, arrays })
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

impl NamedArray {
    pub fn element_count(&self) -> usize {
        self.data.len()
    }
}
