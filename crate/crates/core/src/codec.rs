//! Nibble-based delta compression for sorted index lists.
//!
//! A strictly increasing list is turned into differences (the first element
//! is taken relative to -1, so every difference is at least 1). Differences
//! are grouped into blocks of `w` values. Per block:
//!
//! * a `w`-bit mask; bit `k` is set iff difference `k` is not 1,
//! * one info nibble per set bit: `v + 6` for `v` in `2..=9`, otherwise the
//!   number of data nibbles minus one,
//! * the data nibbles of every value above 9, most significant nibble first.
//!
//! A difference of 1 costs one bit, 2..=9 cost five, larger values cost
//! `1 + 4 + 4 * nibbles` bits.
//!
//! # Serialized block layout
//!
//! `w / 8` mask bytes (little endian, element `k` is bit `k`), then the info
//! nibbles followed by the data nibbles, packed two per byte with the
//! earlier nibble in the low half, zero-padded to a byte boundary at the end
//! of the block. The final block of a list may hold fewer than `w` values;
//! its unused mask bits are zero but it still spends `w / 8` mask bytes.
//! The element count is not part of the stream and must be supplied to the
//! decoder.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("input is not strictly increasing at position {index}")]
    NotIncreasing { index: usize },

    #[error("difference at position {index} is zero")]
    ZeroDifference { index: usize },

    #[error("first index {value} cannot be encoded (difference exceeds 2^32 - 1)")]
    FirstTooLarge { value: u32 },

    #[error("block of {len} values exceeds block width {w}")]
    BlockTooLong { len: usize, w: usize },

    #[error("unsupported block width {0}")]
    InvalidBlockWidth(usize),

    #[error("stream truncated at byte offset {offset}")]
    Truncated { offset: usize },

    #[error("corrupt stream at byte offset {offset}: {reason}")]
    Corrupt { offset: usize, reason: &'static str },
}

type Result<T> = std::result::Result<T, CodecError>;

/// Differences of a strictly increasing list; the first element is
/// `indices[0] + 1`.
pub fn delta_encode(indices: &[u32]) -> Result<Vec<u32>> {
    let mut out = Vec::with_capacity(indices.len());
    let mut prev: Option<u32> = None;
    for (k, &v) in indices.iter().enumerate() {
        let d = match prev {
            None => v.checked_add(1).ok_or(CodecError::FirstTooLarge { value: v })?,
            Some(p) if v > p => v - p,
            Some(_) => return Err(CodecError::NotIncreasing { index: k }),
        };
        out.push(d);
        prev = Some(v);
    }
    Ok(out)
}

/// Inverse of [`delta_encode`].
pub fn delta_decode(diffs: &[u32]) -> Result<Vec<u32>> {
    let mut total = 0u64;
    diffs
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            if d == 0 {
                return Err(CodecError::ZeroDifference { index: k });
            }
            total += d as u64;
            u32::try_from(total - 1).map_err(|_| CodecError::Corrupt {
                offset: 0,
                reason: "index overflows 32 bits",
            })
        })
        .collect()
}

fn nibble_count(v: u32) -> u32 {
    (32 - v.leading_zeros()).div_ceil(4)
}

/// Storage cost of one difference in bits, mask bit included.
pub fn encoded_size_bits(v: u32) -> Result<u32> {
    match v {
        0 => Err(CodecError::ZeroDifference { index: 0 }),
        1 => Ok(1),
        2..=9 => Ok(5),
        _ => Ok(1 + 4 + 4 * nibble_count(v)),
    }
}

/// Stream VByte cost of a 32-bit value: two control bits plus 1 to 4 bytes.
pub fn stream_vbyte_size_bits(v: u32) -> u32 {
    let bytes = match v {
        0..=0xff => 1,
        0x100..=0xffff => 2,
        0x1_0000..=0xff_ffff => 3,
        _ => 4,
    };
    2 + 8 * bytes
}

/// Cost in the neighbor-list scheme of Band et al.: 2 bits for 1 and 2,
/// 10 bits up to 2^8, 34 bits up to 2^32.
pub fn band_size_bits(v: u64) -> Result<u32> {
    match v {
        0 => Err(CodecError::ZeroDifference { index: 0 }),
        1 | 2 => Ok(2),
        3..=256 => Ok(10),
        257..=0x1_0000_0000 => Ok(34),
        _ => Err(CodecError::Corrupt {
            offset: 0,
            reason: "value exceeds 2^32",
        }),
    }
}

/// Logical content of one compressed block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedBlock {
    pub len: usize,
    pub width: usize,
    /// Bit `k` set iff difference `k` is not 1.
    pub bitmask: u64,
    pub info: Vec<u8>,
    pub data: Vec<u8>,
}

impl EncodedBlock {
    /// The mask written with element 0 leftmost over `width` bits.
    pub fn bitmask_string(&self) -> String {
        (0..self.width)
            .map(|k| if self.bitmask >> k & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn size_bits(&self) -> usize {
        self.width + 4 * (self.info.len() + self.data.len())
    }

    pub fn decode(&self) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(self.len);
        let mut info = self.info.iter();
        let mut data = self.data.iter();
        for k in 0..self.len {
            if self.bitmask >> k & 1 == 0 {
                out.push(1);
                continue;
            }
            let eta = *info.next().ok_or(CodecError::Truncated { offset: 0 })?;
            out.push(value_from_nibbles(eta, || data.next().copied(), 0)?);
        }
        Ok(out)
    }
}

fn value_from_nibbles(
    eta: u8,
    mut next: impl FnMut() -> Option<u8>,
    offset: usize,
) -> Result<u32> {
    if eta >= 8 {
        return Ok(eta as u32 - 6);
    }
    let mut v = 0u32;
    for _ in 0..=eta {
        let nib = next().ok_or(CodecError::Truncated { offset })?;
        v = v << 4 | nib as u32;
    }
    if v == 0 {
        return Err(CodecError::Corrupt {
            offset,
            reason: "zero difference",
        });
    }
    Ok(v)
}

/// Compresses up to `w` differences (`1 <= w <= 64`).
pub fn encode_block(diffs: &[u32], w: usize) -> Result<EncodedBlock> {
    if w == 0 || w > 64 {
        return Err(CodecError::InvalidBlockWidth(w));
    }
    if diffs.len() > w {
        return Err(CodecError::BlockTooLong { len: diffs.len(), w });
    }
    let mut block = EncodedBlock {
        len: diffs.len(),
        width: w,
        bitmask: 0,
        info: Vec::new(),
        data: Vec::new(),
    };
    for (k, &v) in diffs.iter().enumerate() {
        match v {
            0 => return Err(CodecError::ZeroDifference { index: k }),
            1 => {}
            2..=9 => {
                block.bitmask |= 1 << k;
                block.info.push(v as u8 + 6);
            }
            _ => {
                block.bitmask |= 1 << k;
                let nibbles = nibble_count(v);
                block.info.push(nibbles as u8 - 1);
                for s in (0..nibbles).rev() {
                    block.data.push((v >> (4 * s) & 0xf) as u8);
                }
            }
        }
    }
    Ok(block)
}

fn check_serial_width(w: usize) -> Result<()> {
    if w == 0 || w > 64 || !w.is_multiple_of(8) {
        Err(CodecError::InvalidBlockWidth(w))
    } else {
        Ok(())
    }
}

fn serialize_block(block: &EncodedBlock, out: &mut Vec<u8>) {
    out.extend_from_slice(&block.bitmask.to_le_bytes()[..block.width / 8]);
    let mut nibbles = block.info.iter().chain(block.data.iter());
    while let Some(&lo) = nibbles.next() {
        let hi = nibbles.next().copied().unwrap_or(0);
        out.push(lo | hi << 4);
    }
}

/// A serialized compressed list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedList {
    pub count: usize,
    pub width: usize,
    pub bytes: Vec<u8>,
}

impl EncodedList {
    pub fn byte_len(&self) -> usize {
        self.bytes.len()
    }

    pub fn decode(&self) -> Result<Vec<u32>> {
        decode(&self.bytes, self.count, self.width)
    }
}

/// Compresses a strictly increasing list with block width `w`
/// (a multiple of 8, at most 64).
pub fn encode(indices: &[u32], w: usize) -> Result<EncodedList> {
    let mut bytes = Vec::new();
    encode_into(indices, w, &mut bytes)?;
    Ok(EncodedList {
        count: indices.len(),
        width: w,
        bytes,
    })
}

/// Appends the compressed stream of `indices` to `out`.
pub fn encode_into(indices: &[u32], w: usize, out: &mut Vec<u8>) -> Result<()> {
    check_serial_width(w)?;
    let diffs = delta_encode(indices)?;
    for chunk in diffs.chunks(w) {
        serialize_block(&encode_block(chunk, w)?, out);
    }
    Ok(())
}

/// Decompresses `count` indices; the stream must be consumed exactly.
pub fn decode(bytes: &[u8], count: usize, w: usize) -> Result<Vec<u32>> {
    let mut dec = Decoder::new(bytes, count, w)?;
    let out = dec.by_ref().collect::<Result<Vec<_>>>()?;
    if dec.position() != bytes.len() {
        return Err(CodecError::Corrupt {
            offset: dec.position(),
            reason: "trailing bytes",
        });
    }
    Ok(out)
}

/// Streaming decoder yielding one index at a time, one block decoded ahead.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    remaining: usize,
    width: usize,
    total: u64,
    buf: [u32; 64],
    buf_len: usize,
    buf_idx: usize,
    failed: bool,
}

impl<'a> Decoder<'a> {
    pub fn new(bytes: &'a [u8], count: usize, w: usize) -> Result<Self> {
        check_serial_width(w)?;
        Ok(Self {
            bytes,
            pos: 0,
            remaining: count,
            width: w,
            total: 0,
            buf: [0; 64],
            buf_len: 0,
            buf_idx: 0,
            failed: false,
        })
    }

    /// Byte offset just past the last fully decoded block.
    pub fn position(&self) -> usize {
        self.pos
    }

    fn nibble(&self, start: usize, idx: usize) -> Result<u8> {
        let offset = start + idx / 2;
        let byte = *self
            .bytes
            .get(offset)
            .ok_or(CodecError::Truncated { offset })?;
        Ok(if idx.is_multiple_of(2) { byte & 0xf } else { byte >> 4 })
    }

    fn next_block(&mut self) -> Result<()> {
        let len = self.remaining.min(self.width);
        let mask_bytes = self.width / 8;
        let mask_end = self.pos + mask_bytes;
        if mask_end > self.bytes.len() {
            return Err(CodecError::Truncated {
                offset: self.bytes.len(),
            });
        }
        let mut raw = [0u8; 8];
        raw[..mask_bytes].copy_from_slice(&self.bytes[self.pos..mask_end]);
        let mask = u64::from_le_bytes(raw);
        if len < 64 && mask >> len != 0 {
            return Err(CodecError::Corrupt {
                offset: self.pos,
                reason: "mask bits set beyond block length",
            });
        }
        let n_info = mask.count_ones() as usize;
        let mut data_idx = n_info;
        let mut info_idx = 0;
        for k in 0..len {
            let d = if mask >> k & 1 == 0 {
                1
            } else {
                let eta = self.nibble(mask_end, info_idx)?;
                info_idx += 1;
                let mut err = None;
                let offset = mask_end + data_idx / 2;
                let v = value_from_nibbles(
                    eta,
                    || match self.nibble(mask_end, data_idx) {
                        Ok(nib) => {
                            data_idx += 1;
                            Some(nib)
                        }
                        Err(e) => {
                            err = Some(e);
                            None
                        }
                    },
                    offset,
                );
                if let Some(e) = err {
                    return Err(e);
                }
                v?
            };
            self.total += d as u64;
            if self.total - 1 > u32::MAX as u64 {
                return Err(CodecError::Corrupt {
                    offset: self.pos,
                    reason: "index overflows 32 bits",
                });
            }
            self.buf[k] = (self.total - 1) as u32;
        }
        // info nibbles not consumed by set bits cannot exist: n_info == info_idx
        debug_assert_eq!(info_idx, n_info);
        self.pos = mask_end + data_idx.div_ceil(2);
        self.remaining -= len;
        self.buf_len = len;
        self.buf_idx = 0;
        Ok(())
    }
}

impl Iterator for Decoder<'_> {
    type Item = Result<u32>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        if self.buf_idx == self.buf_len {
            if self.remaining == 0 {
                return None;
            }
            if let Err(e) = self.next_block() {
                self.failed = true;
                return Some(Err(e));
            }
        }
        let v = self.buf[self.buf_idx];
        self.buf_idx += 1;
        Some(Ok(v))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.remaining + self.buf_len - self.buf_idx;
        if self.failed {
            (0, Some(0))
        } else {
            (0, Some(n))
        }
    }
}
