//! Hilbert keys and space-filling-curve ordering.
//!
//! The curve is the transpose-form 3D Hilbert curve of J. Skilling
//! ("Programming the Hilbert curve", 2004). The transposed coordinates are
//! interleaved with axis 0 holding the most significant bit of every triple,
//! so the top three bits of a key select the octant, the next three the
//! sub-octant, and so on. Any key prefix therefore names a cube of the grid,
//! which is what the octree relies on.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{SimulationBox, Vec3};
use crate::particles::ParticleSet;

pub const MAX_BITS: u32 = 21;
pub const DEFAULT_BITS: u32 = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct HilbertKey(pub u64);

impl HilbertKey {
    pub fn value(self) -> u64 {
        self.0
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if (1..=MAX_BITS).contains(&bits) {
        Ok(())
    } else {
        Err(Error::InvalidBits(bits))
    }
}

/// Maps a position onto the `2^bits` grid of the box.
///
/// Positions on periodic axes are wrapped first; positions on the upper face
/// of an open axis land in the last cell.
pub fn grid_coords(pos: Vec3, bx: &SimulationBox, bits: u32) -> Result<[u32; 3]> {
    check_bits(bits)?;
    if pos.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite { index: 0 });
    }
    let pos = bx.wrap(pos);
    let (lo, len) = (bx.lo(), bx.lengths());
    let cells = (1u64 << bits) as f64;
    let max = (1u32 << bits) - 1;
    let mut out = [0u32; 3];
    for d in 0..3 {
        let t = ((pos[d] - lo[d]) / len[d] * cells).floor();
        out[d] = if t <= 0.0 { 0 } else { (t as u64).min(max as u64) as u32 };
    }
    Ok(out)
}

pub fn hilbert_encode(ix: u32, iy: u32, iz: u32, bits: u32) -> Result<HilbertKey> {
    check_bits(bits)?;
    for c in [ix, iy, iz] {
        if c >> bits != 0 {
            return Err(Error::GridOutOfRange { coord: c, bits });
        }
    }
    let mut x = [ix, iy, iz];
    axes_to_transpose(&mut x, bits);
    let mut key = 0u64;
    for b in (0..bits).rev() {
        for c in x {
            key = (key << 1) | ((c >> b) & 1) as u64;
        }
    }
    Ok(HilbertKey(key))
}

pub fn hilbert_decode(key: HilbertKey, bits: u32) -> Result<[u32; 3]> {
    check_bits(bits)?;
    if key.0 >> (3 * bits) != 0 {
        return Err(Error::GridOutOfRange {
            coord: (key.0 >> (3 * bits)) as u32,
            bits,
        });
    }
    let mut x = [0u32; 3];
    for b in (0..bits).rev() {
        let triple = key.0 >> (3 * b);
        x[0] |= (((triple >> 2) & 1) as u32) << b;
        x[1] |= (((triple >> 1) & 1) as u32) << b;
        x[2] |= ((triple & 1) as u32) << b;
    }
    transpose_to_axes(&mut x, bits);
    Ok(x)
}

fn axes_to_transpose(x: &mut [u32; 3], bits: u32) {
    let m = 1u32 << (bits - 1);
    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..3 {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }
    // Gray encode
    x[1] ^= x[0];
    x[2] ^= x[1];
    let mut t = 0;
    let mut q = m;
    while q > 1 {
        if x[2] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for c in x.iter_mut() {
        *c ^= t;
    }
}

fn transpose_to_axes(x: &mut [u32; 3], bits: u32) {
    let n = 2u32 << (bits - 1);
    // Gray decode
    let t = x[2] >> 1;
    x[2] ^= x[1];
    x[1] ^= x[0];
    x[0] ^= t;
    let mut q = 2u32;
    while q != n {
        let p = q - 1;
        for i in (0..3).rev() {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q <<= 1;
    }
}

/// Keys sorted along the curve plus the permutation `sorted slot -> original index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SfcOrder {
    pub keys: Vec<HilbertKey>,
    pub perm: Vec<usize>,
    pub bits: u32,
}

impl SfcOrder {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Reorders a per-particle array into curve order.
    pub fn apply<T: Copy>(&self, values: &[T]) -> Vec<T> {
        self.perm.iter().map(|&i| values[i]).collect()
    }

    /// Scatters curve-ordered values back to the original particle order.
    pub fn unapply<T: Copy + Default>(&self, sorted: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); sorted.len()];
        for (slot, &orig) in self.perm.iter().enumerate() {
            out[orig] = sorted[slot];
        }
        out
    }
}

/// Computes Hilbert keys of all particles and a stable sort along the curve.
/// Ties keep the original index order.
pub fn sort_by_sfc(ps: &ParticleSet, bx: &SimulationBox, bits: u32) -> Result<SfcOrder> {
    check_bits(bits)?;
    let keys = (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let [ix, iy, iz] = grid_coords(ps.pos(i), bx, bits).map_err(|e| match e {
                Error::NonFinite { .. } => Error::NonFinite { index: i },
                e => e,
            })?;
            hilbert_encode(ix, iy, iz, bits)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut perm: Vec<usize> = (0..ps.len()).collect();
    perm.par_sort_by_key(|&i| (keys[i], i));
    let keys = perm.iter().map(|&i| keys[i]).collect();
    Ok(SfcOrder { keys, perm, bits })
}
