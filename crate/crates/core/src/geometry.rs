//! Boxes, bounding volumes and minimum-image distances.

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

/// Axis-aligned simulation domain with per-axis periodicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationBox {
    lo: Vec3,
    hi: Vec3,
    periodic: [bool; 3],
}

impl SimulationBox {
    pub fn new(lo: Vec3, hi: Vec3, periodic: [bool; 3]) -> Result<Self> {
        for d in 0..3 {
            if !lo[d].is_finite() || !hi[d].is_finite() {
                return Err(Error::InvalidBox(format!("non-finite bound on axis {d}")));
            }
            if hi[d] <= lo[d] {
                return Err(Error::InvalidBox(format!(
                    "hi[{d}] = {} must exceed lo[{d}] = {}",
                    hi[d], lo[d]
                )));
            }
        }
        Ok(Self { lo, hi, periodic })
    }

    /// Cube `[0, side)^3`.
    pub fn cube(side: f64, periodic: [bool; 3]) -> Result<Self> {
        Self::new([0.0; 3], [side; 3], periodic)
    }

    pub fn lo(&self) -> Vec3 {
        self.lo
    }

    pub fn hi(&self) -> Vec3 {
        self.hi
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    pub fn lengths(&self) -> Vec3 {
        [
            self.hi[0] - self.lo[0],
            self.hi[1] - self.lo[1],
            self.hi[2] - self.lo[2],
        ]
    }

    pub fn center(&self) -> Vec3 {
        [
            0.5 * (self.lo[0] + self.hi[0]),
            0.5 * (self.lo[1] + self.hi[1]),
            0.5 * (self.lo[2] + self.hi[2]),
        ]
    }

    /// Maps a coordinate into `[lo, hi)` on periodic axes; open axes are untouched.
    pub fn wrap(&self, mut p: Vec3) -> Vec3 {
        let len = self.lengths();
        for d in 0..3 {
            if self.periodic[d] {
                let mut x = p[d] - self.lo[d];
                x -= len[d] * (x / len[d]).floor();
                // rounding can land exactly on the upper face
                if x >= len[d] {
                    x = 0.0;
                }
                p[d] = self.lo[d] + x;
            }
        }
        p
    }

    /// Checks that periodic axes are at least twice `cutoff` long.
    pub fn check_cutoff(&self, cutoff: f64) -> Result<()> {
        let len = self.lengths();
        for d in 0..3 {
            if self.periodic[d] && len[d] < 2.0 * cutoff {
                return Err(Error::BoxTooSmall {
                    axis: d,
                    length: len[d],
                    cutoff,
                });
            }
        }
        Ok(())
    }
}

/// Minimum-image displacement `a - b` and its squared length.
///
/// Periodic axes are wrapped to the nearest image; open axes use the plain
/// difference. Both points must lie inside the box.
#[inline]
pub fn periodic_delta(a: Vec3, b: Vec3, bx: &SimulationBox) -> (Vec3, f64) {
    let len = bx.lengths();
    let mut dx = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    for d in 0..3 {
        if bx.periodic[d] {
            dx[d] -= len[d] * (dx[d] / len[d]).round();
        }
    }
    let d2 = dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2];
    (dx, d2)
}

/// Squared cutoff `(scale * h)^2`. Every distance criterion in the crate goes
/// through this so that oracles and the neighbor list agree bit for bit.
#[inline]
pub fn cutoff_sq(h: f64, scale: f64) -> f64 {
    let r = scale * h;
    r * r
}

/// Axis-aligned bounding box. An empty box has `lo = +inf`, `hi = -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Default for Aabb {
    fn default() -> Self {
        Self::EMPTY
    }
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        lo: [f64::INFINITY; 3],
        hi: [f64::NEG_INFINITY; 3],
    };

    pub fn new(lo: Vec3, hi: Vec3) -> Self {
        Self { lo, hi }
    }

    pub fn point(p: Vec3) -> Self {
        Self { lo: p, hi: p }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|d| self.lo[d] > self.hi[d])
    }

    pub fn insert(&mut self, p: Vec3) {
        for d in 0..3 {
            self.lo[d] = self.lo[d].min(p[d]);
            self.hi[d] = self.hi[d].max(p[d]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        for d in 0..3 {
            out.lo[d] = out.lo[d].min(other.lo[d]);
            out.hi[d] = out.hi[d].max(other.hi[d]);
        }
        out
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|d| self.lo[d] <= p[d] && p[d] <= self.hi[d])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        other.is_empty() || (self.contains(other.lo) && self.contains(other.hi))
    }

    /// Squared distance between two boxes, minimised over periodic images
    /// per axis. Infinite if either box is empty.
    pub fn dist_sq(&self, other: &Aabb, bx: &SimulationBox) -> f64 {
        if self.is_empty() || other.is_empty() {
            return f64::INFINITY;
        }
        let len = bx.lengths();
        let mut sum = 0.0;
        for d in 0..3 {
            let gap = |shift: f64| {
                let lo = other.lo[d] + shift;
                let hi = other.hi[d] + shift;
                (lo - self.hi[d]).max(self.lo[d] - hi).max(0.0)
            };
            let mut g = gap(0.0);
            if bx.periodic[d] {
                g = g.min(gap(len[d])).min(gap(-len[d]));
            }
            sum += g * g;
        }
        sum
    }
}

/// Minimum squared distance from `p` to `aabb`, using per-axis minimum-image
/// wrapping on periodic axes. Zero when `p` lies inside.
pub fn min_dist_sq(p: Vec3, aabb: &Aabb, bx: &SimulationBox) -> f64 {
    aabb.dist_sq(&Aabb::point(p), bx)
}
