use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{SimulationBox, Vec3};

/// Structure-of-arrays particle data: coordinates, interaction radii and
/// named per-particle payload fields (mass, charge, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
    h: Vec<f64>,
    fields: BTreeMap<String, Vec<f64>>,
}

impl ParticleSet {
    /// Validates the arrays against `bx`. Coordinates on periodic axes are
    /// wrapped into the box; coordinates outside on open axes are rejected.
    pub fn new(
        mut x: Vec<f64>,
        mut y: Vec<f64>,
        mut z: Vec<f64>,
        h: Vec<f64>,
        bx: &SimulationBox,
    ) -> Result<Self> {
        let n = x.len();
        for (name, len) in [("y", y.len()), ("z", z.len()), ("h", h.len())] {
            if len != n {
                return Err(Error::LengthMismatch {
                    name: name.into(),
                    expected: n,
                    found: len,
                });
            }
        }
        let (lo, hi) = (bx.lo(), bx.hi());
        for i in 0..n {
            let p = [x[i], y[i], z[i]];
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::NonFinite { index: i });
            }
            let w = bx.wrap(p);
            for d in 0..3 {
                if !bx.periodic()[d] && (w[d] < lo[d] || w[d] > hi[d]) {
                    return Err(Error::OutsideBox { index: i, axis: d });
                }
            }
            x[i] = w[0];
            y[i] = w[1];
            z[i] = w[2];
            if !(h[i] > 0.0 && h[i].is_finite()) {
                return Err(Error::InvalidRadius {
                    index: i,
                    radius: h[i],
                });
            }
        }
        Ok(Self {
            x,
            y,
            z,
            h,
            fields: BTreeMap::new(),
        })
    }

    pub fn from_positions(pos: &[Vec3], h: Vec<f64>, bx: &SimulationBox) -> Result<Self> {
        let x = pos.iter().map(|p| p[0]).collect();
        let y = pos.iter().map(|p| p[1]).collect();
        let z = pos.iter().map(|p| p[2]).collect();
        Self::new(x, y, z, h, bx)
    }

    /// Adds or replaces a payload field.
    pub fn with_field(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.set_field(name, values)?;
        Ok(self)
    }

    pub fn set_field(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                name: name.into(),
                expected: self.len(),
                found: values.len(),
            });
        }
        self.fields.insert(name.to_owned(), values);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn pos(&self, i: usize) -> Vec3 {
        [self.x[i], self.y[i], self.z[i]]
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn max_h(&self) -> f64 {
        self.h.iter().copied().fold(0.0, f64::max)
    }

    pub fn field(&self, name: &str) -> Result<&[f64]> {
        self.fields
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingField(name.to_owned()))
    }

    pub fn field_names(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(String::as_str)
    }

    /// Returns the set reordered so that slot `k` holds particle `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> ParticleSet {
        assert_eq!(perm.len(), self.len(), "permutation length mismatch");
        let take = |v: &Vec<f64>| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        ParticleSet {
            x: take(&self.x),
            y: take(&self.y),
            z: take(&self.z),
            h: take(&self.h),
            fields: self
                .fields
                .iter()
                .map(|(k, v)| (k.clone(), take(v)))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_inputs() {
        let bx = SimulationBox::cube(1.0, [false; 3]).unwrap();
        let err = ParticleSet::new(vec![0.5], vec![0.5], vec![], vec![0.1], &bx).unwrap_err();
        assert!(matches!(err, Error::LengthMismatch { .. }));
        let err = ParticleSet::new(vec![1.5], vec![0.5], vec![0.5], vec![0.1], &bx).unwrap_err();
        assert!(matches!(err, Error::OutsideBox { index: 0, axis: 0 }));
        let err = ParticleSet::new(vec![0.5], vec![0.5], vec![0.5], vec![0.0], &bx).unwrap_err();
        assert!(matches!(err, Error::InvalidRadius { .. }));
        let err =
            ParticleSet::new(vec![f64::NAN], vec![0.5], vec![0.5], vec![0.1], &bx).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 0 }));
    }

    #[test]
    fn wraps_periodic_axes() {
        let bx = SimulationBox::cube(1.0, [true, false, false]).unwrap();
        let ps = ParticleSet::new(vec![1.25], vec![0.5], vec![0.5], vec![0.1], &bx).unwrap();
        assert!((ps.pos(0)[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn permutes_all_arrays() {
        let bx = SimulationBox::cube(1.0, [false; 3]).unwrap();
        let ps = ParticleSet::new(
            vec![0.1, 0.2, 0.3],
            vec![0.0; 3],
            vec![0.0; 3],
            vec![1.0, 2.0, 3.0],
            &bx,
        )
        .unwrap()
        .with_field("m", vec![10.0, 20.0, 30.0])
        .unwrap();
        let p = ps.permuted(&[2, 0, 1]);
        assert_eq!(p.x(), &[0.3, 0.1, 0.2]);
        assert_eq!(p.h(), &[3.0, 1.0, 2.0]);
        assert_eq!(p.field("m").unwrap(), &[30.0, 10.0, 20.0]);
        assert!(matches!(p.field("q"), Err(Error::MissingField(_))));
    }
}
