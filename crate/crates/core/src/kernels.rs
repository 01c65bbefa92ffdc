//! Built-in pair kernels.

use std::f64::consts::PI;
use std::marker::PhantomData;

use crate::error::KernelError;
use crate::pass::{OutputField, PairKernel, PairParticle, Real, Symmetry};

/// Cubic spline (M4) smoothing kernel with compact support `h`:
/// `W(0, h) = 8 / (pi h^3)` and `W(r, h) = 0` for `r >= h`.
pub fn cubic_spline<T: Real>(r: T, h: T) -> T {
    let one = T::one();
    let q = r / h;
    let sigma = T::from_f64(8.0 / PI) / (h * h * h);
    if q <= T::from_f64(0.5) {
        sigma * (one - T::from_f64(6.0) * q * q + T::from_f64(6.0) * q * q * q)
    } else if q <= one {
        let t = one - q;
        sigma * T::from_f64(2.0) * t * t * t
    } else {
        T::zero()
    }
}

/// Lennard-Jones force and energy with an optional Coulomb term.
///
/// Outputs `fx`, `fy`, `fz` (force on `i`) and `energy` (pair energy, summed
/// per particle so every pair is counted on both sides). With a Coulomb
/// constant the kernel reads the `charge` field.
#[derive(Debug, Clone)]
pub struct LennardJones {
    pub epsilon: f64,
    pub sigma: f64,
    pub coulomb: Option<f64>,
    inputs: Vec<String>,
    outputs: Vec<OutputField>,
}

impl LennardJones {
    pub fn new(epsilon: f64, sigma: f64) -> Self {
        Self {
            epsilon,
            sigma,
            coulomb: None,
            inputs: Vec::new(),
            outputs: vec![
                OutputField::sum("fx", Symmetry::Odd),
                OutputField::sum("fy", Symmetry::Odd),
                OutputField::sum("fz", Symmetry::Odd),
                OutputField::sum("energy", Symmetry::Even),
            ],
        }
    }

    pub fn with_coulomb(mut self, k: f64) -> Self {
        self.coulomb = Some(k);
        self.inputs = vec!["charge".to_owned()];
        self
    }
}

impl<T: Real> PairKernel<T> for LennardJones {
    fn inputs(&self) -> &[String] {
        &self.inputs
    }

    fn outputs(&self) -> &[OutputField] {
        &self.outputs
    }

    fn pair(
        &self,
        i: &PairParticle<'_, T>,
        j: &PairParticle<'_, T>,
        dx: [T; 3],
        d2: T,
        out: &mut [T],
    ) -> Result<(), KernelError> {
        if d2 == T::zero() {
            return Err(KernelError::Coincident {
                i: i.index,
                j: j.index,
            });
        }
        let eps = T::from_f64(self.epsilon);
        let s2 = T::from_f64(self.sigma * self.sigma) / d2;
        let s6 = s2 * s2 * s2;
        let s12 = s6 * s6;
        let mut scale = T::from_f64(24.0) * eps / d2 * (T::from_f64(2.0) * s12 - s6);
        let mut energy = T::from_f64(4.0) * eps * (s12 - s6);
        if let Some(k) = self.coulomb {
            let qq = T::from_f64(k) * i.inputs[0] * j.inputs[0];
            let d = d2.sqrt();
            scale = scale + qq / (d2 * d);
            energy = energy + qq / d;
        }
        out[0] = scale * dx[0];
        out[1] = scale * dx[1];
        out[2] = scale * dx[2];
        out[3] = energy;
        Ok(())
    }
}

/// SPH density `rho_i = sum_j m_j W(|x_i - x_j|, h_i)` using the `mass` field.
///
/// With `include_self` the term `m_i W(0, h_i)` is added after the reduction.
#[derive(Debug, Clone)]
pub struct SphDensity {
    pub include_self: bool,
    inputs: Vec<String>,
    outputs: Vec<OutputField>,
}

impl SphDensity {
    pub fn new(include_self: bool) -> Self {
        Self {
            include_self,
            inputs: vec!["mass".to_owned()],
            outputs: vec![OutputField::sum("rho", Symmetry::Recompute)],
        }
    }
}

impl Default for SphDensity {
    fn default() -> Self {
        Self::new(true)
    }
}

impl<T: Real> PairKernel<T> for SphDensity {
    fn inputs(&self) -> &[String] {
        &self.inputs
    }

    fn outputs(&self) -> &[OutputField] {
        &self.outputs
    }

    fn pair(
        &self,
        i: &PairParticle<'_, T>,
        j: &PairParticle<'_, T>,
        _dx: [T; 3],
        d2: T,
        out: &mut [T],
    ) -> Result<(), KernelError> {
        out[0] = j.inputs[0] * cubic_spline(d2.sqrt(), i.h);
        Ok(())
    }

    fn postamble(&self, i: &PairParticle<'_, T>, values: &mut [T], _count: usize) {
        if self.include_self {
            values[0] = values[0] + i.inputs[0] * cubic_spline(T::zero(), i.h);
        }
    }
}

/// Counts neighbors into the `count` output.
#[derive(Debug, Clone)]
pub struct NeighborCount {
    outputs: Vec<OutputField>,
}

impl Default for NeighborCount {
    fn default() -> Self {
        Self {
            outputs: vec![OutputField::sum("count", Symmetry::Even)],
        }
    }
}

impl<T: Real> PairKernel<T> for NeighborCount {
    fn inputs(&self) -> &[String] {
        &[]
    }

    fn outputs(&self) -> &[OutputField] {
        &self.outputs
    }

    fn pair(
        &self,
        _i: &PairParticle<'_, T>,
        _j: &PairParticle<'_, T>,
        _dx: [T; 3],
        _d2: T,
        out: &mut [T],
    ) -> Result<(), KernelError> {
        out[0] = T::one();
        Ok(())
    }
}

type PairFn<T> = dyn Fn(&PairParticle<'_, T>, &PairParticle<'_, T>, [T; 3], T, &mut [T]) -> Result<(), KernelError>
    + Send
    + Sync;

/// Kernel assembled from a closure.
///
/// ```
/// use sfcnb::kernels::FnKernel;
/// use sfcnb::pass::{OutputField, Symmetry};
///
/// let k = FnKernel::<f64>::new(
///     &[],
///     vec![OutputField::sum("d2", Symmetry::Even)],
///     |_i, _j, _dx, d2, out| {
///         out[0] = d2;
///         Ok(())
///     },
/// );
/// # let _ = k;
/// ```
pub struct FnKernel<T: Real> {
    inputs: Vec<String>,
    outputs: Vec<OutputField>,
    f: Box<PairFn<T>>,
    _t: PhantomData<T>,
}

impl<T: Real> FnKernel<T> {
    pub fn new<F>(inputs: &[&str], outputs: Vec<OutputField>, f: F) -> Self
    where
        F: Fn(&PairParticle<'_, T>, &PairParticle<'_, T>, [T; 3], T, &mut [T]) -> Result<(), KernelError>
            + Send
            + Sync
            + 'static,
    {
        Self {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            outputs,
            f: Box::new(f),
            _t: PhantomData,
        }
    }
}

impl<T: Real> PairKernel<T> for FnKernel<T> {
    fn inputs(&self) -> &[String] {
        &self.inputs
    }

    fn outputs(&self) -> &[OutputField] {
        &self.outputs
    }

    fn pair(
        &self,
        i: &PairParticle<'_, T>,
        j: &PairParticle<'_, T>,
        dx: [T; 3],
        d2: T,
        out: &mut [T],
    ) -> Result<(), KernelError> {
        (self.f)(i, j, dx, d2, out)
    }
}
