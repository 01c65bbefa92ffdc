//! Neighbor lists for short-range particle interactions, built on a
//! Hilbert-curve ordering with clustered, delta-compressed storage.
//!
//! Typical use: [`nblist::sort_and_build`] then [`pass::reduce`] with a
//! kernel from [`kernels`] or a [`kernels::FnKernel`].

pub mod baselines;
pub mod bench;
pub mod cluster;
pub mod codec;
pub mod error;
pub mod geometry;
pub mod kernels;
pub mod nblist;
pub mod octree;
pub mod particles;
pub mod pass;
pub mod sfc;

pub use error::{Error, KernelError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/particles.md")]
    mod particles {}
    #[doc = include_str!("../../../book/src/curve.md")]
    mod curve {}
    #[doc = include_str!("../../../book/src/octree.md")]
    mod octree {}
    #[doc = include_str!("../../../book/src/clusters.md")]
    mod clusters {}
    #[doc = include_str!("../../../book/src/codec.md")]
    mod codec {}
    #[doc = include_str!("../../../book/src/store.md")]
    mod store {}
    #[doc = include_str!("../../../book/src/pass.md")]
    mod pass {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/bench.md")]
    mod bench {}
}
