//! Bures / statistical-distinguishability geometry of Eggeling–Werner (EW)
//! tripartite states.
//!
//! An EW state on `(C^d)^{⊗3}` is fixed by five real parameters
//! `(r₋, r₊, r₁, r₂, r₃)` with `r₀ = 1 − r₋ − r₊`. This crate holds the
//! allocation-light, IO-free part of the toolkit:
//!
//! - [`point`]: parameter validation, the spherical chart and the spectrum.
//! - [`metric`]: closed-form SD metric tensors and volume elements.
//! - [`curvature`]: finite-difference Ricci scalar of an arbitrary metric field.
//! - [`region`]: polynomial-inequality separability regions and cross-section rasters.
//! - [`montecarlo`]: rejection sampling and SD-weighted probability estimation.
//! - [`boundary`]: boundary-area ratio estimation.
//! - [`quadrature`]: adaptive Gauss–Kronrod integration of the reduced densities.
//!
//! All tensors use the SD normalization (four times Bures) unless a function
//! says otherwise.
//!
//! The crate is `no_std` and only needs `alloc`. The density-matrix oracle,
//! file formats and the CLI live in the `ewgeo` companion crate.

#![no_std]
#![forbid(unsafe_code)]
// Quadrature tables keep their published digits; `!(x > y)` comparisons are
// deliberate so that NaN fails them.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod boundary;
pub mod curvature;
mod error;
pub mod metric;
pub mod montecarlo;
pub mod point;
pub mod quadrature;
pub mod region;
pub mod rng;

pub use error::{Error, Result};
pub use metric::{Coord, MetricTensor, VolumeElementCase};
pub use point::{EWPoint, Multiplicities, SphericalPoint, Spectrum};
pub use region::RegionSpec;
