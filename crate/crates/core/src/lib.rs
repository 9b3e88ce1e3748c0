//! Numerical laboratory for the normalized ∞-heat equation `u_t = Δ∞ᴺu`.
//!
//! * [`geometry`]: space-time domains as CSG trees.
//! * [`lattice`]: lattices, sphere stencils, interpolation and field storage.
//! * [`operator`]: the monotone wide-stencil scheme, the stationary solver and the
//!   parabolic modification.
//! * [`barriers`]: closed-form barrier catalog and viscosity certificates.
//! * [`regularity`]: numerical boundary-regularity classification.

pub mod barriers;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod operator;
pub mod regularity;

pub use barriers::{BarrierForm, CertificateReport, Side, Verdict};
pub use error::{Error, Result};
pub use regularity::{RegularityReport, RegularityVerdict, Resolution, Thresholds};
pub use geometry::{BoundaryClass, BoundarySample, Region, SpaceTimePoint, SpatialDomain, TimeSide};
