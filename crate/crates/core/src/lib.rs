//! Numerical laboratory for nonlocal seminorms of functions with jumps.
//!
//! The crate evaluates Gagliardo and Besov type seminorms, kernel weighted
//! double integrals, directional variations and mollified energies at a fixed
//! scale, sweeps them as the scale goes to zero and compares the extrapolated
//! limits with exact jump-set quantities.
//!
//! Every functional returns the q-th power of the seminorm it estimates.

pub mod error;
pub mod fields;
pub mod geometry;
pub mod jumps;
pub mod kernels;
pub mod limits;
pub mod mollifiers;
pub mod parallel;
pub mod quadrature;
pub mod seminorms;

pub use error::{Error, Result};
pub use fields::{Field, GridSpec, Vals, MAX_COMPONENTS};
pub use geometry::{Point, Region};
pub use kernels::{Epsilon, KernelKind, RadialKernelFamily};
pub use mollifiers::{MollifierKind, MollifierSpec};
pub use quadrature::{QuadBudget, QuadResult, SphereRule};
