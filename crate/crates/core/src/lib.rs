//! Exact lattice and fixed-point computations for cyclic group actions on
//! K3 surfaces and their derived partners.
//!
//! The crate is organised bottom-up:
//!
//! * [`matrix`], [`rational`]: exact integer matrices (Smith form, kernels)
//!   and rational helpers.
//! * [`lattice`], [`discriminant`], [`isometry`]: Gram-matrix lattices,
//!   discriminant forms and glue vectors, definite isometry search and
//!   genus (stable equivalence) tests.
//! * [`forms`]: even binary lattices, Gauss reduction, class enumeration,
//!   representation and genus partitions.
//! * [`cyclotomic`], [`lefschetz`]: exact arithmetic in `Q(zeta_N)` and the
//!   holomorphic / topological Lefschetz fixed-point formulas with a
//!   configuration solver.
//! * [`action`]: cyclic actions on the Mukai lattice and the invariants that
//!   equivariant derived equivalence must preserve.
//! * [`reproduce`]: end-to-end worked examples built from the above.

pub mod error;
pub mod matrix;
pub mod rational;
pub mod lattice;
pub mod discriminant;
pub mod isometry;
pub mod forms;
pub mod cyclotomic;
pub mod lefschetz;
pub mod action;
pub mod reproduce;

pub use error::{Error, Result};
pub use lattice::IntegerLattice;
pub use matrix::ZMatrix;
