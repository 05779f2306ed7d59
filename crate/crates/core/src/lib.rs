//! Stabilizer-free weak Galerkin finite elements for the Stokes equations
//! on polygonal meshes.
//!
//! The pipeline runs through the modules in order: [`polynomial`] and
//! [`quadrature`] primitives, [`mesh`] generation, element spaces in
//! [`local_spaces`], weak derivatives in [`weak_operators`], the global
//! saddle-point problem in [`system`], then [`manufactured`] solutions,
//! error norms in [`analysis`] and convergence runs in [`study`].
//!
//! ```
//! use wg_stokes::mesh::GridKind;
//! use wg_stokes::study::{run_study, GridSpec, StudyConfig};
//!
//! let config = StudyConfig::new(0, GridSpec::Family(GridKind::Square), [1, 2], "linear");
//! let result = run_study(&config).unwrap();
//! assert!(result.report.levels[1].errors.pressure_l2 < 1e-9);
//! ```

pub mod analysis;
pub mod error;
pub mod local_spaces;
pub mod manufactured;
pub mod mesh;
pub mod polynomial;
pub mod quadrature;
pub mod study;
pub mod system;
pub mod weak_operators;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/weak-gradient.md")]
    mod weak_gradient {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/convergence.md")]
    mod convergence {}
}
