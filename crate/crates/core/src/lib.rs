//! Resonant-collision Boltzmann model for polyatomic gases.
//!
//! The crate evaluates the collision kinematics, the internal-energy measure,
//! cross-section families, two-temperature equilibria, the quadratic
//! collision operator and the linearized operator in direct-integral and
//! kernel form, and ships verification suites that test each identity and
//! bound against independent quadrature or Monte Carlo oracles.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod collision_op;
pub mod cross_section;
pub mod energy_law;
pub mod equilibrium;
pub mod error;
pub mod interp;
pub mod kinematics;
pub mod linearized_op;
pub mod mc;
pub mod quad;
pub mod report;
pub mod special_fn;

pub use error::{Error, Result};

/// Three-dimensional velocity.
pub type Vec3 = nalgebra::Vector3<f64>;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kinematics.md")]
    mod kinematics {}
    #[doc = include_str!("../../../book/src/equilibrium.md")]
    mod equilibrium {}
    #[doc = include_str!("../../../book/src/cross_sections.md")]
    mod cross_sections {}
    #[doc = include_str!("../../../book/src/collision_operator.md")]
    mod collision_operator {}
    #[doc = include_str!("../../../book/src/linearized_operator.md")]
    mod linearized_operator {}
    #[doc = include_str!("../../../book/src/spectrum.md")]
    mod spectrum {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
