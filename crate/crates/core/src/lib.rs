//! Quaternionic boundary and volume integral operators on meshed domains.
//!
//! The crate discretizes the Cauchy, singular Cauchy and Teodorescu
//! operators of the Moisil-Teodorescu operator `D`, builds the monogenic
//! and Vekua-Hilbert transforms on top of them, recovers
//! Dirichlet-to-Neumann maps for the conductivity equation by P1 finite
//! elements, and solves div-curl systems.

pub mod boundary_ops;
pub mod catalog;
pub mod dense;
pub mod divcurl;
pub mod dn;
pub mod elliptic;
pub mod error;
pub mod hilbert;
pub mod mesh;
pub mod oracle;
pub mod panel;
pub mod probes;
pub mod quat;
pub mod vekua;
pub mod verify;
pub mod volume_ops;

pub use error::{Error, Result};
pub use quat::{Quaternion, Vec3};
