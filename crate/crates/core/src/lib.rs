//! Deformation tensors, mutual invariants and Hamiltonian dynamics of systems
//! of affinely-rigid bodies.

pub mod check;
pub mod cli;
pub mod deformation;
pub mod dynamics;
pub mod error;
pub mod kinematics;
pub mod multibody;
pub mod mutual;
pub mod sampling;
pub mod spaces;

pub use error::{Error, Result};
