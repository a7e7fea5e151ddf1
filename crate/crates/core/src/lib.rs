//! Executable counterexamples to the list-shrinking step of the FKR
//! algorithm idea for digraph homomorphism problems with a weak
//! near-unanimity polymorphism.
//!
//! The crate builds small relational templates and their polymorphisms,
//! translates them into balanced digraphs, enforces (2,3)-consistency on the
//! resulting homomorphism instances, reconstructs the multi-sorted WNU family
//! on the lists and checks by exhaustive search which "Mal'tsev violation"
//! deletions lose every solution.

pub mod bits;
pub mod catalog;
pub mod cli;
pub mod consistency;
pub mod digraph;
pub mod error;
pub mod family;
pub mod format;
pub mod hom;
pub mod structures;
pub mod translation;

pub use error::{Error, Result};
