//! Random walks on discrete quantum groups of crossed-product type
//! `ℓ∞(Γ)⋊S` and on fusion rings, with numerical harnesses for boundary
//! invariance under the finite normal quantum subgroup `Ŝ`.

pub mod boundary;
pub mod catwalk;
pub mod crossed;
pub mod error;
pub mod fusion;
pub mod groups;

pub use error::{Error, Result};
