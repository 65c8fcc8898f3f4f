//! Numerical certification of the reduction of the `U(N)` Laplacian, restricted
//! to spin-projected functions on a Hermann double coset, to a spin
//! Calogero-Sutherland operator of type `BC_n`.

pub mod error;
pub mod lie;
pub mod oracle;
pub mod polar;
pub mod fock;
pub mod kks;

pub use error::{Error, Result};
pub use lie::{AntiHerm, CaseTag, GPair, RadialPoint, Scheme};
