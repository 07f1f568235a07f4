//! Secure, private and rateless distributed matrix multiplication over a
//! prime field, with Freivalds-style integrity checks.

pub mod error;
pub mod field;
pub mod fountain;
pub mod matgf;
pub mod polymat;
pub mod rng;
pub mod scheme;
pub mod security;
pub mod sim;

pub use error::{Error, Result};
pub use field::{FieldElement, PrimeModulus};
pub use matgf::FqMatrix;
pub use rng::SeededRng;
