//! Numerical building blocks shared by the physics modules.

pub mod linalg;
pub mod quad;
pub mod roots;
pub mod tridiag;

pub use quad::{integrate, Quadrature};
pub use roots::{bisect, brent, first_bracket};
pub use tridiag::SymTridiagonal;
