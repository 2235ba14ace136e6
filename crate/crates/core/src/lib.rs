//! Finite element solution of the static div-curl problems of electromagnetism in
//! axisymmetric domains with reentrant edges, via Fourier decomposition in θ.

pub mod error;
pub mod fem;
pub mod io;
pub mod linalg;
pub mod manufactured;
pub mod mesh;
pub mod modal;
pub mod singular;
pub mod solver;
pub mod special;
pub mod verify;

pub use error::{Error, ErrorClass, Result};
pub use num_complex::Complex64;
