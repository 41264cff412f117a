//! Fredholm determinants and Nekrasov-type series for isomonodromic tau
//! functions on the torus with SL(2) monodromy.

pub mod error;
pub mod fredholm;
pub mod isomon;
pub mod nekrasov;
pub mod numdiff;
pub mod specfun;
pub mod threept;

pub use error::{Error, Result};
pub use num_complex::Complex64;
