//! Numerical laboratory for ε-families of smooth functions: mollifiers and
//! microscopic shock profiles, asymptotic order and association tests, jump
//! conditions for nonconservative systems under mixed strong/weak statements,
//! and finite-difference shock experiments.

pub mod error;
pub mod fdlab;
pub mod genfun;
pub mod cases;
pub mod jumpcalc;
pub mod numerics;
pub mod profiles;
pub mod quadrature;

pub use error::{Error, Result};
