//! Exact computations with ideal-valued measures, graded algebras over Novikov
//! coefficients, cubical models, centerpoint solvers and the homotopical algebra
//! of cubes, cones and telescopes.

pub mod cubes;
pub mod cubical_space;
pub mod centerpoint;
pub mod error;
pub mod field;
pub mod linalg;
pub mod graded_algebra;
pub mod ideals;
pub mod ivm_engine;
pub mod novikov;

pub use error::{Error, Result};
