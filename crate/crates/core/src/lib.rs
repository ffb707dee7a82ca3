//! Numerical toolkit for the boundary region of charge-one bubbling on
//! anti-self-dual moduli spaces: quaternion algebra, the reducibility
//! decomposition of curvature matrices, closed-form instanton and glued
//! fields, intersection counting with orientation signs, and fiber integrals.

pub mod algebra;
pub mod error;
pub mod fields;
pub mod forms;
pub mod integrate;
pub mod intersect;
pub mod reducible;

pub use error::{Error, Result};
