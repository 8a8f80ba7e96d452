//! Indefinite theta series attached to geodesic polygons and dodecahedra.
//!
//! Exact rational predicates decide every sign; floating point only enters
//! through quadrature, majorants, and the completed (non-holomorphic) kernels.

#![no_std]

extern crate alloc;

pub mod dodec;
pub mod errfn;
pub mod lattice;
pub mod ngon;
pub mod quadratic;
pub mod quadrature;
pub mod rational;
pub mod sig12;
pub mod theta;

pub use quadratic::{FloatTolerance, NegativePlane, QuadraticSpace, SpaceError, Vector};
pub use rational::Rational;
