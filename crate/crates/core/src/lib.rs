//! Area-preserving pseudo-rotations of the two-torus.
//!
//! The crate covers Diophantine arithmetic of rotation vectors, exact
//! generator-based torus diffeomorphisms, rotation and deviation
//! measurement, displacement and first-return checks, centralizer tools and
//! a stage-by-stage Anosov-Katok construction of a pseudo-rotation with
//! bounded mean motion that is not linearizable.

pub mod anosovkatok;
pub mod centralizer;
pub mod diophantine;
pub mod displacement;
pub mod real;
pub mod rotation;
pub mod sampling;
pub mod torusmap;

pub use real::{Exact, Hp, Real};
pub use torusmap::{AreaPreservingMap, Generator, GridSpec, PeriodicProfile};
