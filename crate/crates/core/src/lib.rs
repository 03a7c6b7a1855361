//! Certified lower bounds for the zero density of the normalized k-function
//! built from Riemann zeta zeros, and the resulting bound on sign changes of
//! `psi(x) - x`.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`zeta_data`] loads zero ordinates and derives amplitudes and frequencies.
//! * [`tail`] bounds the contribution of the zeros beyond the truncation point.
//! * [`contour`] builds the rectangular contour mesh and certifies that the
//!   truncated function stays in a half-plane along it.
//! * [`penalty`] turns the mesh into per-frequency weight functions.
//! * [`lattice`] finds small integer combinations of the projected basis
//!   with a bounded LLL and certifies the tiling bound.
//! * [`volume`] inverts the weights on a grid and evaluates the volume bound.
//! * [`pipeline`] wires the stages together from a [`config::RunConfig`].
//!
//! All numbers that feed a certified claim are [`rigor::Interval`]s.

pub mod config;
pub mod contour;
pub mod error;
pub mod lattice;
pub mod penalty;
pub mod pipeline;
pub mod report;
pub mod rigor;
pub mod tail;
pub mod volume;
pub mod zeta_data;

pub use error::{Error, Result};
pub use rigor::{Interval, RigorError};
