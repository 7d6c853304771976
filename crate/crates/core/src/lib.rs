//! Hamiltonian and Lagrangian geometry of the focusing nonlinear Schrödinger
//! equation `i u_t = −½ u_xx − |u|^(p−1) u` on a periodic grid.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod collective;
pub mod error;
pub mod grid;
pub mod group;
pub mod hamiltonian;
pub mod io;
pub mod noether;
pub mod presymplectic;
pub mod propagator;
pub mod samples;

pub use error::{NlsError, Result};
pub use grid::{inner, omega, spectral_derivative, ExtTangent, Field, Grid};
pub use hamiltonian::{NonlinearityPower, Trajectory};
