//! Inverse scattering toolkit for the massive Thirring model
//!
//! ```text
//! i(u_t + u_x) + v + |v|² u = 0
//! i(v_t − v_x) + u + |u|² v = 0
//! ```
//!
//! The crate covers the direct PDE integrator ([`evolve`]), the direct
//! scattering map ([`scatter`]), exact solitons ([`solitons`]), the inverse
//! map through Beals–Coifman equations ([`inverse`]), the long-time
//! asymptotic formulas ([`asymptotics`]) and reproducible experiments
//! ([`harness`]) tying them together.

pub mod asymptotics;
pub mod cli;
pub mod common;
pub mod error;
pub mod evolve;
pub mod gamma;
pub mod harness;
pub mod inverse;
pub mod io;
pub mod scatter;
pub mod solitons;

pub use common::{Eigenpair, FieldState, Grid1D, ScatteringData, SpectralGrid, C64};
pub use error::{MtmError, Result};
