//! Desk-scale machinery for the lower tail of the KPZ equation through the
//! stochastic Airy operator: Riccati-transform eigenvalue counting on
//! sampled Brownian paths, finite-difference spectral oracles under three
//! boundary conditions, the closed-form lower-tail rate function with its
//! variational characterization, and importance-sampled Monte Carlo
//! estimates of the Airy-point-process exponential moment.

pub mod brownian;
pub mod cli;
pub mod cost;
pub mod error;
pub mod estimator;
pub mod grid;
pub mod oracle;
pub mod rate;
pub mod riccati;
pub mod validate;

pub use error::{Error, Result};
