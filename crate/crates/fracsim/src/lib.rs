//! Growth-based stochastic simulation of 2-D fracture networks conditioned on
//! observed traces, with sequential Gaussian simulation of segment azimuths,
//! FracPaq-style trace analysis, and a desk-scale tracer flow-and-transport
//! verification.

pub mod analyze;
pub mod config;
pub mod geometry;
pub mod growth;
pub mod io;
pub mod kriging;
pub mod network;
pub mod region;
pub mod rng;
pub mod svg;
pub mod synthetic;
pub mod transform;
pub mod transport;
pub mod variogram;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
