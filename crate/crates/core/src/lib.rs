//! Causal geometry of globally hyperbolic conformally flat domains in the
//! universal cover of Einstein universe, discretized over round-sphere grids.
//!
//! The crate is organised bottom-up:
//!
//! * [`sphere`]: unit points, geodesic distance and S¹/S² grids;
//! * [`cover`]: points of Sⁿ⁻¹ × ℝ, causal relations, σ and δ, the Klein model;
//! * [`field`]: node-wise fields, 1-Lipschitz checks and distance envelopes;
//! * [`domain`]: causally convex domains, Cauchy surfaces, developments and shadows;
//! * [`duality`]: duals of achronal sets;
//! * [`maximality`]: eikonal envelopes and C⁰-maximal extensions;
//! * [`enveloping`]: enveloping spaces over immersed bases;
//! * [`io`]: the JSON file formats;
//! * [`generate`]: random instances for tests and oracles.

pub mod cover;
pub mod domain;
pub mod duality;
pub mod enveloping;
pub mod error;
pub mod field;
pub mod generate;
pub mod io;
pub mod maximality;
pub mod paths;
pub mod rng;
pub mod sphere;

pub use error::{Error, Result};
