//! Exact verification engine for strong spatial mixing of the
//! anti-ferromagnetic Potts model on Z².
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`]: regions, edge boundaries, boundary pairs and their enumeration;
//! * [`gibbs`]: exact Gibbs weights as integer polynomials in λ;
//! * [`bound`]: the rational function μ_X(λ) and interval-certified upper bounds;
//! * [`coupling`]: optimal couplings, ν(X), and the recursive coupling tree;
//! * [`certify`]: region bounds, the recurrence system and full certificates;
//! * [`analytic`]: closed-form single-site bounds and thresholds;
//! * [`glauber`]: seeded heat-bath Glauber dynamics for empirical checks.

pub mod analytic;
pub mod bound;
pub mod certify;
pub mod coupling;
pub mod error;
pub mod gibbs;
pub mod glauber;
pub mod lattice;
pub mod poly;
pub mod rational;

pub use error::{Error, ParseError, Result};
pub use lattice::{BoundaryConfig, BoundaryPair, Edge, GeomMap, Region, RegionSpec, Site, Spin};
pub use poly::IntPoly;
pub use rational::{parse_rat, Rat};
