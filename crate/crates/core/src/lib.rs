//! Two-level distributed MPC for multi-zone HVAC.
//!
//! An upper-level controller plans zone supply flows against thermal comfort
//! and energy cost; a lower-level controller perturbs those flows to keep
//! indoor CO2 under its cap, with a recirculation ("ventilation reset") loop
//! trading fresh-air intake against cooling load. Both levels solve convex
//! relaxations of the bilinear zone dynamics (product terms replaced by
//! envelope variables) and decompose across zones via an augmented-Lagrangian
//! scheme, so each iteration solves one small QP per zone.
//!
//! Module map:
//!
//! - [`model`]     exact plant dynamics, power, cost, rollouts
//! - [`qp`]        dense convex QP solver (interior point) used by every agent
//! - [`mccormick`] envelope rows for flow*state products
//! - [`adal`]      distributed coordination engine (shared constraints)
//! - [`ulc`]       upper level: comfort-optimal flows over the horizon
//! - [`llc`]       lower level: CO2-feasible flow perturbation
//! - [`tldm`]      the two-level epoch and the closed-loop MPC harness
//! - [`baselines`] fixed ventilation, demand-controlled ventilation, oracle
//! - [`scenario`]  reproducible benchmark and office scenario generators
//! - [`io`]        building/scenario files and CSV reports

pub mod adal;
pub mod baselines;
pub mod error;
pub mod io;
pub mod llc;
pub mod mccormick;
pub mod model;
pub mod qp;
pub mod scenario;
pub mod tldm;
pub mod ulc;

pub use error::{Error, Result};
