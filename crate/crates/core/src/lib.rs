//! Delay distributions at a two-lane unmanaged intersection.
//!
//! Vehicles arrive as a Poisson stream on two conflicting lanes and cross in
//! an order fixed by a policy: first-in-first-out or flexible order. The crate
//! provides
//!
//! * [`model`]: parameters, lane-delay state and arrival sampling,
//! * [`micro`]: passing-time equilibria for explicit vehicle sequences,
//! * [`maps`]: the event-driven lane-delay transition maps,
//! * [`eds`]: particle simulation of the maps,
//! * [`analytic`]: closed-form steady states, convergence margins and the
//!   characteristic root,
//! * [`dist`] and [`ecdf`]: closed-form and empirical distributions.
//!
//! ```
//! use crossflow_core::analytic::{fo_vehicle_delay, FoVariant};
//! use crossflow_core::model::IntersectionParams;
//!
//! let params = IntersectionParams::from_total(1.0, 0.5, 2.0, 0.0).unwrap();
//! let delay = fo_vehicle_delay(&params, FoVariant::Published);
//! assert!((delay.p0() - 0.339548).abs() < 1e-4);
//! ```

pub mod analytic;
pub mod dist;
pub mod ecdf;
pub mod eds;
pub mod error;
pub mod maps;
pub mod micro;
pub mod model;

pub use error::{Error, Result};
