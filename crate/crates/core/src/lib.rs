//! Billiards in spaces whose norm is the gauge of a smooth, strictly convex
//! body that need not be centrally symmetric.
//!
//! Velocities live in the vector space, momenta in its dual. A unit velocity
//! `u₁` hitting a wall with inward normal covector `n` leaves with the unit
//! velocity `u₂` whose momentum is `u₁* + λn` for the unique `λ > 0`.
//!
//! The crate provides gauge bodies ([`gauge`]), projective images of bodies
//! ([`projective`]), tables ([`table`]), the reflection law and trajectories
//! ([`dynamics`]), confocal-conic identities ([`conic`]) and seeded
//! certification experiments ([`experiments`]) driven by the CLI ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conic;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod gauge;
pub mod linalg;
pub mod projective;
pub mod roots;
pub mod sampling;
pub mod table;

pub use dynamics::{reflect, run_trajectory, step, Trajectory, TrajectoryState};
pub use error::{Error, Result};
pub use gauge::{Body, BodyDescriptor, Gauge, GaugeBody};
pub use linalg::{pairing, Covector, Vector};
pub use projective::{ImageBody, ProjectiveMap};
pub use table::{EllipsoidTable, Table, TableDescriptor};
