//! Locally rigid warping, the rigid ICP baseline, evaluation metrics and
//! waypoint transfer.

mod evaluate;
mod icp;
mod warp;
mod waypoints;

pub use evaluate::{evaluate, Method, RegistrationReport};
pub use icp::{icp_from, icp_prealigned, icp_rigid, IcpParams, IcpResult};
pub use warp::{local_transform, warp_nonrigid, warp_points};
pub use waypoints::{plan_waypoints, transfer_waypoints, Gap, Waypoint};
