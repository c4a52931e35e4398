//! Numerical integration of the three-body equations of motion.

pub mod integrator;
pub mod lift;
pub mod returns;
pub mod trajectory;

pub use integrator::{IntegratorConfig, Method};
pub use lift::{orientation_lift, OrientedTrajectory};
pub use returns::{detect_shape_return, find_self_intersections, ShapeCrossing};
pub use trajectory::{integrate, lagrange_solution, time_reversed, DriftReport, Trajectory};
