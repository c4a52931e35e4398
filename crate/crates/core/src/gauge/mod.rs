//! Connection, body frames and horizontal transport over shape space.

pub mod connection;
pub mod frame;
pub mod horizontal;

pub use connection::{alpha_j0, connection_value, dynamic_phase, dynamic_phase_between, omega_j0};
pub use frame::{body_frame, eigenframe_track, BodyFrame, FiberPoint, GaugeSample, GaugeTrajectory, ReducedPoint};
pub use horizontal::{horizontal_lift, predicted_holonomy, section_configuration, HorizontalPath, Latitude, Polygon, ShapeCurve};
