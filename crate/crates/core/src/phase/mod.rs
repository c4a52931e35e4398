//! Geometric phase, rotation measurement and the reconstruction residual.

pub mod claims;
pub mod geometric;
pub mod holonomy;
pub mod reconstruct;
pub mod rotation;

pub use geometric::{
    beta_line, boundary_beta, close_reduced_loop, geometric_phase_line, omega_surface_quadrature, BilinearPatch, ChartSurface, ClosedReducedLoop,
    ClosingArc, GaugePotential, GeometricLine,
};
pub use holonomy::{holonomy_check, HolonomyReport, HOLONOMY_TOL};
pub use reconstruct::{reconstruct, PhaseDiagnostics, PhaseReport, ReconstructOptions};
pub use rotation::{measure_total_rotation, RotationDiagnostics, TotalRotation};
