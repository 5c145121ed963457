//! Numerical analysis of half-line Schrödinger operators `-d²/dx² + V(x)`
//! with bounded complex potentials and a Dirichlet condition at the origin.
//!
//! The crate computes Jost and regular solutions of `-y'' + V y = k² y`,
//! evaluates the Jost function and localizes its zeros in the closed upper
//! half-plane (eigenvalues and spectral singularities), certifies counting
//! bounds against the computed spectrum, verifies weighted resolvent and
//! Kato-smoothness estimates, and runs finite-grid wave-operator and
//! similarity experiments.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod resolvent;
pub mod solver;
pub mod spectrum;
pub mod states;

mod contour;

pub use error::{Error, Result};
pub use potential::{MomentSpec, Potential, PotentialSchema};
pub use solver::{
    default_grid, jost_solution, jost_solution_checked, regular_solution, verify_estimates,
    wronskian, EstimateCheck, EstimateReport, SolutionKind, SolutionRecord,
};
pub use spectrum::{
    count_zeros, enclosing_radius, enclosing_radius_min, jost_function,
    jost_function_with_derivative, locate_spectrum, ContourSpec, PointKind, SearchRegion,
    SpectralPoint,
};

pub use num_complex::Complex64;

/// Shorthand used throughout.
pub type C64 = Complex64;

/// `sin(z)/z` with the removable singularity handled by series.
pub(crate) fn sinc_c(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        C64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// `(e^z - 1)/z` with the removable singularity handled by series.
pub(crate) fn expm1_over(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        C64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        (z.exp() - C64::new(1.0, 0.0)) / z
    }
}
