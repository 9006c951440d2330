//! Numerical building blocks: quadrature, ODE integration, root finding and
//! Perron eigenvalues.

pub mod eigen;
pub mod ode;
pub mod quadrature;
pub mod roots;

pub use eigen::{perron_root, Dense};
pub use ode::{dopri5, Control, OdeOptions, Trajectory};
pub use quadrature::{integrate, integrate_from_neg_infinity, integrate_to_infinity, GaussLegendre, Quad, QuadOptions};
pub use roots::{bisect, golden_min};
