//! Finite element experiments for parabolic equations with piecewise smooth
//! coefficients on inclusion layouts: meshing, θ-scheme solves, discrete
//! norms, De Giorgi level iterations, heat-kernel fits and the experiment
//! drivers that tie them together.

pub mod coefficients;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod iteration;
pub mod kernels;
pub mod norms;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::Point;
