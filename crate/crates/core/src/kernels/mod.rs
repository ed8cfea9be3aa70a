//! Mollified point-source evolutions approximating the fundamental solution,
//! Gaussian envelope fits, local `L²` bounds and the scaling check.

mod cylinder;
mod estimate;
mod fit;
mod line;
mod plane;
mod scaling;

pub use cylinder::{cylinder_l2, ProofCase, CylinderL2};
pub use estimate::{
    exact_heat_kernel, exact_heat_kernel_estimate, GridSpec, KernelEstimate, KernelSample, Lattice,
};
pub use fit::{gaussian_fit, gradient_gaussian_fit, GaussianFit, GradientFit, FIT_WINDOW, GRADIENT_MIN_ETA};
pub use line::LineField;
pub use scaling::{
    ratio_spread, scaling_check, Caloric, FieldCaloric, HeatKernel, KernelCombination, LinearCaloric, ScalingOptions,
    ScalingRow,
};

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// Relative boundary influence the padding rule aims for.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

/// Coefficient field for a kernel evolution: a 1D profile or a 2D field.
#[derive(Clone, Debug)]
pub enum KernelField {
    Line(LineField),
    Plane(CoefficientField),
}

impl KernelField {
    pub fn dim(&self) -> usize {
        match self {
            KernelField::Line(_) => 1,
            KernelField::Plane(_) => 2,
        }
    }

    /// Largest diffusivity seen by the comparison Gaussian.
    pub fn upper_bound(&self) -> f64 {
        match self {
            KernelField::Line(l) => l.bounds().1,
            KernelField::Plane(f) => f.exterior().unwrap_or(0.0).max(f.big_lambda()),
        }
    }

    pub fn lower_bound(&self) -> f64 {
        match self {
            KernelField::Line(l) => l.bounds().0,
            KernelField::Plane(f) => f.lambda(),
        }
    }
}

/// Discretization of a kernel evolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelOptions {
    pub h: f64,
    pub dt: f64,
    /// Mollifier width; `None` means `4h`.
    pub sigma: Option<f64>,
}

impl KernelOptions {
    pub fn line() -> Self {
        KernelOptions { h: 0.02, dt: 1e-3, sigma: None }
    }

    pub fn plane() -> Self {
        KernelOptions { h: 0.05, dt: 0.01, sigma: None }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(4.0 * self.h)
    }
}

/// Half-width `L` with `exp(-L²/(4Λs)) = tol`.
pub fn padding_distance(big_lambda: f64, elapsed: f64, tol: f64) -> f64 {
    2.0 * (big_lambda * elapsed * (1.0 / tol).ln()).sqrt()
}

/// Evolves a normalized discrete Gaussian released at `(ξ, τ)` and samples
/// the result on `grid`.
pub fn approximate_kernel(
    field: &KernelField,
    xi: Point,
    tau: f64,
    grid: &GridSpec,
    opts: &KernelOptions,
) -> Result<KernelEstimate> {
    let sigma = opts.sigma();
    if !(opts.h > 0.0 && opts.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("h = {} and dt = {}", opts.h, opts.dt)));
    }
    if sigma < 2.0 * opts.h * (1.0 - 1e-12) {
        return Err(Error::InvalidParameter(format!("mollifier width {sigma} below 2h = {}", 2.0 * opts.h)));
    }
    if !grid.elapsed().iter().any(|&s| s > 0.0) {
        return Err(Error::InvalidParameter("grid has no time after the source".into()));
    }
    match field {
        KernelField::Line(l) => line::evolve(l, xi[0], tau, grid, opts.h, opts.dt, sigma),
        KernelField::Plane(f) => plane::evolve(f, xi, tau, grid, opts.h, opts.dt, sigma),
    }
}
