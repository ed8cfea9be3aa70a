use super::estimate::KernelEstimate;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::gauss_legendre;
use std::f64::consts::PI;

/// Position of the source time relative to the cylinder `Q_ρ(x₀, t₀)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProofCase {
    /// `t₀ - ρ² ≤ τ < t₀`
    Inside,
    /// `t₀ - 2ρ² ≤ τ ≤ t₀ - ρ²`
    Near,
    /// `τ ≤ t₀ - 2ρ²`
    Far,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CylinderL2 {
    /// `(|x₀-ξ|² + t₀-τ)^{1/2} / 4`
    pub rho: f64,
    /// `∫∫_{Q_ρ} Γ̂²`
    pub lhs: f64,
    /// `ρⁿ (t₀-τ)^{-(n-1)} exp(-2ĉ|x₀-ξ|²/(t₀-τ))`
    pub rhs_shape: f64,
    /// `None` when the cylinder ends before the source time.
    pub case: Option<ProofCase>,
}

impl CylinderL2 {
    pub fn ratio(&self) -> f64 {
        if self.rhs_shape > 0.0 {
            self.lhs / self.rhs_shape
        } else {
            0.0
        }
    }
}

const PANELS: usize = 8;
const NODES: usize = 12;

/// Squared `L²` norm of the estimate over `Q_ρ(x₀, t₀)`, by Gauss rules on the
/// lattice interpolant, beside the Gaussian shape it is compared to.
pub fn cylinder_l2(est: &KernelEstimate, c_hat: f64, x0: Point, t0: f64) -> Result<CylinderL2> {
    let lattice = est
        .lattice
        .as_ref()
        .ok_or_else(|| Error::Geometry("estimate has no lattice".into()))?;
    let n = est.dim;
    let d2 = (x0[0] - est.xi[0]).powi(2) + if n == 2 { (x0[1] - est.xi[1]).powi(2) } else { 0.0 };
    let s0 = t0 - est.tau;
    if s0 <= 0.0 {
        return Ok(CylinderL2 { rho: 0.0, lhs: 0.0, rhs_shape: 0.0, case: None });
    }
    let rho = (d2 + s0).sqrt() / 4.0;
    let r2 = rho * rho;
    let case = if s0 <= r2 {
        ProofCase::Inside
    } else if s0 <= 2.0 * r2 {
        ProofCase::Near
    } else {
        ProofCase::Far
    };
    let lo = [x0[0] - rho, if n == 2 { x0[1] - rho } else { 0.0 }];
    let hi = [x0[0] + rho, if n == 2 { x0[1] + rho } else { 0.0 }];
    let t_lo = (t0 - r2).max(est.tau);
    if !lattice.covers(lo, hi, t_lo, t0) {
        return Err(Error::Geometry(format!("cylinder of radius {rho} at ({}, {t0}) leaves the lattice", x0[0])));
    }

    // composite Gauss in time, panels graded toward the source time
    let mut t_nodes = Vec::new();
    for p in 0..PANELS {
        let a = t_lo + (t0 - t_lo) * (p as f64 / PANELS as f64).powi(2);
        let b = t_lo + (t0 - t_lo) * ((p + 1) as f64 / PANELS as f64).powi(2);
        t_nodes.extend(gauss_legendre(NODES, a, b));
    }
    let eval = |x: Point, t: f64| -> Result<f64> {
        lattice
            .interpolate(x, t)
            .ok_or_else(|| Error::Geometry(format!("({}, {}, {t}) outside the lattice", x[0], x[1])))
    };
    let mut lhs = 0.0;
    if n == 1 {
        let xq = gauss_legendre(4 * NODES, x0[0] - rho, x0[0] + rho);
        for &(t, wt) in &t_nodes {
            for &(x, wx) in &xq {
                lhs += wt * wx * eval([x, 0.0], t)?.powi(2);
            }
        }
    } else {
        let rq = gauss_legendre(2 * NODES, 0.0, rho);
        let na = 4 * NODES;
        for &(t, wt) in &t_nodes {
            for &(r, wr) in &rq {
                for k in 0..na {
                    let a = 2.0 * PI * k as f64 / na as f64;
                    let v = eval([x0[0] + r * a.cos(), x0[1] + r * a.sin()], t)?;
                    lhs += wt * wr * r * (2.0 * PI / na as f64) * v * v;
                }
            }
        }
    }
    let rhs_shape = rho.powi(n as i32) * s0.powi(1 - n as i32) * (-2.0 * c_hat * d2 / s0).exp();
    Ok(CylinderL2 { rho, lhs, rhs_shape, case: Some(case) })
}
