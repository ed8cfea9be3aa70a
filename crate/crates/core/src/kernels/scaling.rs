use super::estimate::exact_heat_kernel;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::quadrature::gauss_legendre;
use crate::solver::SpaceTimeField;
use std::f64::consts::PI;

/// A source-free solution known at every point of a cylinder.
pub trait Caloric: Sync {
    fn value(&self, x: Point, t: f64) -> f64;
    fn gradient(&self, x: Point, t: f64) -> Point;
}

/// Heat kernel of `∂_t - aΔ` in the plane released at `(center, start)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatKernel {
    pub center: Point,
    pub start: f64,
    pub diffusivity: f64,
}

impl Caloric for HeatKernel {
    fn value(&self, x: Point, t: f64) -> f64 {
        exact_heat_kernel(2, self.diffusivity, [x[0] - self.center[0], x[1] - self.center[1]], t - self.start).0
    }

    fn gradient(&self, x: Point, t: f64) -> Point {
        exact_heat_kernel(2, self.diffusivity, [x[0] - self.center[0], x[1] - self.center[1]], t - self.start).1
    }
}

/// Weighted sum of heat kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelCombination {
    pub terms: Vec<(f64, HeatKernel)>,
}

impl KernelCombination {
    /// `Γ(x - (d,0)) - Γ(x + (d,0))`, released `lag` before `t0`; odd in `x₁`.
    pub fn antisymmetric_pair(d: f64, t0: f64, lag: f64, diffusivity: f64) -> Self {
        let k = |c: f64| HeatKernel { center: [c, 0.0], start: t0 - lag, diffusivity };
        KernelCombination { terms: vec![(1.0, k(d)), (-1.0, k(-d))] }
    }
}

impl Caloric for KernelCombination {
    fn value(&self, x: Point, t: f64) -> f64 {
        self.terms.iter().map(|(w, k)| w * k.value(x, t)).sum()
    }

    fn gradient(&self, x: Point, t: f64) -> Point {
        self.terms.iter().fold([0.0, 0.0], |acc, (w, k)| {
            let g = k.gradient(x, t);
            [acc[0] + w * g[0], acc[1] + w * g[1]]
        })
    }
}

/// `u = d·x`, stationary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearCaloric {
    pub direction: Point,
}

impl Caloric for LinearCaloric {
    fn value(&self, x: Point, _t: f64) -> f64 {
        self.direction[0] * x[0] + self.direction[1] * x[1]
    }

    fn gradient(&self, _x: Point, _t: f64) -> Point {
        self.direction
    }
}

/// A computed solution, linear in time between slices.
pub struct FieldCaloric<'a> {
    pub field: &'a SpaceTimeField,
}

impl FieldCaloric<'_> {
    fn bracket(&self, t: f64) -> (usize, f64) {
        let times = self.field.times();
        if times.len() == 1 {
            return (0, 0.0);
        }
        let k = times.partition_point(|&s| s <= t).clamp(1, times.len() - 1) - 1;
        (k, ((t - times[k]) / (times[k + 1] - times[k])).clamp(0.0, 1.0))
    }
}

impl Caloric for FieldCaloric<'_> {
    fn value(&self, x: Point, t: f64) -> f64 {
        let (k, w) = self.bracket(t);
        let a = self.field.value_at(k, x).unwrap_or(0.0);
        if w == 0.0 {
            return a;
        }
        a + w * (self.field.value_at(k + 1, x).unwrap_or(0.0) - a)
    }

    fn gradient(&self, x: Point, t: f64) -> Point {
        let (k, w) = self.bracket(t);
        let a = self.field.gradient_at(k, x).unwrap_or([0.0, 0.0]);
        if w == 0.0 {
            return a;
        }
        let b = self.field.gradient_at(k + 1, x).unwrap_or([0.0, 0.0]);
        [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingOptions {
    /// Gauss points in radius and in time for the `L²` norm.
    pub radial: usize,
    pub time: usize,
    /// Angles for both the norm and the sampled supremum.
    pub angular: usize,
    /// Radii and times for the sampled supremum.
    pub sup_points: usize,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions { radial: 16, time: 16, angular: 48, sup_points: 16 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingRow {
    pub rho: f64,
    pub grad_sup: f64,
    pub l2: f64,
    /// `‖∇u‖_{L∞(Q_{ρ/2})} ρ^{n/2+2} / ‖u‖_{L²(Q_ρ)}` with `n = 2`.
    pub ratio: f64,
}

/// `R(ρ)` on the cylinders `Q_ρ(x₀, t₀)` for every `ρ` in `rhos`.
pub fn scaling_check(u: &dyn Caloric, x0: Point, t0: f64, rhos: &[f64], opts: ScalingOptions) -> Result<Vec<ScalingRow>> {
    let mut out = Vec::with_capacity(rhos.len());
    let dphi = 2.0 * PI / opts.angular as f64;
    let at = |r: f64, k: usize| {
        let a = k as f64 * dphi;
        [x0[0] + r * a.cos(), x0[1] + r * a.sin()]
    };
    for &rho in rhos {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("radius {rho}")));
        }
        let mut l2 = 0.0;
        for (t, wt) in gauss_legendre(opts.time, t0 - rho * rho, t0) {
            for (r, wr) in gauss_legendre(opts.radial, 0.0, rho) {
                for k in 0..opts.angular {
                    l2 += wt * wr * r * dphi * u.value(at(r, k), t).powi(2);
                }
            }
        }
        let l2 = l2.sqrt();
        if !(l2 > 0.0) {
            return Err(Error::Domain(format!("u vanishes on the cylinder of radius {rho}")));
        }
        let half = 0.5 * rho;
        let m = opts.sup_points.max(1);
        let mut grad_sup: f64 = 0.0;
        for i in 0..=m {
            let t = t0 - half * half * i as f64 / m as f64;
            for j in 0..=m {
                let r = half * j as f64 / m as f64;
                for k in 0..if j == 0 { 1 } else { opts.angular } {
                    let g = u.gradient(at(r, k), t);
                    grad_sup = grad_sup.max(g[0].hypot(g[1]));
                }
            }
        }
        out.push(ScalingRow { rho, grad_sup, l2, ratio: grad_sup * rho.powi(3) / l2 });
    }
    Ok(out)
}

/// `max R / min R` over the table.
pub fn ratio_spread(rows: &[ScalingRow]) -> f64 {
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    hi / lo
}
