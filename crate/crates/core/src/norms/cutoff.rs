use super::integrals::ParabolicCylinder;
use crate::geometry::Point;

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (s * (6.0 * s - 15.0) + 10.0)
}

fn smoothstep_d(s: f64) -> f64 {
    if !(0.0..=1.0).contains(&s) {
        return 0.0;
    }
    30.0 * s * s * (1.0 - s) * (1.0 - s)
}

/// Quintic cut-off on `Q_ρ`: equal to 1 on `Q_{ρ/2}`, vanishing near the
/// lateral boundary and at the bottom `t = t₀ - ρ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffFunction {
    pub cylinder: ParabolicCylinder,
    pub inner: f64,
}

impl CutoffFunction {
    pub fn new(cylinder: ParabolicCylinder) -> Self {
        CutoffFunction { cylinder, inner: 0.5 * cylinder.radius }
    }

    fn space_arg(&self, x: Point) -> (f64, f64) {
        let c = self.cylinder.center;
        let r = (x[0] - c[0]).hypot(x[1] - c[1]);
        let w = self.cylinder.radius - self.inner;
        ((self.cylinder.radius - r) / w, r)
    }

    fn time_arg(&self, t: f64) -> f64 {
        let outer2 = self.cylinder.radius * self.cylinder.radius;
        (t - (self.cylinder.top - outer2)) / (outer2 - self.inner * self.inner)
    }

    pub fn eval(&self, x: Point, t: f64) -> f64 {
        smoothstep(self.space_arg(x).0) * smoothstep(self.time_arg(t))
    }

    pub fn dt(&self, x: Point, t: f64) -> f64 {
        let outer2 = self.cylinder.radius * self.cylinder.radius;
        smoothstep(self.space_arg(x).0) * smoothstep_d(self.time_arg(t)) / (outer2 - self.inner * self.inner)
    }

    pub fn gradient(&self, x: Point, t: f64) -> Point {
        let (s, r) = self.space_arg(x);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let w = self.cylinder.radius - self.inner;
        let g = -smoothstep_d(s) / w * smoothstep(self.time_arg(t));
        let c = self.cylinder.center;
        [g * (x[0] - c[0]) / r, g * (x[1] - c[1]) / r]
    }

    /// `max (|∂_t ζ| + |∇ζ|²) ρ²` over an `n × n × n` grid on the cylinder.
    pub fn certify(&self, n: usize) -> f64 {
        let c = self.cylinder;
        let mut best: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let x = [
                    c.center[0] - c.radius + 2.0 * c.radius * i as f64 / n as f64,
                    c.center[1] - c.radius + 2.0 * c.radius * j as f64 / n as f64,
                ];
                if !c.contains_point(x) {
                    continue;
                }
                for k in 0..=n {
                    let t = c.bottom() + c.radius * c.radius * k as f64 / n as f64;
                    let g = self.gradient(x, t);
                    best = best.max(self.dt(x, t).abs() + g[0] * g[0] + g[1] * g[1]);
                }
            }
        }
        best * c.radius * c.radius
    }
}
