use super::Point;
use std::f64::consts::PI;

/// Ellipse `{c + R(rot) (a cos φ, b sin φ)}` with semi-axes `radii = [a, b]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub center: Point,
    pub radii: [f64; 2],
    pub rotation: f64,
}

impl Ellipse {
    pub fn new(center: Point, radii: [f64; 2], rotation: f64) -> Self {
        Ellipse { center, radii, rotation }
    }

    pub fn circle(center: Point, radius: f64) -> Self {
        Ellipse { center, radii: [radius, radius], rotation: 0.0 }
    }

    pub fn is_circle(&self) -> bool {
        self.radii[0] == self.radii[1]
    }

    pub fn min_radius(&self) -> f64 {
        self.radii[0].min(self.radii[1])
    }

    pub fn max_radius(&self) -> f64 {
        self.radii[0].max(self.radii[1])
    }

    pub fn area(&self) -> f64 {
        PI * self.radii[0] * self.radii[1]
    }

    fn to_local(&self, x: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        [c * dx + s * dy, -s * dx + c * dy]
    }

    fn to_global(&self, p: Point) -> Point {
        let (s, c) = self.rotation.sin_cos();
        [self.center[0] + c * p[0] - s * p[1], self.center[1] + s * p[0] + c * p[1]]
    }

    /// Implicit value `(x'/a)² + (y'/b)² - 1`; negative inside.
    pub fn level(&self, x: Point) -> f64 {
        let p = self.to_local(x);
        (p[0] / self.radii[0]).powi(2) + (p[1] / self.radii[1]).powi(2) - 1.0
    }

    /// Closed membership with a band of about 1e-14 (in length units) around the curve.
    pub fn contains_closed(&self, x: Point) -> bool {
        self.level(x) * self.min_radius() <= 2e-14
    }

    pub fn point_at(&self, phi: f64) -> Point {
        self.to_global([self.radii[0] * phi.cos(), self.radii[1] * phi.sin()])
    }

    /// Parameter of a point on (or near) the curve.
    pub fn param_of(&self, x: Point) -> f64 {
        let p = self.to_local(x);
        (p[1] / self.radii[1]).atan2(p[0] / self.radii[0])
    }

    /// Horizontal and vertical half-extents of the bounding box.
    pub fn half_extents(&self) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        let [a, b] = self.radii;
        [(a * a * c * c + b * b * s * s).sqrt(), (a * a * s * s + b * b * c * c).sqrt()]
    }

    /// Closest boundary point and signed distance (negative inside).
    pub fn closest_point(&self, x: Point) -> (Point, f64) {
        if self.is_circle() {
            let dx = x[0] - self.center[0];
            let dy = x[1] - self.center[1];
            let r = dx.hypot(dy);
            let rad = self.radii[0];
            let q = if r == 0.0 {
                [self.center[0] + rad, self.center[1]]
            } else {
                [self.center[0] + rad * dx / r, self.center[1] + rad * dy / r]
            };
            return (q, r - rad);
        }
        let p = self.to_local(x);
        let swap = self.radii[0] < self.radii[1];
        let (e0, e1, y0, y1) = if swap {
            (self.radii[1], self.radii[0], p[1].abs(), p[0].abs())
        } else {
            (self.radii[0], self.radii[1], p[0].abs(), p[1].abs())
        };
        let (q0, q1, d) = distance_first_quadrant(e0, e1, y0, y1);
        let (mut l0, mut l1) = if swap { (q1, q0) } else { (q0, q1) };
        if p[0] < 0.0 {
            l0 = -l0;
        }
        if p[1] < 0.0 {
            l1 = -l1;
        }
        let sign = if self.level(x) < 0.0 { -1.0 } else { 1.0 };
        (self.to_global([l0, l1]), sign * d)
    }

    pub fn signed_distance(&self, x: Point) -> f64 {
        self.closest_point(x).1
    }
}

// Robust point-to-ellipse distance for e0 >= e1 and a query in the closed first quadrant.
fn distance_first_quadrant(e0: f64, e1: f64, y0: f64, y1: f64) -> (f64, f64, f64) {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1).powi(2);
                let sbar = root(r0, z0, z1, g);
                let x0 = r0 * y0 / (sbar + r0);
                let x1 = y1 / (sbar + 1.0);
                return (x0, x1, (x0 - y0).hypot(x1 - y1));
            }
            return (y0, y1, 0.0);
        }
        return (0.0, e1, (y1 - e1).abs());
    }
    let numer = e0 * y0;
    let denom = e0 * e0 - e1 * e1;
    if numer < denom {
        let xde = numer / denom;
        let x0 = e0 * xde;
        let x1 = e1 * (1.0 - xde * xde).max(0.0).sqrt();
        return (x0, x1, (x0 - y0).hypot(x1));
    }
    (e0, 0.0, (y0 - e0).abs())
}

fn root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let a = n0 / (s + r0);
        let b = z1 / (s + 1.0);
        let gs = a * a + b * b - 1.0;
        if gs > 0.0 {
            s0 = s;
        } else if gs < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

/// Signed boundary-to-boundary gap between two ellipses with the closest points.
/// Negative when the closed sets overlap (either way round).
pub fn ellipse_gap(e1: &Ellipse, e2: &Ellipse) -> (f64, Point, Point) {
    if e1.is_circle() && e2.is_circle() {
        let dx = e2.center[0] - e1.center[0];
        let dy = e2.center[1] - e1.center[1];
        let d = dx.hypot(dy);
        let (ux, uy) = if d > 0.0 { (dx / d, dy / d) } else { (1.0, 0.0) };
        let p = [e1.center[0] + e1.radii[0] * ux, e1.center[1] + e1.radii[0] * uy];
        let q = [e2.center[0] - e2.radii[0] * ux, e2.center[1] - e2.radii[0] * uy];
        return (d - e1.radii[0] - e2.radii[0], p, q);
    }
    let (g12, p12) = min_over_boundary(e1, |x| e2.signed_distance(x));
    let (g21, p21) = min_over_boundary(e2, |x| e1.signed_distance(x));
    if g12 <= g21 {
        let q = e2.closest_point(p12).0;
        (g12, p12, q)
    } else {
        let q = e1.closest_point(p21).0;
        (g21, q, p21)
    }
}

/// Minimum of `f` over the boundary of `e`, with the minimizing point.
pub fn min_over_boundary(e: &Ellipse, f: impl Fn(Point) -> f64) -> (f64, Point) {
    let n = 720;
    let step = 2.0 * PI / n as f64;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..n {
        let phi = k as f64 * step;
        let v = f(e.point_at(phi));
        if v < best.0 {
            best = (v, phi);
        }
    }
    let g = |phi: f64| f(e.point_at(phi));
    let phi = golden_min(&g, best.1 - step, best.1 + step);
    let v = g(phi);
    if v < best.0 {
        (v, e.point_at(phi))
    } else {
        (best.0, e.point_at(best.1))
    }
}

pub(crate) fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_distance() {
        let c = Ellipse::circle([1.0, 2.0], 0.5);
        assert!((c.signed_distance([2.0, 2.0]) - 0.5).abs() < 1e-15);
        assert!((c.signed_distance([1.0, 2.25]) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn ellipse_distance_on_axes() {
        let e = Ellipse::new([0.0, 0.0], [2.0, 1.0], 0.0);
        assert!((e.signed_distance([3.0, 0.0]) - 1.0).abs() < 1e-14);
        assert!((e.signed_distance([0.0, 3.0]) - 2.0).abs() < 1e-14);
        assert!((e.signed_distance([0.0, 0.5]) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn ellipse_distance_matches_brute_force() {
        let e = Ellipse::new([0.3, -0.1], [0.7, 0.2], 0.6);
        for &x in &[[1.2, 0.4], [-0.5, -0.9], [0.31, -0.05], [0.0, 0.5]] {
            let mut best = f64::INFINITY;
            for k in 0..200_000 {
                let p = e.point_at(2.0 * PI * k as f64 / 200_000.0);
                best = best.min((p[0] - x[0]).hypot(p[1] - x[1]));
            }
            let d = e.signed_distance(x).abs();
            assert!((d - best).abs() < 1e-8, "{d} vs {best}");
        }
    }

    #[test]
    fn rotated_extents() {
        let e = Ellipse::new([0.0, 0.0], [2.0, 1.0], PI / 2.0);
        let h = e.half_extents();
        assert!((h[0] - 1.0).abs() < 1e-15 && (h[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gap_of_rotated_pair_matches_circle_formula_for_circles() {
        let a = Ellipse::new([0.0, 0.0], [0.2, 0.2 + 1e-13], 0.3);
        let b = Ellipse::circle([0.5, 0.0], 0.2);
        let (g, _, _) = ellipse_gap(&a, &b);
        assert!((g - 0.1).abs() < 1e-11);
    }
}
