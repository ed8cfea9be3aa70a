use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point, ShrunkRegion};
use crate::solver::SpaceTimeField;

/// `Q_ρ = B_ρ(x₀) × (t₀ - ρ², t₀]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParabolicCylinder {
    pub center: Point,
    pub top: f64,
    pub radius: f64,
}

impl ParabolicCylinder {
    pub fn new(center: Point, top: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("cylinder radius {radius} must be positive")));
        }
        Ok(ParabolicCylinder { center, top, radius })
    }

    pub fn bottom(&self) -> f64 {
        self.top - self.radius * self.radius
    }

    pub fn window(&self) -> (f64, f64) {
        (self.bottom(), self.top)
    }

    /// Same top and centre, radius multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> ParabolicCylinder {
        ParabolicCylinder { radius: self.radius * factor, ..*self }
    }

    pub fn contains_point(&self, x: Point) -> bool {
        (x[0] - self.center[0]).hypot(x[1] - self.center[1]) <= self.radius * (1.0 + 1e-12)
    }

    /// Continuum measure `|B_ρ| ρ²` in `n` space dimensions.
    pub fn measure(&self, n: usize) -> f64 {
        let r = self.radius;
        let ball = match n {
            1 => 2.0 * r,
            2 => std::f64::consts::PI * r * r,
            _ => std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n + 2) * r.powi(n as i32),
        };
        ball * r * r
    }
}

// Γ(k/2) for positive integers k.
fn gamma_half(k: usize) -> f64 {
    if k % 2 == 0 {
        (1..k / 2).map(|i| i as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut x = 0.5;
        while x < k as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Slice indices `(i0, i1)` covering `[a, b]`, rounded outward to the grid.
pub fn time_window(times: &[f64], a: f64, b: f64) -> Result<(usize, usize)> {
    if times.len() < 2 || !(b > a) {
        return Err(Error::EmptyWindow(format!("({a}, {b}] on {} slices", times.len())));
    }
    let tol = 1e-9 * (1.0 + times[times.len() - 1].abs());
    let i0 = times.iter().rposition(|&t| t <= a + tol).unwrap_or(0);
    let i1 = times.iter().position(|&t| t >= b - tol).unwrap_or(times.len() - 1);
    if i1 <= i0 {
        return Err(Error::EmptyWindow(format!("({a}, {b}] on {} slices", times.len())));
    }
    Ok((i0, i1))
}

/// Trapezoid weights for slices `i0..=i1`.
pub fn trapezoid_weights(times: &[f64], i0: usize, i1: usize) -> Vec<f64> {
    let mut w = vec![0.0; i1 - i0 + 1];
    for k in i0..i1 {
        let dt = times[k + 1] - times[k];
        w[k - i0] += 0.5 * dt;
        w[k + 1 - i0] += 0.5 * dt;
    }
    w
}

/// Triangles with all three vertices in `D_ε`.
pub fn triangles_in_shrunk(mesh: &Mesh, shrunk: &ShrunkRegion) -> Vec<bool> {
    let inside: Vec<bool> = mesh.vertices().iter().map(|&v| shrunk.contains(v)).collect();
    mesh.triangles().iter().map(|t| t.iter().all(|&v| inside[v])).collect()
}

/// Triangles whose barycentre lies in the closed ball.
pub fn triangles_in_ball(mesh: &Mesh, center: Point, radius: f64) -> Vec<bool> {
    (0..mesh.n_triangles())
        .map(|t| {
            let b = mesh.barycenter(t);
            (b[0] - center[0]).hypot(b[1] - center[1]) <= radius * (1.0 + 1e-12)
        })
        .collect()
}

pub fn all_triangles(mesh: &Mesh) -> Vec<bool> {
    vec![true; mesh.n_triangles()]
}

/// Exact `∫ v²` of the P1 interpolant over the selected triangles.
pub fn slice_l2_sq(mesh: &Mesh, v: &[f64], sel: &[bool]) -> f64 {
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        if sel[t] {
            let [a, b, c] = mesh.triangle(t);
            let (x, y, z) = (v[a], v[b], v[c]);
            s += mesh.area(t) / 6.0 * (x * x + y * y + z * z + x * y + y * z + z * x);
        }
    }
    s
}

pub fn slice_grad_l2_sq(mesh: &Mesh, v: &[f64], sel: &[bool]) -> f64 {
    let mut s = 0.0;
    for t in 0..mesh.n_triangles() {
        if sel[t] {
            let g = mesh.gradient(t, v);
            s += mesh.area(t) * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    s
}

fn integrate_slices(u: &SpaceTimeField, window: (f64, f64), per_slice: impl Fn(&[f64]) -> f64) -> Result<f64> {
    let (i0, i1) = time_window(u.times(), window.0, window.1)?;
    let w = trapezoid_weights(u.times(), i0, i1);
    let mut s = 0.0;
    for k in i0..=i1 {
        s += w[k - i0] * per_slice(u.slice(k));
    }
    Ok(s.max(0.0).sqrt())
}

/// `‖u‖_{L²}` over the selected triangles and the (outward-snapped) window.
pub fn l2_space_time(u: &SpaceTimeField, sel: &[bool], window: (f64, f64)) -> Result<f64> {
    integrate_slices(u, window, |v| slice_l2_sq(u.mesh(), v, sel))
}

pub fn grad_l2_space_time(u: &SpaceTimeField, sel: &[bool], window: (f64, f64)) -> Result<f64> {
    integrate_slices(u, window, |v| slice_grad_l2_sq(u.mesh(), v, sel))
}

/// `‖∂u/∂t‖_{L²}` with backward differences on each step of the window.
pub fn dudt_l2_space_time(u: &SpaceTimeField, sel: &[bool], window: (f64, f64)) -> Result<f64> {
    let (i0, i1) = time_window(u.times(), window.0, window.1)?;
    let mut s = 0.0;
    let mut diff = vec![0.0; u.mesh().n_vertices()];
    for k in i0 + 1..=i1 {
        let dt = u.time(k) - u.time(k - 1);
        for (i, d) in diff.iter_mut().enumerate() {
            *d = (u.slice(k)[i] - u.slice(k - 1)[i]) / dt;
        }
        s += dt * slice_l2_sq(u.mesh(), &diff, sel);
    }
    Ok(s.sqrt())
}

fn late_slices(u: &SpaceTimeField, after: f64) -> Result<Vec<usize>> {
    let tol = 1e-12 * (1.0 + after.abs());
    let ks: Vec<usize> = (0..u.n_slices()).filter(|&k| u.time(k) > after + tol).collect();
    if ks.is_empty() {
        return Err(Error::EmptyWindow(format!("no slice after t = {after}")));
    }
    Ok(ks)
}

/// `sup_{ε² < t ≤ T} ‖u(·, t)‖_{L²(D_ε)}`.
pub fn sup_l2_slices(u: &SpaceTimeField, shrunk: &ShrunkRegion) -> Result<f64> {
    let sel = triangles_in_shrunk(u.mesh(), shrunk);
    if !sel.iter().any(|&b| b) {
        return Err(Error::EmptyRegion(format!("no triangle inside D_ε for ε = {}", shrunk.epsilon)));
    }
    let eps2 = shrunk.epsilon * shrunk.epsilon;
    let mut best: f64 = 0.0;
    for k in late_slices(u, eps2)? {
        best = best.max(slice_l2_sq(u.mesh(), u.slice(k), &sel).sqrt());
    }
    Ok(best)
}

/// Nodal `max |u|` over vertices of `D_ε` and slices after `ε²`.
pub fn linf_interior(u: &SpaceTimeField, shrunk: &ShrunkRegion) -> Result<f64> {
    let nodes: Vec<usize> = (0..u.mesh().n_vertices()).filter(|&i| shrunk.contains(u.mesh().vertex(i))).collect();
    if nodes.is_empty() {
        return Err(Error::EmptyRegion(format!("no vertex inside D_ε for ε = {}", shrunk.epsilon)));
    }
    let eps2 = shrunk.epsilon * shrunk.epsilon;
    let mut best: f64 = 0.0;
    for k in late_slices(u, eps2)? {
        let v = u.slice(k);
        for &i in &nodes {
            best = best.max(v[i].abs());
        }
    }
    Ok(best)
}

/// Per region `m = 1..=n_regions`: max elementwise `|∇u|` over triangles tagged `m`
/// inside `D_ε`, over slices with `a < t ≤ b`.
pub fn piecewise_grad_sup(
    u: &SpaceTimeField,
    n_regions: usize,
    shrunk: &ShrunkRegion,
    window: (f64, f64),
) -> Result<Vec<f64>> {
    let mesh = u.mesh();
    let sel = triangles_in_shrunk(mesh, shrunk);
    let tol = 1e-12 * (1.0 + window.1.abs());
    let mut out = vec![0.0f64; n_regions];
    let single = u.n_slices() == 1;
    for k in 0..u.n_slices() {
        let t = u.time(k);
        if !single && !(t > window.0 + tol && t <= window.1 + tol) {
            continue;
        }
        for tri in 0..mesh.n_triangles() {
            let m = mesh.tag(tri);
            if sel[tri] && m >= 1 && m <= n_regions {
                let g = u.gradient(k, tri);
                out[m - 1] = out[m - 1].max(g[0].hypot(g[1]));
            }
        }
    }
    Ok(out)
}

/// Nodal `max - min` over vertices in the closed ball and slices of the snapped window.
pub fn osc(u: &SpaceTimeField, cyl: &ParabolicCylinder) -> Result<f64> {
    let nodes: Vec<usize> = (0..u.mesh().n_vertices()).filter(|&i| cyl.contains_point(u.mesh().vertex(i))).collect();
    if nodes.is_empty() {
        return Err(Error::EmptyRegion("cylinder contains no vertex".into()));
    }
    let (i0, i1) = if u.n_slices() == 1 { (0, 0) } else { time_window(u.times(), cyl.bottom(), cyl.top)? };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in i0..=i1 {
        for &i in &nodes {
            lo = lo.min(u.slice(k)[i]);
            hi = hi.max(u.slice(k)[i]);
        }
    }
    Ok(hi - lo)
}

/// Forward time average `(1/h) ∫_t^{t+h} u` per node, for every slice with `t + h ≤ T`.
pub fn steklov_mean(u: &SpaceTimeField, h: f64) -> Result<SpaceTimeField> {
    let tau = u.step();
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter("Steklov mean needs at least two slices".into()));
    }
    let j = (h / tau).round();
    if !(j >= 1.0) || (j * tau - h).abs() > 1e-9 * h {
        return Err(Error::InvalidParameter(format!("lag {h} is not a positive multiple of the step {tau}")));
    }
    let j = j as usize;
    if j >= u.n_slices() {
        return Err(Error::EmptyWindow(format!("lag {h} exceeds the time horizon")));
    }
    let n = u.n_slices() - j;
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let w = trapezoid_weights(u.times(), k, k + j);
        let span = u.time(k + j) - u.time(k);
        let mut v = vec![0.0; u.mesh().n_vertices()];
        for (l, wl) in w.iter().enumerate() {
            for (vi, ui) in v.iter_mut().zip(u.slice(k + l)) {
                *vi += wl * ui;
            }
        }
        for vi in &mut v {
            *vi /= span;
        }
        values.push(v);
    }
    SpaceTimeField::new(u.mesh_arc().clone(), u.times()[..n].to_vec(), values, "steklov")
}
