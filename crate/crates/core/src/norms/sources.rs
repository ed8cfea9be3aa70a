use super::holder::{max_quotient, HolderOptions};
use super::integrals::ParabolicCylinder;
use crate::coefficients::SourceData;
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use crate::quadrature::{GAUSS2_UNIT, TRI3};
use crate::solver::quad_point;

/// Source values at one space-time quadrature point.
#[derive(Clone, Copy, Debug)]
pub struct SourceSample {
    pub x: Point,
    pub t: f64,
    pub weight: f64,
    pub f: f64,
    pub f_dt: f64,
    pub fi: [f64; 2],
    pub fi_dt: [f64; 2],
}

/// Calls `visit` on every quadrature point of `mesh × [a, b]`, optionally
/// restricted to triangles whose barycentre is in a closed ball. Three points
/// per triangle, two Gauss points per time interval (clipped to the window).
pub fn visit_sources(
    sources: &SourceData,
    mesh: &Mesh,
    times: &[f64],
    window: (f64, f64),
    ball: Option<(Point, f64)>,
    mut visit: impl FnMut(&SourceSample),
) {
    let (a, b) = window;
    let tris: Vec<usize> = (0..mesh.n_triangles())
        .filter(|&t| {
            ball.is_none_or(|(c, r)| {
                let p = mesh.barycenter(t);
                (p[0] - c[0]).hypot(p[1] - c[1]) <= r * (1.0 + 1e-12)
            })
        })
        .collect();
    for w in times.windows(2) {
        let lo = w[0].max(a);
        let hi = w[1].min(b);
        if hi <= lo {
            continue;
        }
        for s in GAUSS2_UNIT {
            let t = lo + s * (hi - lo);
            let wt = 0.5 * (hi - lo);
            for &tri in &tris {
                let c = mesh.corners(tri);
                let m = mesh.tag(tri);
                let area = mesh.area(tri);
                for (l, wq) in TRI3 {
                    let x = quad_point(&c, &l);
                    visit(&SourceSample {
                        x,
                        t,
                        weight: wt * wq * area,
                        f: sources.f(x, t),
                        f_dt: sources.f_dt(x, t),
                        fi: [sources.flux(0, x, t, m), sources.flux(1, x, t, m)],
                        fi_dt: [sources.flux_dt(0, x, t, m), sources.flux_dt(1, x, t, m)],
                    });
                }
            }
        }
    }
}

/// Running `L^q` norm; `q = ∞` keeps a maximum.
#[derive(Clone, Copy, Debug)]
pub struct LqAccumulator {
    q: f64,
    acc: f64,
}

impl LqAccumulator {
    pub fn new(q: f64) -> Self {
        LqAccumulator { q, acc: 0.0 }
    }

    pub fn add(&mut self, value: f64, weight: f64) {
        if self.q.is_infinite() {
            self.acc = self.acc.max(value.abs());
        } else {
            self.acc += weight * value.abs().powf(self.q);
        }
    }

    pub fn norm(&self) -> f64 {
        if self.q.is_infinite() {
            self.acc
        } else {
            self.acc.powf(1.0 / self.q)
        }
    }
}

/// The source functionals entering the estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SourceNorms {
    /// `‖f‖_κ + Σ ‖f_i‖_p`.
    pub f0: f64,
    /// `‖f‖_{max(2,κ)} + Σ (‖f_i‖_p + ‖∂_t f_i‖_2)`.
    pub f1: f64,
    /// `‖f‖_κ + ‖f‖_{max(2,κ)} + ‖f‖_∞ + ‖∂_t f‖_κ`.
    pub fstar: f64,
    /// `Σ_i (‖f_i‖_p + ‖∂_t f_i‖_2 + ‖∂_t f_i‖_p + Σ_m sup_t ‖f_i‖_{C^α(D_m)})`.
    pub fstarstar: f64,
    /// `F₀` restricted to the cylinder, when one was given.
    pub f0_rho: Option<f64>,
}

/// Computes `F₀, F₁, F*, F**` on `mesh × (times[0], times[last]]` and
/// `F₀` on `cylinder`. Regional Hölder norms of `f_i` use vertex pairs of
/// triangles tagged `1..=n_regions`, at every grid time after the first.
pub fn source_norms(
    sources: &SourceData,
    mesh: &Mesh,
    times: &[f64],
    n_regions: usize,
    alpha: f64,
    cylinder: Option<&ParabolicCylinder>,
    opts: HolderOptions,
) -> Result<SourceNorms> {
    let p = sources.p();
    if !(p > 4.0) {
        return Err(Error::Exponent(p));
    }
    if times.len() < 2 {
        return Err(Error::EmptyWindow("source norms need at least two times".into()));
    }
    let kappa = sources.kappa();
    let k2 = kappa.max(2.0);
    let mut f_k = LqAccumulator::new(kappa);
    let mut f_k2 = LqAccumulator::new(k2);
    let mut f_inf = LqAccumulator::new(f64::INFINITY);
    let mut fdt_k = LqAccumulator::new(kappa);
    let mut fi_p = [LqAccumulator::new(p); 2];
    let mut fidt_2 = [LqAccumulator::new(2.0); 2];
    let mut fidt_p = [LqAccumulator::new(p); 2];
    let window = (times[0], times[times.len() - 1]);
    visit_sources(sources, mesh, times, window, None, |s| {
        f_k.add(s.f, s.weight);
        f_k2.add(s.f, s.weight);
        f_inf.add(s.f, s.weight);
        fdt_k.add(s.f_dt, s.weight);
        for i in 0..2 {
            fi_p[i].add(s.fi[i], s.weight);
            fidt_2[i].add(s.fi_dt[i], s.weight);
            fidt_p[i].add(s.fi_dt[i], s.weight);
        }
    });
    let sum_fi_p: f64 = fi_p.iter().map(LqAccumulator::norm).sum();
    let sum_fidt_2: f64 = fidt_2.iter().map(LqAccumulator::norm).sum();
    let sum_fidt_p: f64 = fidt_p.iter().map(LqAccumulator::norm).sum();
    let holder = if sources.has_flux() { flux_holder_sum(sources, mesh, times, n_regions, alpha, opts) } else { 0.0 };

    let f0_rho = cylinder.map(|c| {
        let mut fk = LqAccumulator::new(kappa);
        let mut fp = [LqAccumulator::new(p); 2];
        visit_sources(sources, mesh, times, c.window(), Some((c.center, c.radius)), |s| {
            fk.add(s.f, s.weight);
            fp[0].add(s.fi[0], s.weight);
            fp[1].add(s.fi[1], s.weight);
        });
        fk.norm() + fp[0].norm() + fp[1].norm()
    });

    Ok(SourceNorms {
        f0: f_k.norm() + sum_fi_p,
        f1: f_k2.norm() + sum_fi_p + sum_fidt_2,
        fstar: f_k.norm() + f_k2.norm() + f_inf.norm() + fdt_k.norm(),
        fstarstar: sum_fi_p + sum_fidt_2 + sum_fidt_p + holder,
        f0_rho,
    })
}

// Σ_i Σ_m sup_t (sup|f_i| + [f_i]_α) over region vertices.
fn flux_holder_sum(
    sources: &SourceData,
    mesh: &Mesh,
    times: &[f64],
    n_regions: usize,
    alpha: f64,
    opts: HolderOptions,
) -> f64 {
    let mut total = 0.0;
    for m in 1..=n_regions {
        let mut nodes: Vec<usize> =
            (0..mesh.n_triangles()).filter(|&t| mesh.tag(t) == m).flat_map(|t| mesh.triangle(t)).collect();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.is_empty() {
            continue;
        }
        let pts: Vec<Point> = nodes.iter().map(|&i| mesh.vertex(i)).collect();
        for i in 0..2 {
            let mut best: f64 = 0.0;
            for &t in &times[1..] {
                let v: Vec<f64> = pts.iter().map(|&x| sources.flux(i, x, t, m)).collect();
                let sup = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                let semi = max_quotient(&pts, |a, b| (v[a] - v[b]).abs(), alpha, 0.0, opts);
                best = best.max(sup + semi);
            }
            total += best;
        }
    }
    total
}

/// `L^q` norm of a scalar function of the sample over a cylinder (or all of
/// `mesh × window` when `ball` is `None`).
pub fn sample_norm(
    sources: &SourceData,
    mesh: &Mesh,
    times: &[f64],
    window: (f64, f64),
    ball: Option<(Point, f64)>,
    q: f64,
    g: impl Fn(&SourceSample) -> f64,
) -> f64 {
    let mut acc = LqAccumulator::new(q);
    visit_sources(sources, mesh, times, window, ball, |s| acc.add(g(s), s.weight));
    acc.norm()
}
