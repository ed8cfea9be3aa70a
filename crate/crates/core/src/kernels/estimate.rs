use crate::error::{Error, Result};
use crate::geometry::Point;
use std::f64::consts::PI;

/// Where an estimate is sampled. Times are elapsed times `t - τ`.
#[derive(Clone, Debug, PartialEq)]
pub enum GridSpec {
    /// Points `ξ + η √(t-τ) e_k` for every elapsed time, `η` and direction
    /// `e_k` (`directions` equally spaced unit vectors in 2D, `±1` in 1D).
    Similarity { elapsed: Vec<f64>, etas: Vec<f64>, directions: usize },
    /// Uniform lattice of `points` per axis on `ξ + [-w, w]^n`, kept in full
    /// for interpolation.
    Lattice { half_width: f64, points: usize, elapsed: Vec<f64> },
}

impl GridSpec {
    pub fn elapsed(&self) -> &[f64] {
        match self {
            GridSpec::Similarity { elapsed, .. } | GridSpec::Lattice { elapsed, .. } => elapsed,
        }
    }

    pub fn max_elapsed(&self) -> f64 {
        self.elapsed().iter().copied().fold(0.0, f64::max)
    }

    /// Spatial sample points at elapsed time `s`.
    pub(crate) fn points(&self, dim: usize, xi: Point, s: f64) -> Vec<Point> {
        match self {
            GridSpec::Similarity { etas, directions, .. } => {
                let dirs: Vec<Point> = if dim == 1 {
                    vec![[1.0, 0.0], [-1.0, 0.0]]
                } else {
                    (0..(*directions).max(1))
                        .map(|k| {
                            let a = 2.0 * PI * k as f64 / (*directions).max(1) as f64;
                            [a.cos(), a.sin()]
                        })
                        .collect()
                };
                let scale = s.max(0.0).sqrt();
                let mut out = Vec::new();
                for &eta in etas {
                    if eta == 0.0 {
                        out.push(xi);
                        continue;
                    }
                    for d in &dirs {
                        out.push([xi[0] + eta * scale * d[0], xi[1] + eta * scale * d[1]]);
                    }
                }
                out
            }
            GridSpec::Lattice { .. } => {
                let axes = self.axes(dim, xi).unwrap_or_default();
                if dim == 1 {
                    axes[0].iter().map(|&x| [x, 0.0]).collect()
                } else {
                    axes[1].iter().flat_map(|&y| axes[0].iter().map(move |&x| [x, y])).collect()
                }
            }
        }
    }

    pub(crate) fn axes(&self, dim: usize, xi: Point) -> Option<Vec<Vec<f64>>> {
        match self {
            GridSpec::Lattice { half_width, points, .. } => {
                let n = (*points).max(2);
                Some(
                    (0..dim)
                        .map(|d| {
                            (0..n)
                                .map(|i| xi[d] - half_width + 2.0 * half_width * i as f64 / (n - 1) as f64)
                                .collect()
                        })
                        .collect(),
                )
            }
            GridSpec::Similarity { .. } => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSample {
    /// Second coordinate is 0 in 1D.
    pub x: Point,
    pub t: f64,
    pub value: f64,
    pub grad: Point,
}

/// Values on a full space-time lattice, `values[(k * ny + j) * nx + i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    pub axes: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

fn bracket(axis: &[f64], x: f64) -> Option<(usize, f64)> {
    let n = axis.len();
    if n < 2 || x < axis[0] - 1e-12 || x > axis[n - 1] + 1e-12 {
        return None;
    }
    let i = axis.partition_point(|&a| a <= x).clamp(1, n - 1) - 1;
    let w = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    Some((i, w))
}

impl Lattice {
    fn plane_len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    fn at(&self, k: usize, idx: &[usize]) -> f64 {
        let mut flat = 0;
        for d in (0..self.axes.len()).rev() {
            flat = flat * self.axes[d].len() + idx[d];
        }
        self.values[k * self.plane_len() + flat]
    }

    /// Whether the box `[lo, hi] × [t_lo, t_hi]` lies inside the lattice.
    pub fn covers(&self, lo: Point, hi: Point, t_lo: f64, t_hi: f64) -> bool {
        let inside = |axis: &Vec<f64>, a: f64, b: f64| a >= axis[0] - 1e-12 && b <= axis[axis.len() - 1] + 1e-12;
        (0..self.axes.len()).all(|d| inside(&self.axes[d], lo[d], hi[d])) && inside(&self.times, t_lo, t_hi)
    }

    /// Multilinear interpolation; logarithmic when every corner is positive,
    /// which keeps Gaussian tails accurate on coarse time lattices.
    pub fn interpolate(&self, x: Point, t: f64) -> Option<f64> {
        let dim = self.axes.len();
        let mut cells = Vec::with_capacity(dim + 1);
        for d in 0..dim {
            cells.push(bracket(&self.axes[d], x[d])?);
        }
        let (k, wt) = bracket(&self.times, t)?;
        let corners = 1usize << (dim + 1);
        let mut vals = Vec::with_capacity(corners);
        let mut weights = Vec::with_capacity(corners);
        for c in 0..corners {
            let mut idx = [0usize; 2];
            let mut w = 1.0;
            for (d, &(i, wd)) in cells.iter().enumerate() {
                let up = (c >> d) & 1 == 1;
                idx[d] = i + up as usize;
                w *= if up { wd } else { 1.0 - wd };
            }
            let up_t = (c >> dim) & 1 == 1;
            w *= if up_t { wt } else { 1.0 - wt };
            vals.push(self.at(k + up_t as usize, &idx[..dim]));
            weights.push(w);
        }
        if vals.iter().all(|&v| v > 0.0) {
            Some(vals.iter().zip(&weights).map(|(v, w)| w * v.ln()).sum::<f64>().exp())
        } else {
            Some(vals.iter().zip(&weights).map(|(v, w)| w * v).sum())
        }
    }
}

/// Approximate fundamental solution for one source point.
#[derive(Clone, Debug)]
pub struct KernelEstimate {
    pub dim: usize,
    pub xi: Point,
    pub tau: f64,
    /// Mollifier width (0 for closed-form estimates).
    pub sigma: f64,
    pub h: f64,
    pub samples: Vec<KernelSample>,
    pub lattice: Option<Lattice>,
    /// `(t - τ, ∫Γ̂ dx)` at every sampled time.
    pub masses: Vec<(f64, f64)>,
    /// `(t - τ, max_x |∇Γ̂|)` at every sampled time after the source.
    pub grad_max: Vec<(f64, f64)>,
    /// Largest nodal value over the sampled times.
    pub peak: f64,
    /// Smallest nodal value over the sampled times, relative to `peak`.
    pub min_ratio: f64,
    /// Comparison-Gaussian estimate of the far-boundary influence.
    pub boundary_influence: f64,
    pub warnings: Vec<String>,
}

impl KernelEstimate {
    /// Samples taken at elapsed time `s` (to 1e-9).
    pub fn samples_at(&self, s: f64) -> impl Iterator<Item = &KernelSample> {
        let t = self.tau + s;
        self.samples.iter().filter(move |p| (p.t - t).abs() <= 1e-9 * (1.0 + t.abs()))
    }

    /// Samples as CSV with columns `x1[, x2], t, value, grad_norm`.
    pub fn write_samples_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["x1"];
        if self.dim == 2 {
            header.push("x2");
        }
        header.extend(["t", "value", "grad_norm"]);
        out.write_record(&header)?;
        for p in &self.samples {
            let mut rec = vec![format!("{:e}", p.x[0])];
            if self.dim == 2 {
                rec.push(format!("{:e}", p.x[1]));
            }
            rec.push(format!("{:e}", p.t));
            rec.push(format!("{:e}", p.value));
            rec.push(format!("{:e}", p.grad[0].hypot(p.grad[1])));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `(4πas)^{-n/2} exp(-|x|²/(4as))` and its gradient, for `x` relative to the source.
pub fn exact_heat_kernel(dim: usize, a: f64, x: Point, s: f64) -> (f64, Point) {
    if s <= 0.0 {
        return (0.0, [0.0, 0.0]);
    }
    let r2 = x[0] * x[0] + x[1] * x[1];
    let v = (4.0 * PI * a * s).powf(-0.5 * dim as f64) * (-r2 / (4.0 * a * s)).exp();
    let g = -v / (2.0 * a * s);
    (v, [g * x[0], g * x[1]])
}

/// Closed-form heat kernel of `∂_t - a Δ` sampled like a computed estimate.
pub fn exact_heat_kernel_estimate(dim: usize, a: f64, xi: Point, tau: f64, grid: &GridSpec) -> Result<KernelEstimate> {
    if !(dim == 1 || dim == 2) || !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("dimension {dim}, diffusivity {a}")));
    }
    let rel = |x: Point| [x[0] - xi[0], if dim == 1 { 0.0 } else { x[1] - xi[1] }];
    let mut samples = Vec::new();
    let mut masses = Vec::new();
    let mut grad_max = Vec::new();
    let mut peak: f64 = 0.0;
    for &s in grid.elapsed() {
        for x in grid.points(dim, xi, s) {
            let (value, grad) = exact_heat_kernel(dim, a, rel(x), s);
            samples.push(KernelSample { x, t: tau + s, value, grad });
        }
        masses.push((s, if s > 0.0 { 1.0 } else { 0.0 }));
        if s > 0.0 {
            // max of r/(2as) Γ is at r = √(2as)
            let r = (2.0 * a * s).sqrt();
            grad_max.push((s, exact_heat_kernel(dim, a, [r, 0.0], s).0 * r / (2.0 * a * s)));
            peak = peak.max(exact_heat_kernel(dim, a, [0.0, 0.0], s).0);
        }
    }
    let lattice = grid.axes(dim, xi).map(|axes| {
        let mut times: Vec<f64> = grid.elapsed().iter().map(|s| tau + s).collect();
        times.sort_by(f64::total_cmp);
        let mut values = Vec::new();
        for &t in &times {
            for x in grid.points(dim, xi, t - tau) {
                values.push(exact_heat_kernel(dim, a, rel(x), t - tau).0);
            }
        }
        Lattice { axes, times, values }
    });
    Ok(KernelEstimate {
        dim,
        xi,
        tau,
        sigma: 0.0,
        h: 0.0,
        samples,
        lattice,
        masses,
        grad_max,
        peak,
        min_ratio: 0.0,
        boundary_influence: 0.0,
        warnings: Vec::new(),
    })
}
