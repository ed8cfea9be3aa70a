use super::estimate::{GridSpec, KernelEstimate, KernelSample, Lattice};
use super::{padding_distance, BOUNDARY_TOLERANCE};
use crate::error::{Error, Result};

/// Piecewise constant diffusivity on the line: `values[i]` on
/// `(breaks[i-1], breaks[i])`, with `breaks` increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct LineField {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl LineField {
    pub fn constant(a: f64) -> Result<Self> {
        Self::piecewise(vec![], vec![a])
    }

    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidParameter(format!("{} values for {} breaks", values.len(), breaks.len())));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("breaks must increase".into()));
        }
        if let Some(i) = values.iter().position(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::NotSpd(i + 1));
        }
        Ok(LineField { breaks, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= x)]
    }

    pub fn bounds(&self) -> (f64, f64) {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(0.0, f64::max);
        (lo, hi)
    }
}

// Thomas algorithm; `rhs` is overwritten with the solution.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], scratch: &mut [f64]) {
    let n = diag.len();
    scratch[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * scratch[i - 1];
        scratch[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

/// Lumped-mass P1 with backward Euler on `[ξ - L, ξ + L]`, zero at both ends.
/// Lumping keeps the step matrix an M-matrix, so the evolution stays
/// nonnegative.
pub(crate) fn evolve(
    field: &LineField,
    xi: f64,
    tau: f64,
    grid: &GridSpec,
    h: f64,
    dt: f64,
    sigma: f64,
) -> Result<KernelEstimate> {
    let s_max = grid.max_elapsed();
    let big = field.bounds().1;
    let half = padding_distance(big, s_max, BOUNDARY_TOLERANCE) * 1.1 + 6.0 * sigma;
    let cells = 2 * (half / h).ceil() as usize;
    let x0 = xi - h * (cells / 2) as f64;
    let xs: Vec<f64> = (0..=cells).map(|i| x0 + h * i as f64).collect();
    let a: Vec<f64> = (0..cells).map(|e| field.eval(0.5 * (xs[e] + xs[e + 1]))).collect();

    let n = cells - 1; // interior unknowns 1..cells-1
    let mut u: Vec<f64> = xs[1..cells].iter().map(|&x| (-(x - xi).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
    let z: f64 = u.iter().sum::<f64>() * h;
    u.iter_mut().for_each(|v| *v /= z);

    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for k in 0..n {
        let (al, ar) = (a[k], a[k + 1]);
        diag[k] = h + dt * (al + ar) / h;
        lower[k] = -dt * al / h;
        upper[k] = -dt * ar / h;
    }
    let mut scratch = vec![0.0; n];

    let mut targets: Vec<(usize, f64)> = grid
        .elapsed()
        .iter()
        .map(|&s| (if s > 0.0 { (s / dt).round().max(1.0) as usize } else { 0 }, s))
        .collect();
    targets.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let last = targets.last().map_or(0, |t| t.0);

    let mut samples = Vec::new();
    let mut masses = Vec::new();
    let mut grad_max = Vec::new();
    let mut lattice_rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut peak: f64 = 0.0;
    let mut min_val: f64 = 0.0;
    let mut next = 0;
    let mut rhs = vec![0.0; n];
    for step in 0..=last {
        if step > 0 {
            for k in 0..n {
                rhs[k] = h * u[k];
            }
            thomas(&lower, &diag, &upper, &mut rhs, &mut scratch);
            std::mem::swap(&mut u, &mut rhs);
        }
        while next < targets.len() && targets[next].0 == step {
            let s = targets[next].1;
            next += 1;
            let full = |i: usize| if i == 0 || i == cells { 0.0 } else { u[i - 1] };
            let value_at = |x: f64| -> Option<(f64, f64)> {
                let p = (x - x0) / h;
                if p < 0.0 || p > cells as f64 {
                    return None;
                }
                let e = (p.floor() as usize).min(cells - 1);
                let w = p - e as f64;
                let (l, r) = (full(e), full(e + 1));
                Some((l + w * (r - l), (r - l) / h))
            };
            if s <= 0.0 {
                // nothing has been released yet
                for x in grid.points(1, [xi, 0.0], s) {
                    samples.push(KernelSample { x, t: tau + s, value: 0.0, grad: [0.0, 0.0] });
                }
                masses.push((s, 0.0));
                if grid.axes(1, [xi, 0.0]).is_some() {
                    lattice_rows.push((tau + s, vec![0.0; grid.points(1, [xi, 0.0], s).len()]));
                }
                continue;
            }
            let st = step as f64 * dt;
            let mut row = Vec::new();
            for x in grid.points(1, [xi, 0.0], s) {
                let (value, g) = value_at(x[0]).ok_or(Error::OutsideDomain(x[0], 0.0))?;
                samples.push(KernelSample { x, t: tau + st, value, grad: [g, 0.0] });
                row.push(value);
            }
            if grid.axes(1, [xi, 0.0]).is_some() {
                lattice_rows.push((tau + st, row));
            }
            masses.push((st, u.iter().sum::<f64>() * h));
            let gm = (0..cells).map(|e| ((full(e + 1) - full(e)) / h).abs()).fold(0.0, f64::max);
            grad_max.push((st, gm));
            peak = peak.max(u.iter().copied().fold(0.0, f64::max));
            min_val = min_val.min(u.iter().copied().fold(0.0, f64::min));
        }
    }

    let reach = xi - xs[0];
    let boundary_influence = (-reach * reach / (4.0 * big * s_max)).exp();
    let mut warnings = Vec::new();
    if boundary_influence >= BOUNDARY_TOLERANCE {
        warnings.push(format!("boundary influence {boundary_influence:e} exceeds {BOUNDARY_TOLERANCE:e}"));
    }
    let lattice = grid.axes(1, [xi, 0.0]).map(|axes| {
        lattice_rows.sort_by(|p, q| p.0.total_cmp(&q.0));
        Lattice {
            axes,
            times: lattice_rows.iter().map(|r| r.0).collect(),
            values: lattice_rows.into_iter().flat_map(|r| r.1).collect(),
        }
    });
    Ok(KernelEstimate {
        dim: 1,
        xi: [xi, 0.0],
        tau,
        sigma,
        h,
        samples,
        lattice,
        masses,
        grad_max,
        peak,
        min_ratio: if peak > 0.0 { min_val / peak } else { 0.0 },
        boundary_influence,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i] + if i > 0 { lower[i] * x[i - 1] } else { 0.0 } + if i < 3 { upper[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let mut s = [0.0; 4];
        thomas(&lower, &diag, &upper, &mut b, &mut s);
        for i in 0..4 {
            assert!((b[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn piecewise_lookup() {
        let f = LineField::piecewise(vec![-1.0, 1.0], vec![2.0, 5.0, 2.0]).unwrap();
        assert_eq!(f.eval(-3.0), 2.0);
        assert_eq!(f.eval(0.0), 5.0);
        assert_eq!(f.eval(1.5), 2.0);
        assert_eq!(f.bounds(), (2.0, 5.0));
        assert!(LineField::piecewise(vec![1.0, 0.0], vec![1.0, 1.0, 1.0]).is_err());
        assert!(LineField::constant(0.0).is_err());
    }
}
