use super::estimate::KernelEstimate;
use crate::error::{Error, Result};
use std::collections::HashMap;

/// Samples must satisfy `|x - ξ|² + (t - τ) ≤ FIT_WINDOW`.
pub const FIT_WINDOW: f64 = 16.0;
const MIN_SAMPLES: usize = 50;
const TAIL_CUTOFF: f64 = 1e-12;
/// Gradient fits skip `|x-ξ| < √(t-τ)`, where `|∇Γ|` dips to zero at the
/// source point and no Gaussian envelope is tight.
pub const GRADIENT_MIN_ETA: f64 = 1.0;

/// `log v ≈ log C - e log(t-τ) - c |x-ξ|²/(t-τ)` fitted by least squares.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianFit {
    pub c_const: f64,
    pub c_hat: f64,
    pub exponent: f64,
    /// Largest absolute deviation in log space.
    pub residual: f64,
    /// `max v (t-τ)^{e₀} exp(ĉ|x-ξ|²/(t-τ))` with the nominal exponent `e₀`.
    pub c_env: f64,
    pub n_samples: usize,
    pub window: f64,
}

impl GaussianFit {
    /// One-line structured summary, e.g.
    /// `{"C_hat": 0.28, "c_hat": 0.25, "exponent": 0.5, "residual": 0.001, "window": 16}`.
    pub fn summary(&self) -> String {
        format!(
            "{{\"C_hat\": {:e}, \"c_hat\": {:e}, \"exponent\": {:e}, \"residual\": {:e}, \"window\": {}}}",
            self.c_const, self.c_hat, self.exponent, self.residual, self.window
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientFit {
    pub fit: GaussianFit,
    /// Minus the slope of `log max_x |∇Γ̂|` against `log(t-τ)`.
    pub on_axis_exponent: f64,
}

// Solves the 3x3 normal equations with columns scaled to unit norm; None when
// a pivot collapses.
fn least_squares(rows: &[[f64; 3]], y: &[f64]) -> Option<[f64; 3]> {
    let mut scale = [0.0f64; 3];
    for r in rows {
        for j in 0..3 {
            scale[j] += r[j] * r[j];
        }
    }
    if scale.iter().any(|&s| !(s > 0.0)) {
        return None;
    }
    let scale = scale.map(f64::sqrt);
    let mut a = [[0.0f64; 4]; 3];
    for (r, &yv) in rows.iter().zip(y) {
        let rs = [r[0] / scale[0], r[1] / scale[1], r[2] / scale[2]];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += rs[i] * rs[j];
            }
            a[i][3] += rs[i] * yv;
        }
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    Some([0, 1, 2].map(|i| a[i][3] / a[i][i] / scale[i]))
}

fn fit_values(
    est: &KernelEstimate,
    value: impl Fn(usize) -> f64,
    nominal: f64,
    min_eta: f64,
    radial_max: bool,
) -> Result<GaussianFit> {
    let peak = (0..est.samples.len()).map(&value).fold(0.0, f64::max);
    // (s, r²) -> value, merged over directions when `radial_max` is set
    let mut points: Vec<(f64, f64, f64)> = Vec::new();
    let mut index: HashMap<(u64, i64), usize> = HashMap::new();
    for (i, p) in est.samples.iter().enumerate() {
        let s = p.t - est.tau;
        let r2 = (p.x[0] - est.xi[0]).powi(2) + if est.dim == 2 { (p.x[1] - est.xi[1]).powi(2) } else { 0.0 };
        let v = value(i);
        if !(s > 0.0 && r2 + s <= FIT_WINDOW * (1.0 + 1e-12) && r2 >= min_eta * min_eta * s * (1.0 - 1e-9)) {
            continue;
        }
        if radial_max {
            let key = (s.to_bits(), (r2 / s * 1e8).round() as i64);
            if let Some(&k) = index.get(&key) {
                points[k].2 = points[k].2.max(v);
                continue;
            }
            index.insert(key, points.len());
        }
        points.push((s, r2, v));
    }
    points.retain(|p| p.2 > TAIL_CUTOFF * peak);
    let rows: Vec<[f64; 3]> = points.iter().map(|&(s, r2, _)| [1.0, -s.ln(), -r2 / s]).collect();
    let y: Vec<f64> = points.iter().map(|p| p.2.ln()).collect();
    let keep = points;
    if rows.len() < MIN_SAMPLES {
        return Err(Error::DegenerateFit(format!("{} usable samples, need {MIN_SAMPLES}", rows.len())));
    }
    let beta = least_squares(&rows, &y).ok_or_else(|| Error::DegenerateFit("rank-deficient design".into()))?;
    let residual = rows
        .iter()
        .zip(&y)
        .map(|(r, yv)| (yv - (beta[0] * r[0] + beta[1] * r[1] + beta[2] * r[2])).abs())
        .fold(0.0, f64::max);
    let c_hat = beta[2];
    let c_env = keep
        .iter()
        .map(|&(s, r2, v)| v * s.powf(nominal) * (c_hat * r2 / s).exp())
        .fold(0.0, f64::max);
    Ok(GaussianFit {
        c_const: beta[0].exp(),
        c_hat,
        exponent: beta[1],
        residual,
        c_env,
        n_samples: rows.len(),
        window: FIT_WINDOW,
    })
}

/// Gaussian fit of `Γ̂` inside the window.
pub fn gaussian_fit(est: &KernelEstimate) -> Result<GaussianFit> {
    fit_values(est, |i| est.samples[i].value, 0.5 * est.dim as f64, 0.0, false)
}

/// Gaussian fit of `|∇Γ̂|` with a free exponent on samples with
/// `|x-ξ|² ≥ t-τ`, plus the on-axis exponent.
pub fn gradient_gaussian_fit(est: &KernelEstimate) -> Result<GradientFit> {
    let grad = |i: usize| {
        let g = est.samples[i].grad;
        g[0].hypot(g[1])
    };
    let fit = fit_values(est, grad, 0.5 * (est.dim + 1) as f64, GRADIENT_MIN_ETA, true)?;
    let pts: Vec<(f64, f64)> = est
        .grad_max
        .iter()
        .filter(|&&(s, g)| s > 0.0 && s <= FIT_WINDOW && g > 0.0)
        .map(|&(s, g)| (s.ln(), g.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateFit("on-axis fit needs two times".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("on-axis fit needs distinct times".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(GradientFit { fit, on_axis_exponent: -sxy / sxx })
}
