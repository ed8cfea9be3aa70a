//! De Giorgi machinery: the decay recursion, level truncations, the
//! parabolic embedding check and the sup-bound cascade.

use crate::coefficients::SourceData;
use crate::error::{Error, Result};
use crate::norms::{sample_norm, time_window, trapezoid_weights, triangles_in_ball, ParabolicCylinder};
use crate::quadrature::tri7;
use crate::solver::SpaceTimeField;
use astro_float::{BigFloat, Consts, RoundingMode};

const PREC: usize = 160;
const RM: RoundingMode = RoundingMode::ToEven;

/// `(C̃, b, ε)` of the recursion `y_{m+1} ≤ C̃ b^m y_m^{1+ε}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationParams {
    pub c_tilde: f64,
    pub b: f64,
    pub eps: f64,
}

impl IterationParams {
    pub fn new(c_tilde: f64, b: f64, eps: f64) -> Result<Self> {
        if !(b > 1.0 && b.is_finite()) {
            return Err(Error::Domain(format!("b = {b} must exceed 1")));
        }
        if !(c_tilde > 0.0 && c_tilde.is_finite()) || !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("C = {c_tilde} and eps = {eps} must be positive")));
        }
        Ok(IterationParams { c_tilde, b, eps })
    }

    /// `C̃^{-1/ε} b^{-1/ε²}`; may underflow to 0 for small `ε`.
    pub fn theta0(&self) -> f64 {
        (-(self.c_tilde.ln() / self.eps) - self.b.ln() / (self.eps * self.eps)).exp()
    }

    /// `b^{1/ε}`.
    pub fn r(&self) -> f64 {
        (self.b.ln() / self.eps).exp()
    }

    /// Base-10 logarithms of `θ₀` and `r`, which never under- or overflow.
    pub fn log10_theta0_r(&self) -> (f64, f64) {
        let l = |x: f64| x.log10();
        (-l(self.c_tilde) / self.eps - l(self.b) / (self.eps * self.eps), l(self.b) / self.eps)
    }
}

pub fn theta0(c_tilde: f64, b: f64, eps: f64) -> Result<f64> {
    Ok(IterationParams::new(c_tilde, b, eps)?.theta0())
}

/// Starting value of the recursion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialValue {
    /// Exactly `θ₀`, carried in extended precision.
    Theta0,
    /// `θ₀` times a factor, in extended precision.
    ScaledTheta0(f64),
    Value(f64),
}

#[derive(Clone, Debug)]
pub struct DeGiorgiSequence {
    /// `log10 y_m` (`-inf` for zero).
    pub log10_y: Vec<f64>,
    /// `log10 (θ₀ r^{-m})`.
    pub log10_bound: Vec<f64>,
    /// `y_m / (θ₀ r^{-m})`.
    pub ratio: Vec<f64>,
    pub decays: bool,
    /// First index with `y_m > 1e12`.
    pub diverged_at: Option<usize>,
    ln_y: Vec<Option<BigFloat>>,
}

impl DeGiorgiSequence {
    pub fn len(&self) -> usize {
        self.ln_y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ln_y.is_empty()
    }

    /// `y_m` correctly rounded to `f64` (0 below the subnormal range).
    pub fn value(&self, m: usize) -> f64 {
        match &self.ln_y[m] {
            None => 0.0,
            Some(z) => match Consts::new() {
                Ok(mut cc) => to_f64(&z.exp(PREC, RM, &mut cc)),
                Err(_) => f64::NAN,
            },
        }
    }
}

fn big(x: f64) -> BigFloat {
    BigFloat::from_f64(x, PREC)
}

fn to_f64(x: &BigFloat) -> f64 {
    x.to_string().parse().unwrap_or(f64::NAN)
}

/// Iterates the extremal recursion `y_{m+1} = C̃ b^m y_m^{1+ε}` through its
/// logarithm `z_{m+1} = ln C̃ + m ln b + (1+ε) z_m` in 160-bit arithmetic.
/// The equality case `y_0 = θ₀` is unstable (deviations grow like
/// `(1+ε)^m`), so doubles would drift off `θ₀ r^{-m}` after a few dozen steps.
pub fn degiorgi_sequence(y0: InitialValue, params: &IterationParams, m_max: usize) -> Result<DeGiorgiSequence> {
    if m_max < 1 {
        return Err(Error::InvalidParameter("m_max must be at least 1".into()));
    }
    let mut cc = Consts::new().map_err(|e| Error::Domain(format!("{e:?}")))?;
    let ln_c = big(params.c_tilde).ln(PREC, RM, &mut cc);
    let ln_b = big(params.b).ln(PREC, RM, &mut cc);
    let eps = big(params.eps);
    let eps2 = eps.mul(&eps, PREC, RM);
    let ln_theta = ln_c.div(&eps, PREC, RM).add(&ln_b.div(&eps2, PREC, RM), PREC, RM).neg();
    let ln_r = ln_b.div(&eps, PREC, RM);
    let mut z = match y0 {
        InitialValue::Theta0 => Some(ln_theta.clone()),
        InitialValue::ScaledTheta0(s) if s > 0.0 => Some(ln_theta.add(&big(s).ln(PREC, RM, &mut cc), PREC, RM)),
        InitialValue::Value(v) if v > 0.0 => Some(big(v).ln(PREC, RM, &mut cc)),
        InitialValue::Value(v) | InitialValue::ScaledTheta0(v) if v == 0.0 => None,
        InitialValue::Value(v) | InitialValue::ScaledTheta0(v) => {
            return Err(Error::InvalidParameter(format!("initial value {v} must be nonnegative")));
        }
    };
    let power = big(1.0).add(&eps, PREC, RM);
    let cap = big(1e12f64.ln());
    let slack = big((1e-9f64).ln_1p());
    let (log_theta10, log_r10) = params.log10_theta0_r();
    let mut out = DeGiorgiSequence {
        log10_y: Vec::with_capacity(m_max + 1),
        log10_bound: Vec::with_capacity(m_max + 1),
        ratio: Vec::with_capacity(m_max + 1),
        decays: false,
        diverged_at: None,
        ln_y: Vec::with_capacity(m_max + 1),
    };
    let mut ln_bound = ln_theta.clone();
    let mut within = true;
    for m in 0..=m_max {
        let log_bound = log_theta10 - m as f64 * log_r10;
        out.log10_bound.push(log_bound);
        match &z {
            None => {
                out.log10_y.push(f64::NEG_INFINITY);
                out.ratio.push(0.0);
            }
            Some(zm) => {
                let d = zm.sub(&ln_bound, PREC, RM);
                let df = to_f64(&d);
                out.ratio.push(df.exp());
                out.log10_y.push(log_bound + df / std::f64::consts::LN_10);
                within = d.cmp(&slack).is_some_and(|c| c <= 0);
                if zm.cmp(&cap).is_some_and(|c| c > 0) {
                    out.diverged_at = Some(m);
                    out.ln_y.push(z.clone());
                    return Ok(out);
                }
            }
        }
        out.ln_y.push(z.clone());
        if m == m_max {
            break;
        }
        let step = ln_c.add(&ln_b.mul(&big(m as f64), PREC, RM), PREC, RM);
        z = z.map(|zm| step.add(&power.mul(&zm, PREC, RM), PREC, RM));
        ln_bound = ln_bound.sub(&ln_r, PREC, RM);
    }
    out.decays = within;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// `(u - k)₊` or `(u - k)₋ = (k - u)₊` with its active set measure.
#[derive(Clone, Debug)]
pub struct LevelSetData {
    pub level: f64,
    pub sign: Sign,
    pub field: SpaceTimeField,
    pub active_measure: f64,
}

fn slice_range(u: &SpaceTimeField, cyl: Option<&ParabolicCylinder>) -> Result<(usize, usize, Vec<f64>)> {
    if u.n_slices() == 1 {
        return Ok((0, 0, vec![1.0]));
    }
    let (a, b) = match cyl {
        Some(c) => c.window(),
        None => (u.time(0), u.time(u.n_slices() - 1)),
    };
    let (i0, i1) = time_window(u.times(), a, b)?;
    Ok((i0, i1, trapezoid_weights(u.times(), i0, i1)))
}

/// Nodal truncation of `u` at level `k`. The active measure counts triangles
/// whose barycentre value is beyond `k`, weighted by area and trapezoid time
/// weights (weight 1 for a single slice), inside `cyl` when given.
pub fn level_truncate(u: &SpaceTimeField, k: f64, sign: Sign, cyl: Option<&ParabolicCylinder>) -> Result<LevelSetData> {
    let s = if sign == Sign::Plus { 1.0 } else { -1.0 };
    let field = u.map(|v| (s * (v - k)).max(0.0), "truncated");
    let mesh = u.mesh();
    let sel = match cyl {
        Some(c) => triangles_in_ball(mesh, c.center, c.radius),
        None => vec![true; mesh.n_triangles()],
    };
    let (i0, i1, w) = slice_range(u, cyl)?;
    let mut measure = 0.0;
    for k_s in i0..=i1 {
        let v = u.slice(k_s);
        let mut a = 0.0;
        for t in 0..mesh.n_triangles() {
            let [p, q, r] = mesh.triangle(t);
            if sel[t] && s * ((v[p] + v[q] + v[r]) / 3.0 - k) > 0.0 {
                a += mesh.area(t);
            }
        }
        measure += w[k_s - i0] * a;
    }
    Ok(LevelSetData { level: k, sign, field, active_measure: measure })
}

/// Exponents of a Gagliardo-Nirenberg inequality
/// `‖D^j v‖_q ≤ C ‖D^k v‖_s^γ ‖v‖_r^{1-γ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GNParams {
    pub n: usize,
    pub j: usize,
    pub k: usize,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub gamma: f64,
}

impl GNParams {
    /// Solves the exponent relation for `γ` and validates its range.
    pub fn new(n: usize, j: usize, k: usize, q: f64, r: f64, s: f64) -> Result<Self> {
        let nf = n as f64;
        let denom = 1.0 / s - k as f64 / nf - 1.0 / r;
        if n == 0 || k == 0 || denom == 0.0 {
            return Err(Error::InvalidParameter("degenerate Gagliardo-Nirenberg exponents".into()));
        }
        let gamma = (1.0 / q - j as f64 / nf - 1.0 / r) / denom;
        let p = GNParams { n, j, k, q, r, s, gamma };
        p.validate()?;
        Ok(p)
    }

    /// `j = 0, k = 1, q = 2(n+2)/n, r = s = 2`, giving `γ = n/(n+2)`.
    pub fn embedding(n: usize) -> Result<Self> {
        GNParams::new(n, 0, 1, 2.0 * (n as f64 + 2.0) / n as f64, 2.0, 2.0)
    }

    pub fn residual(&self) -> f64 {
        let nf = self.n as f64;
        let rhs = self.j as f64 / nf + self.gamma * (1.0 / self.s - self.k as f64 / nf) + (1.0 - self.gamma) / self.r;
        (1.0 / self.q - rhs).abs()
    }

    /// `k - j - n/s` is a nonnegative integer.
    pub fn is_exceptional(&self) -> bool {
        let d = self.k as f64 - self.j as f64 - self.n as f64 / self.s;
        d >= -1e-12 && (d - d.round()).abs() < 1e-12
    }

    pub fn validate(&self) -> Result<()> {
        let lo = self.j as f64 / self.k as f64;
        if self.residual() > 1e-12 {
            return Err(Error::InvalidParameter(format!("exponent relation residual {}", self.residual())));
        }
        if !(self.gamma >= lo - 1e-14 && self.gamma <= 1.0 + 1e-14) {
            return Err(Error::InvalidParameter(format!("gamma {} outside [{lo}, 1]", self.gamma)));
        }
        if self.is_exceptional() && self.gamma >= 1.0 {
            return Err(Error::InvalidParameter("gamma must be below 1 in the exceptional case".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GnCheck {
    /// `‖v‖_{L^q(Q)}`.
    pub lhs: f64,
    /// `(sup_t ‖v‖_{L²})^{2/(n+2)} ‖∇v‖_{L²(Q)}^{n/(n+2)}`.
    pub rhs_factor: f64,
    pub c1_hat: f64,
}

/// Empirical constant of the parabolic embedding `V₂ ⊂ L^{2(n+2)/n}` on the
/// whole field (`n = 2`). The field must vanish on the boundary.
pub fn gn_check(v: &SpaceTimeField, params: &GNParams) -> Result<GnCheck> {
    if params.j != 0 || params.k != 1 || params.n != 2 {
        return Err(Error::InvalidParameter("only the j = 0, k = 1, n = 2 embedding is evaluated".into()));
    }
    let mesh = v.mesh();
    let scale = v.slices().iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
    for s in v.slices() {
        if mesh.boundary_vertices().iter().any(|&i| s[i].abs() > 1e-12 * (1.0 + scale)) {
            return Err(Error::InvalidParameter("field does not vanish on the boundary".into()));
        }
    }
    let (i0, i1, w) = slice_range(v, None)?;
    let q = params.q;
    let rule = tri7();
    let mut lq = 0.0;
    let mut grad2 = 0.0;
    let mut sup_l2: f64 = 0.0;
    for k in i0..=i1 {
        let s = v.slice(k);
        let mut a = 0.0;
        for t in 0..mesh.n_triangles() {
            let [p0, p1, p2] = mesh.triangle(t);
            let area = mesh.area(t);
            for (l, wq) in rule {
                let val = l[0] * s[p0] + l[1] * s[p1] + l[2] * s[p2];
                a += wq * area * val.abs().powf(q);
            }
        }
        lq += w[k - i0] * a;
        grad2 += w[k - i0] * crate::norms::slice_grad_l2_sq(mesh, s, &vec![true; mesh.n_triangles()]);
        sup_l2 = sup_l2.max(v.mass_norm(k));
    }
    let nf = params.n as f64;
    let lhs = lq.powf(1.0 / q);
    let rhs_factor = sup_l2.powf(2.0 / (nf + 2.0)) * grad2.sqrt().powf(nf / (nf + 2.0));
    let c1_hat = if rhs_factor > 0.0 { lhs / rhs_factor } else { 0.0 };
    Ok(GnCheck { lhs, rhs_factor, c1_hat })
}

/// One level of the cascade.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeLevel {
    pub m: usize,
    pub k_m: f64,
    pub rho_m: f64,
    /// `‖(u - k_m)₊‖²_{L²(Q_{ρ_m})}`.
    pub phi: f64,
    /// `φ_m / (k² |Q_{2ρ}|)`.
    pub y: f64,
    /// `|Q_{ρ_m} ∩ {u > k_{m+1}}|`.
    pub active: f64,
    /// `φ_{m+1}` over the one-step right-hand side, when that is positive.
    pub step_constant: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeResult {
    pub k: f64,
    pub theta0: f64,
    pub levels: Vec<CascadeLevel>,
    /// Nodal max of `u` over `Q_ρ`.
    pub max_u: f64,
    pub verified: bool,
}

impl CascadeResult {
    /// `max u / (2k)`, or 0 when `k = 0` and `u ≤ 0`.
    pub fn bound_ratio(&self) -> f64 {
        if self.k > 0.0 {
            self.max_u / (2.0 * self.k)
        } else if self.max_u <= 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub const CASCADE_DEPTH: usize = 8;

fn check_inside(u: &SpaceTimeField, c: &ParabolicCylinder) -> Result<()> {
    let mesh = u.mesh();
    for i in 0..64 {
        let a = std::f64::consts::TAU * i as f64 / 64.0;
        let x = [c.center[0] + c.radius * a.cos(), c.center[1] + c.radius * a.sin()];
        if mesh.locate(x).is_none() {
            return Err(Error::Geometry(format!("cylinder of radius {} leaves the mesh", c.radius)));
        }
    }
    let tol = 1e-9 * (1.0 + c.top.abs());
    if c.bottom() < u.time(0) - tol || c.top > u.time(u.n_slices() - 1) + tol {
        return Err(Error::Geometry(format!("cylinder window {:?} leaves the time range", c.window())));
    }
    Ok(())
}

// ∫∫ over a snapped cylinder of g(nodal value) with exact P1 squares.
fn cylinder_integral(u: &SpaceTimeField, c: &ParabolicCylinder, g: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let mesh = u.mesh();
    let sel = triangles_in_ball(mesh, c.center, c.radius);
    let (i0, i1) = time_window(u.times(), c.bottom(), c.top)?;
    let w = trapezoid_weights(u.times(), i0, i1);
    let area: f64 = (0..mesh.n_triangles()).filter(|&t| sel[t]).map(|t| mesh.area(t)).sum();
    let mut s = 0.0;
    let mut buf = vec![0.0; mesh.n_vertices()];
    for k in i0..=i1 {
        for (b, v) in buf.iter_mut().zip(u.slice(k)) {
            *b = g(*v);
        }
        s += w[k - i0] * crate::norms::slice_l2_sq(mesh, &buf, &sel);
    }
    Ok((s, area * (u.time(i1) - u.time(i0))))
}

/// Levels `m = 0..=depth` of the cascade for a given base level `k`.
pub fn cascade_levels(
    u: &SpaceTimeField,
    cyl: &ParabolicCylinder,
    k: f64,
    p: f64,
    depth: usize,
) -> Result<Vec<CascadeLevel>> {
    let n = 2.0;
    let rho = cyl.radius;
    let (_, q2) = cylinder_integral(u, &cyl.scaled(2.0), |v| v)?;
    let mut levels = Vec::with_capacity(depth + 1);
    for m in 0..=depth {
        let f = 2f64.powi(-(m as i32));
        let rho_m = (1.0 + f) * rho;
        let k_m = k * (2.0 - f);
        let k_next = k * (2.0 - 0.5 * f);
        let cm = ParabolicCylinder { radius: rho_m, ..*cyl };
        let (phi, _) = cylinder_integral(u, &cm, |v| (v - k_m).max(0.0))?;
        let active = level_truncate(u, k_next, Sign::Plus, Some(&cm))?.active_measure;
        let y = if k > 0.0 && q2 > 0.0 { phi / (k * k * q2) } else { 0.0 };
        levels.push(CascadeLevel { m, k_m, rho_m, phi, y, active, step_constant: None });
    }
    let e = 2.0 / (n + 2.0);
    for m in 0..depth {
        let phi = levels[m].phi;
        let rhs = 2f64.powf(2.0 * m as f64 * (1.0 + e))
            * (rho.powi(-2) * k.powf(-2.0 * e) * phi.powf(1.0 + e)
                + rho.powf(-2.0 * (1.0 - (n + 2.0) / p)) * k.powf(-(2.0 * e - 4.0 / p)) * phi.powf(1.0 + e - 2.0 / p));
        if rhs > 0.0 && rhs.is_finite() {
            levels[m].step_constant = Some(levels[m + 1].phi / rhs);
        }
    }
    Ok(levels)
}

/// The explicit sup bound on `Q_ρ`: with `C̃ = 1`, `b = 2^{2(1+2/(n+2))}`,
/// `ε = 2/(n+2) - 2/p`,
/// `k = (θ₀|Q_{2ρ}|)^{-1/2} ‖u‖_{L²(Q_{2ρ})} + ρ^{1-(n+2)/p} F_{0,2ρ}`;
/// verified when `max_{Q_ρ} u ≤ 2k · 1.05` and `φ_m` is nonincreasing from `m = 2`.
pub fn degiorgi_cascade(u: &SpaceTimeField, cyl: &ParabolicCylinder, sources: &SourceData) -> Result<CascadeResult> {
    let n = 2.0;
    let p = sources.p();
    if !(p > n + 2.0) {
        return Err(Error::Exponent(p));
    }
    let c2 = cyl.scaled(2.0);
    check_inside(u, &c2)?;
    let params = IterationParams::new(1.0, 2f64.powf(2.0 * (1.0 + 2.0 / (n + 2.0))), 2.0 / (n + 2.0) - 2.0 / p)?;
    let theta0 = params.theta0();
    let (u2, q2) = cylinder_integral(u, &c2, |v| v)?;
    let ball = Some((c2.center, c2.radius));
    let kappa = sources.kappa();
    let f0 = sample_norm(sources, u.mesh(), u.times(), c2.window(), ball, kappa, |s| s.f)
        + (0..2).map(|i| sample_norm(sources, u.mesh(), u.times(), c2.window(), ball, p, |s| s.fi[i])).sum::<f64>();
    let l2_term = if u2 > 0.0 { (u2 / (theta0 * q2)).sqrt() } else { 0.0 };
    let k = l2_term + cyl.radius.powf(1.0 - (n + 2.0) / p) * f0;

    let levels = cascade_levels(u, cyl, k, p, CASCADE_DEPTH)?;
    let mesh = u.mesh();
    let nodes: Vec<usize> = (0..mesh.n_vertices()).filter(|&i| cyl.contains_point(mesh.vertex(i))).collect();
    let (i0, i1) = time_window(u.times(), cyl.bottom(), cyl.top)?;
    let mut max_u = f64::NEG_INFINITY;
    for s in i0..=i1 {
        for &i in &nodes {
            max_u = max_u.max(u.slice(s)[i]);
        }
    }
    let monotone = levels.windows(2).skip(2).all(|w| w[1].phi <= w[0].phi * (1.0 + 1e-12) + 1e-300);
    let verified = max_u <= 2.0 * k * 1.05 && monotone;
    Ok(CascadeResult { k, theta0, levels, max_u, verified })
}

/// The same construction applied to `-u` with negated sources, bounding `u` from below.
pub fn degiorgi_cascade_lower(
    u: &SpaceTimeField,
    cyl: &ParabolicCylinder,
    sources: &SourceData,
) -> Result<CascadeResult> {
    degiorgi_cascade(&u.map(|v| -v, "negated"), cyl, &sources.negated())
}
