//! Coefficient fields with per-region branches, and source data.

use crate::error::{Error, Result};
use crate::geometry::{build_layout, InclusionLayout, OuterDomain, Point, EXTERIOR};
use crate::quadrature::halton2;
use std::fmt;
use std::sync::Arc;

pub type Mat2 = [[f64; 2]; 2];
pub type MatrixFn = Arc<dyn Fn(Point) -> Mat2 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;
pub type RegionalFn = Arc<dyn Fn(Point, f64, usize) -> f64 + Send + Sync>;

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn scaled_identity(c: f64) -> Mat2 {
    [[c, 0.0], [0.0, c]]
}

/// Eigenvalues of the symmetric part, smallest first.
pub fn sym_eigenvalues(a: &Mat2) -> (f64, f64) {
    let b = 0.5 * (a[0][1] + a[1][0]);
    let m = 0.5 * (a[0][0] + a[1][1]);
    let r = (0.5 * (a[0][0] - a[1][1])).hypot(b);
    (m - r, m + r)
}

pub fn is_symmetric(a: &Mat2) -> bool {
    let scale = a[0][0].abs().max(a[1][1].abs()).max(1e-300);
    (a[0][1] - a[1][0]).abs() <= 1e-14 * scale
}

/// One region's coefficient.
#[derive(Clone)]
pub enum Branch {
    Constant(Mat2),
    /// `I + (M - 1) x̂ x̂ᵀ`, equal to `I` at the origin.
    Meyers(f64),
    Custom(MatrixFn),
}

impl Branch {
    pub fn eval(&self, x: Point) -> Mat2 {
        match self {
            Branch::Constant(a) => *a,
            Branch::Meyers(m) => meyers_matrix(*m, x),
            Branch::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Constant(a) => write!(f, "Constant({a:?})"),
            Branch::Meyers(m) => write!(f, "Meyers({m})"),
            Branch::Custom(_) => write!(f, "Custom"),
        }
    }
}

fn meyers_matrix(m: f64, x: Point) -> Mat2 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return IDENTITY;
    }
    let c = (m - 1.0) / r2;
    let off = c * x[0] * x[1];
    [[1.0 + c * x[0] * x[0], off], [off, 1.0 + c * x[1] * x[1]]]
}

/// Piecewise coefficient `a(x) = a_m(x)` on region `m`, with declared bounds
/// `λ|ξ|² ≤ a ξ·ξ ≤ Λ|ξ|²`.
#[derive(Clone, Debug)]
pub struct CoefficientField {
    layout: InclusionLayout,
    branches: Vec<Branch>,
    lambda: f64,
    big_lambda: f64,
    mu: f64,
    exterior: Option<f64>,
}

impl CoefficientField {
    /// Field with caller-declared ellipticity bounds.
    pub fn new(layout: &InclusionLayout, branches: Vec<Branch>, lambda: f64, big_lambda: f64) -> Result<Self> {
        if branches.len() != layout.n_regions() {
            return Err(Error::InvalidParameter(format!(
                "{} branches for {} regions",
                branches.len(),
                layout.n_regions()
            )));
        }
        if !(lambda > 0.0 && big_lambda >= lambda) {
            return Err(Error::InvalidParameter(format!("bad bounds ({lambda}, {big_lambda})")));
        }
        Ok(CoefficientField { layout: layout.clone(), branches, lambda, big_lambda, mu: 1.0, exterior: None })
    }

    pub fn constant(layout: &InclusionLayout, a: Mat2) -> Result<Self> {
        piecewise_contrast_field(layout, &vec![a; layout.n_regions()])
    }

    pub fn layout(&self) -> &InclusionLayout {
        &self.layout
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    /// Regularity constant of the branches (metadata only).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn exterior(&self) -> Option<f64> {
        self.exterior
    }

    pub fn n_regions(&self) -> usize {
        self.branches.len()
    }

    pub fn branch(&self, m: usize) -> &Branch {
        &self.branches[m - 1]
    }

    /// Branch `m` evaluated at `x`; region [`EXTERIOR`] needs an extended field.
    pub fn eval_region(&self, m: usize, x: Point) -> Result<Mat2> {
        if m == EXTERIOR {
            return self.exterior.map(scaled_identity).ok_or(Error::OutsideDomain(x[0], x[1]));
        }
        let b = self
            .branches
            .get(m - 1)
            .ok_or_else(|| Error::InvalidParameter(format!("no region {m}")))?;
        Ok(b.eval(x))
    }

    pub fn eval(&self, x: Point) -> Result<Mat2> {
        if let Some(big) = self.exterior {
            if self.layout.outer.inner_distance(x) < 0.0 {
                return Ok(scaled_identity(big));
            }
        }
        let m = self.layout.classify(x)?;
        self.eval_region(m, x)
    }

    /// Same field with `ΛI` outside the domain; `Λ` must dominate the field's bound.
    pub fn extend_outside(&self, big: f64) -> Result<Self> {
        if !(big >= self.big_lambda) {
            return Err(Error::InvalidParameter(format!(
                "exterior value {big} below the ellipticity bound {}",
                self.big_lambda
            )));
        }
        let mut f = self.clone();
        f.exterior = Some(big);
        Ok(f)
    }
}

/// Constant SPD matrix per region (`mats[m - 1]` for region `m`); bounds are the
/// extreme eigenvalues.
pub fn piecewise_contrast_field(layout: &InclusionLayout, mats: &[Mat2]) -> Result<CoefficientField> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for (i, a) in mats.iter().enumerate() {
        let (l, h) = sym_eigenvalues(a);
        if !is_symmetric(a) || !(l > 0.0) || !h.is_finite() {
            return Err(Error::NotSpd(i + 1));
        }
        lo = lo.min(l);
        hi = hi.max(h);
    }
    CoefficientField::new(layout, mats.iter().map(|a| Branch::Constant(*a)).collect(), lo, hi)
}

/// Unit disk with `a = I + (M - 1) x̂ x̂ᵀ`.
pub fn meyers_field(m: f64) -> Result<CoefficientField> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("contrast M = {m} must exceed 1")));
    }
    let layout = build_layout(OuterDomain::unit_disk(), vec![], None)?;
    CoefficientField::new(&layout, vec![Branch::Meyers(m)], 1.0, m)
}

/// `u(x) = |x|^{1/√M} x₁/|x|`, zero at the origin.
pub fn meyers_solution(x: Point, m: f64) -> f64 {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return 0.0;
    }
    r.powf(1.0 / m.sqrt()) * x[0] / r
}

pub fn meyers_gradient(x: Point, m: f64) -> Point {
    let r = x[0].hypot(x[1]);
    let b = 1.0 / m.sqrt();
    let rb = r.powf(b - 1.0);
    let (c, s) = (x[0] / r, x[1] / r);
    // u = r^b cos φ
    [rb * (b * c * c + s * s), rb * (b - 1.0) * c * s]
}

/// Sample estimate of `(λ, Λ)` over the outer domain.
pub fn ellipticity_bounds(field: &CoefficientField, samples: usize) -> Result<(f64, f64)> {
    let (lo, hi) = field.layout.outer.bbox();
    let outer = field.layout.outer;
    sample_bounds(field, lo, hi, samples, |x| outer.contains_closed(x))
}

/// Sample estimate over an arbitrary box (useful for extended fields).
pub fn ellipticity_bounds_in(field: &CoefficientField, lo: Point, hi: Point, samples: usize) -> Result<(f64, f64)> {
    let outer = field.layout.outer;
    let ext = field.exterior.is_some();
    sample_bounds(field, lo, hi, samples, |x| ext || outer.contains_closed(x))
}

fn sample_bounds(
    field: &CoefficientField,
    lo: Point,
    hi: Point,
    samples: usize,
    keep: impl Fn(Point) -> bool,
) -> Result<(f64, f64)> {
    let mut lmin = f64::INFINITY;
    let mut lmax: f64 = 0.0;
    let mut used = 0;
    let mut i = 1u64;
    while used < samples && i < 64 * samples as u64 + 64 {
        let u = halton2(i);
        i += 1;
        let x = [lo[0] + u[0] * (hi[0] - lo[0]), lo[1] + u[1] * (hi[1] - lo[1])];
        if !keep(x) {
            continue;
        }
        let a = field.eval(x)?;
        if !is_symmetric(&a) {
            return Err(Error::NonSymmetric(x[0], x[1]));
        }
        let (l, h) = sym_eigenvalues(&a);
        lmin = lmin.min(l);
        lmax = lmax.max(h);
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyRegion("no sample points in the domain".into()));
    }
    Ok((lmin, lmax))
}

/// `κ = p(n+2)/(n+2+p)`.
pub fn kappa(p: f64, n: usize) -> f64 {
    let n2 = n as f64 + 2.0;
    p * n2 / (n2 + p)
}

/// Right-hand side `f` and flux terms `f_i` of the parabolic problem in two
/// space dimensions, with the integrability exponent `p > n + 2`.
#[derive(Clone)]
pub struct SourceData {
    f: Option<SpaceTimeFn>,
    df_dt: Option<SpaceTimeFn>,
    fi: [Option<RegionalFn>; 2],
    dfi_dt: [Option<RegionalFn>; 2],
    p: f64,
}

impl fmt::Debug for SourceData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceData")
            .field("f", &self.f.is_some())
            .field("fi", &[self.fi[0].is_some(), self.fi[1].is_some()])
            .field("p", &self.p)
            .finish()
    }
}

impl SourceData {
    pub fn zero(p: f64) -> Result<Self> {
        if !(p > 4.0) {
            return Err(Error::Exponent(p));
        }
        Ok(SourceData { f: None, df_dt: None, fi: [None, None], dfi_dt: [None, None], p })
    }

    pub fn with_f(mut self, f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.f = Some(Arc::new(f));
        self
    }

    /// Closed-form `∂f/∂t`; otherwise central differences are used.
    pub fn with_f_dt(mut self, d: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.df_dt = Some(Arc::new(d));
        self
    }

    pub fn with_flux(mut self, i: usize, fi: impl Fn(Point, f64, usize) -> f64 + Send + Sync + 'static) -> Self {
        self.fi[i] = Some(Arc::new(fi));
        self
    }

    /// Closed-form time derivative of `f_i`; otherwise central differences are used.
    pub fn with_flux_dt(mut self, i: usize, d: impl Fn(Point, f64, usize) -> f64 + Send + Sync + 'static) -> Self {
        self.dfi_dt[i] = Some(Arc::new(d));
        self
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn kappa(&self) -> f64 {
        kappa(self.p, 2)
    }

    pub fn has_f(&self) -> bool {
        self.f.is_some()
    }

    pub fn has_flux(&self) -> bool {
        self.fi.iter().any(Option::is_some)
    }

    pub fn is_zero(&self) -> bool {
        !self.has_f() && !self.has_flux()
    }

    pub fn f(&self, x: Point, t: f64) -> f64 {
        self.f.as_ref().map_or(0.0, |f| f(x, t))
    }

    pub fn f_dt(&self, x: Point, t: f64) -> f64 {
        if let Some(d) = &self.df_dt {
            return d(x, t);
        }
        match &self.f {
            None => 0.0,
            Some(f) => {
                let dt = 1e-6 * (1.0 + t.abs());
                (f(x, t + dt) - f(x, t - dt)) / (2.0 * dt)
            }
        }
    }

    /// Negated data (same norms).
    pub fn negated(&self) -> SourceData {
        let neg_st = |g: &Option<SpaceTimeFn>| -> Option<SpaceTimeFn> {
            g.clone().map(|g| Arc::new(move |x: Point, t: f64| -g(x, t)) as SpaceTimeFn)
        };
        let neg_r = |g: &Option<RegionalFn>| -> Option<RegionalFn> {
            g.clone().map(|g| Arc::new(move |x: Point, t: f64, m: usize| -g(x, t, m)) as RegionalFn)
        };
        SourceData {
            f: neg_st(&self.f),
            df_dt: neg_st(&self.df_dt),
            fi: [neg_r(&self.fi[0]), neg_r(&self.fi[1])],
            dfi_dt: [neg_r(&self.dfi_dt[0]), neg_r(&self.dfi_dt[1])],
            p: self.p,
        }
    }

    pub fn flux(&self, i: usize, x: Point, t: f64, region: usize) -> f64 {
        self.fi[i].as_ref().map_or(0.0, |f| f(x, t, region))
    }

    pub fn flux_dt(&self, i: usize, x: Point, t: f64, region: usize) -> f64 {
        if let Some(d) = &self.dfi_dt[i] {
            return d(x, t, region);
        }
        match &self.fi[i] {
            None => 0.0,
            Some(f) => {
                let dt = 1e-6 * (1.0 + t.abs());
                (f(x, t + dt, region) - f(x, t - dt, region)) / (2.0 * dt)
            }
        }
    }
}
