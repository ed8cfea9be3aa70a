//! Discrete norms, source functionals and empirical inequality constants.

mod cutoff;
mod holder;
mod integrals;
mod sources;

pub use cutoff::CutoffFunction;
pub use holder::{holder_seminorm_grad, piecewise_c1alpha, HolderOptions};
pub use integrals::{
    all_triangles, dudt_l2_space_time, grad_l2_space_time, l2_space_time, linf_interior, osc, piecewise_grad_sup,
    slice_grad_l2_sq, slice_l2_sq, steklov_mean, sup_l2_slices, time_window, trapezoid_weights, triangles_in_ball,
    triangles_in_shrunk, ParabolicCylinder,
};
pub use sources::{sample_norm, source_norms, visit_sources, LqAccumulator, SourceNorms, SourceSample};

use crate::coefficients::SourceData;
use crate::error::{Error, Result};
use crate::geometry::ShrunkRegion;
use crate::solver::SpaceTimeField;
use std::collections::BTreeMap;

/// Inequalities whose left/right ratio is tracked. RHS constants are 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Inequality {
    /// `sup_{t>ε²} ‖u(t)‖_{L²(D_ε)} ≤ ‖u‖_{L²(Q)} + F₀`.
    LinftyL2,
    /// `‖u‖_{L∞(D_ε×(ε²,T])} ≤ ‖u‖_{L²(Q)} + F₀`.
    Linfty,
    /// `‖∂_t u‖_{L²(D_ε×(ε²,T])} ≤ ‖u‖_{L²(Q)} + F₁`.
    DudtL2,
    /// `‖∇u‖_{L²(Q_ρ)} ≤ (ρ^{n/2} + ρ^{(n+2)/r'}) osc_{Q_2ρ} u + ‖f‖_{L^r(Q_2ρ)} + Σ ‖f_i‖_{L²(Q_2ρ)}`.
    GradL2Local,
    /// `‖∂_t u‖_{L²(Q_ρ)} ≤ ρ⁻¹‖∇u‖_{L²(Q_2ρ)} + ‖f‖_{L²(Q_2ρ)} + Σ (ρ⁻¹‖f_i‖ + ‖∂_t f_i‖)_{L²(Q_2ρ)}`.
    DudtL2Local,
    /// `Σ_m sup_{t>ε²} ‖u‖_{C^{1,α}(D_m ∩ D_ε)} ≤ ‖u‖_{L²(Q)} + F* + F**`.
    MainEstimate,
}

impl Inequality {
    pub const ALL: [Inequality; 6] = [
        Inequality::LinftyL2,
        Inequality::Linfty,
        Inequality::DudtL2,
        Inequality::GradL2Local,
        Inequality::DudtL2Local,
        Inequality::MainEstimate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Inequality::LinftyL2 => "linfty_l2",
            Inequality::Linfty => "linfty",
            Inequality::DudtL2 => "dudt_l2",
            Inequality::GradL2Local => "grad_l2_local",
            Inequality::DudtL2Local => "dudt_l2_local",
            Inequality::MainEstimate => "main_estimate",
        }
    }

    pub fn needs_cylinder(self) -> bool {
        matches!(self, Inequality::GradL2Local | Inequality::DudtL2Local)
    }
}

/// Geometry and options shared by all inequality checks.
#[derive(Clone, Debug)]
pub struct InequalityContext {
    pub shrunk: ShrunkRegion,
    /// `Q_ρ` for the local estimates; `Q_2ρ` is derived from it.
    pub cylinder: Option<ParabolicCylinder>,
    /// Hölder exponent `α'`.
    pub alpha: f64,
    pub holder: HolderOptions,
    /// Exponent `r` of the local gradient estimate.
    pub lebesgue_r: f64,
}

impl InequalityContext {
    pub fn new(shrunk: ShrunkRegion, alpha: f64) -> Self {
        InequalityContext { shrunk, cylinder: None, alpha, holder: HolderOptions::default(), lebesgue_r: 2.0 }
    }

    pub fn with_cylinder(mut self, c: ParabolicCylinder) -> Self {
        self.cylinder = Some(c);
        self
    }

    fn cylinder(&self) -> Result<ParabolicCylinder> {
        self.cylinder.ok_or_else(|| Error::InvalidParameter("local inequality needs a cylinder".into()))
    }
}

fn full_window(u: &SpaceTimeField) -> (f64, f64) {
    (u.time(0), u.time(u.n_slices() - 1))
}

fn late_window(u: &SpaceTimeField, eps: f64) -> (f64, f64) {
    (eps * eps, u.time(u.n_slices() - 1))
}

fn ratio(lhs: f64, rhs: f64) -> Result<f64> {
    if rhs > 0.0 {
        Ok(lhs / rhs)
    } else if lhs == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::ZeroRhs)
    }
}

/// Left and right sides of one inequality (right side with constant 1).
pub fn inequality_sides(
    which: Inequality,
    u: &SpaceTimeField,
    sources: &SourceData,
    ctx: &InequalityContext,
) -> Result<(f64, f64)> {
    let global = || -> Result<(f64, SourceNorms)> {
        let mesh = u.mesh();
        let n_regions = ctx.shrunk.base.n_regions();
        let l2 = l2_space_time(u, &all_triangles(mesh), full_window(u))?;
        Ok((l2, source_norms(sources, mesh, u.times(), n_regions, ctx.alpha, None, ctx.holder)?))
    };
    sides(which, u, sources, ctx, &global)
}

fn sides(
    which: Inequality,
    u: &SpaceTimeField,
    sources: &SourceData,
    ctx: &InequalityContext,
    global: &dyn Fn() -> Result<(f64, SourceNorms)>,
) -> Result<(f64, f64)> {
    let mesh = u.mesh();
    let n_regions = ctx.shrunk.base.n_regions();
    let eps = ctx.shrunk.epsilon;
    match which {
        Inequality::LinftyL2 => {
            let (l2, s) = global()?;
            let rhs = l2 + s.f0;
            Ok((sup_l2_slices(u, &ctx.shrunk)?, rhs))
        }
        Inequality::Linfty => {
            let (l2, s) = global()?;
            let rhs = l2 + s.f0;
            Ok((linf_interior(u, &ctx.shrunk)?, rhs))
        }
        Inequality::DudtL2 => {
            let sel = triangles_in_shrunk(mesh, &ctx.shrunk);
            let lhs = dudt_l2_space_time(u, &sel, late_window(u, eps))?;
            let (l2, s) = global()?;
            let rhs = l2 + s.f1;
            Ok((lhs, rhs))
        }
        Inequality::GradL2Local => {
            let c = ctx.cylinder()?;
            let c2 = c.scaled(2.0);
            let rho = c.radius;
            let lhs = grad_l2_space_time(u, &triangles_in_ball(mesh, c.center, rho), c.window())?;
            let r = ctx.lebesgue_r;
            let r_conj = r / (r - 1.0);
            let n = 2.0;
            let ball = Some((c2.center, c2.radius));
            let f_r = sample_norm(sources, mesh, u.times(), c2.window(), ball, r, |s| s.f);
            let fi: f64 = (0..2)
                .map(|i| sample_norm(sources, mesh, u.times(), c2.window(), ball, 2.0, |s| s.fi[i]))
                .sum();
            let rhs = (rho.powf(n / 2.0) + rho.powf((n + 2.0) / r_conj)) * osc(u, &c2)? + f_r + fi;
            Ok((lhs, rhs))
        }
        Inequality::DudtL2Local => {
            let c = ctx.cylinder()?;
            let c2 = c.scaled(2.0);
            let rho = c.radius;
            let lhs = dudt_l2_space_time(u, &triangles_in_ball(mesh, c.center, rho), c.window())?;
            let grad2 = grad_l2_space_time(u, &triangles_in_ball(mesh, c2.center, c2.radius), c2.window())?;
            let ball = Some((c2.center, c2.radius));
            let l2 = |g: &dyn Fn(&SourceSample) -> f64| sample_norm(sources, mesh, u.times(), c2.window(), ball, 2.0, g);
            let mut rhs = grad2 / rho + l2(&|s| s.f);
            for i in 0..2 {
                rhs += l2(&|s| s.fi[i]) / rho + l2(&|s| s.fi_dt[i]);
            }
            Ok((lhs, rhs))
        }
        Inequality::MainEstimate => {
            let lhs: f64 = piecewise_c1alpha(u, n_regions, &ctx.shrunk, ctx.alpha, ctx.holder)?.iter().sum();
            let (l2, s) = global()?;
            let rhs = l2 + s.fstar + s.fstarstar;
            Ok((lhs, rhs))
        }
    }
}

/// `LHS / RHS` of one inequality: the empirical constant. Zero over zero is 0.
pub fn inequality_ratio(
    which: Inequality,
    u: &SpaceTimeField,
    sources: &SourceData,
    ctx: &InequalityContext,
) -> Result<f64> {
    let (l, r) = inequality_sides(which, u, sources, ctx)?;
    ratio(l, r)
}

/// Every functional for one solved instance.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub sources: SourceNorms,
    pub l2: f64,
    pub sup_l2_slice: f64,
    pub linf_interior: f64,
    pub piecewise_grad_sup: Vec<f64>,
    pub piecewise_c1alpha: Vec<f64>,
    /// Oscillation on `Q_2ρ` when a cylinder is set.
    pub osc: Option<f64>,
    pub empirical_constants: BTreeMap<Inequality, f64>,
}

pub fn norm_report(u: &SpaceTimeField, sources: &SourceData, ctx: &InequalityContext) -> Result<NormReport> {
    let mesh = u.mesh();
    let n_regions = ctx.shrunk.base.n_regions();
    let src = source_norms(sources, mesh, u.times(), n_regions, ctx.alpha, ctx.cylinder.as_ref(), ctx.holder)?;
    let l2 = l2_space_time(u, &all_triangles(mesh), full_window(u))?;
    let c1a = piecewise_c1alpha(u, n_regions, &ctx.shrunk, ctx.alpha, ctx.holder)?;
    let mut emp = BTreeMap::new();
    for which in Inequality::ALL {
        if which.needs_cylinder() && ctx.cylinder.is_none() {
            continue;
        }
        let (lhs, rhs) = match which {
            Inequality::MainEstimate => (c1a.iter().sum(), l2 + src.fstar + src.fstarstar),
            _ => sides(which, u, sources, ctx, &|| Ok((l2, src)))?,
        };
        emp.insert(which, ratio(lhs, rhs)?);
    }
    Ok(NormReport {
        sources: src,
        l2,
        sup_l2_slice: sup_l2_slices(u, &ctx.shrunk)?,
        linf_interior: linf_interior(u, &ctx.shrunk)?,
        piecewise_grad_sup: piecewise_grad_sup(u, n_regions, &ctx.shrunk, late_window(u, ctx.shrunk.epsilon))?,
        piecewise_c1alpha: c1a,
        osc: ctx.cylinder.map(|c| osc(u, &c.scaled(2.0))).transpose()?,
        empirical_constants: emp,
    })
}

impl NormReport {
    /// Column names: `id, delta, h, tau`, the norms, per-region columns, then
    /// one `ratio_*` column per inequality in [`Inequality::ALL`] order.
    pub fn csv_header(n_regions: usize) -> Vec<String> {
        let mut h: Vec<String> = ["id", "delta", "h", "tau", "f0", "f1", "fstar", "fstarstar", "f0_rho", "l2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        h.extend(["sup_l2_slice", "linf_interior", "osc"].map(String::from));
        h.extend((1..=n_regions).map(|m| format!("grad_sup_{m}")));
        h.extend((1..=n_regions).map(|m| format!("c1alpha_{m}")));
        h.extend(Inequality::ALL.iter().map(|i| format!("ratio_{}", i.name())));
        h
    }

    /// Values in [`NormReport::csv_header`] order; absent entries are empty.
    pub fn csv_row(&self, id: &str, delta: f64, h: f64, tau: f64) -> Vec<String> {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        let s = &self.sources;
        let mut r = vec![id.to_string(), format!("{delta}"), format!("{h}"), format!("{tau}")];
        for v in [s.f0, s.f1, s.fstar, s.fstarstar] {
            r.push(format!("{v:e}"));
        }
        r.push(opt(s.f0_rho));
        for v in [self.l2, self.sup_l2_slice, self.linf_interior] {
            r.push(format!("{v:e}"));
        }
        r.push(opt(self.osc));
        r.extend(self.piecewise_grad_sup.iter().map(|v| format!("{v:e}")));
        r.extend(self.piecewise_c1alpha.iter().map(|v| format!("{v:e}")));
        r.extend(Inequality::ALL.iter().map(|i| opt(self.empirical_constants.get(i).copied())));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_layout, build_mesh, Mesh, OuterDomain};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn square(h: f64) -> Arc<Mesh> {
        let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
        Arc::new(build_mesh(&l, h).unwrap())
    }

    fn grid(n: usize, t: f64) -> Vec<f64> {
        (0..=n).map(|k| t * k as f64 / n as f64).collect()
    }

    #[test]
    fn unit_constant_has_unit_norm() {
        let m = square(0.25);
        let u = SpaceTimeField::from_fn(m.clone(), grid(4, 1.0), |_, _| 1.0, "one").unwrap();
        let v = l2_space_time(&u, &all_triangles(&m), (0.0, 1.0)).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn heat_mode_l2() {
        let m = square(1.0 / 64.0);
        let tt = 0.05;
        let u = SpaceTimeField::from_fn(
            m.clone(),
            grid(200, tt),
            |x, t| (-2.0 * PI * PI * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin(),
            "mode",
        )
        .unwrap();
        let exact = (0.25 * (1.0 - (-4.0 * PI * PI * tt).exp()) / (4.0 * PI * PI)).sqrt();
        let v = l2_space_time(&u, &all_triangles(&m), (0.0, tt)).unwrap();
        assert!((v - exact).abs() / exact < 2e-3, "{v} vs {exact}");
    }

    #[test]
    fn steklov_of_linear_time() {
        let m = square(0.5);
        let u = SpaceTimeField::from_fn(m, grid(10, 1.0), |_, t| t, "t").unwrap();
        let v = steklov_mean(&u, 0.2).unwrap();
        assert_eq!(v.n_slices(), 9);
        for k in 0..v.n_slices() {
            assert!(v.slice(k).iter().all(|&x| (x - (v.time(k) + 0.1)).abs() < 1e-14));
        }
        assert!(steklov_mean(&u, 0.15).is_err());
        assert!(matches!(steklov_mean(&u, 2.0), Err(Error::EmptyWindow(_))));
    }

    #[test]
    fn oscillation_of_linear() {
        let l = build_layout(OuterDomain::Square { min: [-1.0, -1.0], side: 2.0 }, vec![], None).unwrap();
        let m = Arc::new(build_mesh(&l, 1.0 / 32.0).unwrap());
        let u = SpaceTimeField::from_fn(m, grid(4, 1.0), |x, _| x[0], "x").unwrap();
        let c = ParabolicCylinder::new([0.0, 0.0], 1.0, 0.25).unwrap();
        assert!((osc(&u, &c).unwrap() - 0.5).abs() < 1e-12);
        let far = ParabolicCylinder::new([5.0, 5.0], 1.0, 0.25).unwrap();
        assert!(matches!(osc(&u, &far), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn cutoff_constant_is_moderate() {
        let c = CutoffFunction::new(ParabolicCylinder::new([0.3, -0.2], 2.0, 0.4).unwrap());
        let k = c.certify(40);
        assert!(k > 1.0 && k <= 64.0, "{k}");
        assert!(c.eval([0.3, -0.2], 2.0 - 0.16) < 1e-30);
        assert_eq!(c.eval([0.35, -0.2], 2.0), 1.0);
        assert_eq!(c.eval([0.75, -0.2], 2.0), 0.0);
    }

    #[test]
    fn unit_source_norms() {
        let m = square(0.25);
        let s = SourceData::zero(5.0).unwrap().with_f(|_, _| 1.0);
        let n = source_norms(&s, &m, &grid(4, 1.0), 1, 0.5, None, HolderOptions::default()).unwrap();
        assert!((n.f0 - 1.0).abs() < 1e-12);
        assert!((n.f1 - 1.0).abs() < 1e-12);
        assert!((n.fstar - 3.0).abs() < 1e-12);
        assert_eq!(n.fstarstar, 0.0);
    }

    #[test]
    fn flux_time_derivative_norm() {
        let m = square(1.0 / 16.0);
        let s = SourceData::zero(5.0).unwrap().with_flux(0, |x, t, _| t * x[0]);
        let v = sample_norm(&s, &m, &grid(4, 1.0), (0.0, 1.0), None, 2.0, |q| q.fi_dt[0]);
        // TRI3 is exact for quadratics.
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-8, "{v}");
    }

    #[test]
    fn zero_data_gives_zero() {
        let m = square(0.25);
        let s = SourceData::zero(6.0).unwrap();
        let n = source_norms(&s, &m, &grid(2, 1.0), 1, 0.5, None, HolderOptions::default()).unwrap();
        assert_eq!(n, SourceNorms::default());
        assert!(matches!(SourceData::zero(4.0), Err(Error::Exponent(_))));
    }

    #[test]
    fn quadratic_holder_quotient() {
        let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
        let m = Arc::new(build_mesh(&l, 1.0 / 16.0).unwrap());
        let u = SpaceTimeField::from_fn(m, vec![0.0], |x, _| 0.5 * (x[0] * x[0] + x[1] * x[1]), "q").unwrap();
        let shrunk = ShrunkRegion::new(&l, 0.0).unwrap();
        let alpha = 0.3;
        let v = holder_seminorm_grad(&u, 1, alpha, 0, HolderOptions { pair_budget: 200_000, seed: 1 }, &shrunk).unwrap();
        let expect = 2f64.sqrt().powf(1.0 - alpha);
        assert!((v - expect).abs() / expect < 0.05, "{v} vs {expect}");
    }
}
