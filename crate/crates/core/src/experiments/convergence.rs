use super::output::{fmt, strings, write_table};
use super::plot::{emit_plot, PlotSpec};
use super::{positive, range2, Check, ExperimentConfig};
use crate::coefficients::{piecewise_contrast_field, scaled_identity, CoefficientField, SourceData, IDENTITY};
use crate::error::{Error, Result};
use crate::geometry::{build_layout, build_mesh, disk_pair, Mesh, OuterDomain, Point};
use crate::quadrature::tri7;
use crate::solver::{assemble, solve_elliptic, solve_parabolic, ParabolicProblem, SpaceTimeField, ThetaStepper};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Implicit Euler steps before switching to the configured θ.
pub const STARTUP_STEPS: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceParams {
    pub space_h: Vec<f64>,
    pub time_steps: Vec<f64>,
    /// Reference step is the smallest step over this divisor.
    pub reference_divisor: f64,
    pub time_h: f64,
    pub final_time: f64,
    pub space_range: (f64, f64),
    pub euler_range: (f64, f64),
    pub crank_nicolson_range: (f64, f64),
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        ConvergenceParams::from_config(&ExperimentConfig::defaults(super::Experiment::Convergence))
            .expect("default convergence config is valid")
    }
}

impl ConvergenceParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        ConvergenceParams {
            space_h: cfg.nums("convergence.space_h")?.to_vec(),
            time_steps: cfg.nums("convergence.time_steps")?.to_vec(),
            reference_divisor: cfg.num("convergence.reference_divisor")?,
            time_h: cfg.num("mesh.h")?,
            final_time: cfg.num("time.final")?,
            space_range: range2(cfg, "convergence.space_range")?,
            euler_range: range2(cfg, "convergence.euler_range")?,
            crank_nicolson_range: range2(cfg, "convergence.crank_nicolson_range")?,
        }
        .validated()
    }

    pub fn validated(mut self) -> Result<Self> {
        for list in [&mut self.space_h, &mut self.time_steps] {
            if list.len() < 2 {
                return Err(Error::Config("convergence studies need at least two resolutions".into()));
            }
            for &v in list.iter() {
                positive("resolution", v)?;
            }
            list.sort_by(|a, b| b.total_cmp(a));
        }
        positive("mesh.h", self.time_h)?;
        positive("time.final", self.final_time)?;
        if !(self.reference_divisor >= 2.0) {
            return Err(Error::Config("convergence.reference_divisor must be at least 2".into()));
        }
        for &dt in &self.time_steps {
            let n = self.final_time / dt;
            if (n - n.round()).abs() > 1e-9 * n {
                return Err(Error::Config(format!("time step {dt} does not divide time.final")));
            }
        }
        Ok(self)
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceResult {
    /// `(h, L² error)` of the stationary problem.
    pub space: Vec<(f64, f64)>,
    /// `(τ, error against the reference)` for `θ = 1` and `θ = 1/2`.
    pub euler: Vec<(f64, f64)>,
    pub crank_nicolson: Vec<(f64, f64)>,
    /// Largest `‖uⁿ⁺¹‖_B / ‖uⁿ‖_B` of a source-free implicit Euler run.
    pub b_norm_growth: f64,
    pub params: ConvergenceParams,
    pub files: Vec<PathBuf>,
}

/// Successive rates `log(e₀/e₁)/log(x₀/x₁)`.
pub fn rates(v: &[(f64, f64)]) -> Vec<f64> {
    v.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect()
}

fn rate_checks(name: &str, v: &[(f64, f64)], (lo, hi): (f64, f64)) -> Vec<Check> {
    rates(v)
        .into_iter()
        .enumerate()
        .map(|(i, r)| Check::within(&format!("{name} rate {}", i + 1), r, lo, hi))
        .collect()
}

impl ConvergenceResult {
    pub fn checks(&self) -> Vec<Check> {
        let p = &self.params;
        let mut out = rate_checks("space", &self.space, p.space_range);
        out.extend(rate_checks("implicit Euler", &self.euler, p.euler_range));
        out.extend(rate_checks("Crank-Nicolson", &self.crank_nicolson, p.crank_nicolson_range));
        out.push(Check::at_most("B-norm step ratio", self.b_norm_growth, 1.0));
        out
    }

    pub fn summary(&self) -> Vec<String> {
        let show = |v: &[f64]| v.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ");
        vec![
            format!("space rates [{}]", show(&rates(&self.space))),
            format!("implicit Euler rates [{}]", show(&rates(&self.euler))),
            format!("Crank-Nicolson rates [{}]", show(&rates(&self.crank_nicolson))),
            format!("largest B-norm step ratio {:.15}", self.b_norm_growth),
        ]
    }

    fn write(&mut self, dir: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self.space.iter().map(|&(h, e)| vec![fmt(h), fmt(e)]).collect();
        let space = write_table(&dir.join("convergence_space.csv"), &strings(&["h", "l2_error"]), &rows)?;
        let rows: Vec<Vec<String>> = self
            .euler
            .iter()
            .zip(&self.crank_nicolson)
            .map(|(a, b)| vec![fmt(a.0), fmt(a.1), fmt(b.1)])
            .collect();
        let time = write_table(
            &dir.join("convergence_time.csv"),
            &strings(&["tau", "error_euler", "error_crank_nicolson"]),
            &rows,
        )?;
        let s1 = dir.join("convergence_space.svg");
        emit_plot(&space, &PlotSpec::new("h", &["l2_error"]).log_log().with_slope().titled("space"), &s1)?;
        let s2 = dir.join("convergence_time.svg");
        emit_plot(
            &time,
            &PlotSpec::new("tau", &["error_euler", "error_crank_nicolson"]).log_log().with_slope().titled("time"),
            &s2,
        )?;
        self.files.extend([space, time, s1, s2]);
        Ok(())
    }
}

fn sine(x: Point) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

fn unit_square(h: f64) -> Result<(crate::geometry::InclusionLayout, Arc<Mesh>)> {
    let l = build_layout(OuterDomain::unit_square(), vec![], None)?;
    let m = Arc::new(build_mesh(&l, h)?);
    Ok((l, m))
}

/// `‖u_h - u‖_{L²}` with a seven-point rule.
pub fn l2_error(m: &Mesh, u: &[f64], exact: impl Fn(Point) -> f64) -> f64 {
    let q = tri7();
    let mut s = 0.0;
    for t in 0..m.n_triangles() {
        let [a, b, c] = m.triangle(t);
        let p = m.corners(t);
        for (l, w) in q {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let uh = l[0] * u[a] + l[1] * u[b] + l[2] * u[c];
            s += w * m.area(t) * (uh - exact(x)).powi(2);
        }
    }
    s.sqrt()
}

fn space_error(h: f64) -> Result<(f64, f64)> {
    let (l, m) = unit_square(h)?;
    let field = CoefficientField::constant(&l, IDENTITY)?;
    let src = SourceData::zero(5.0)?.with_f(|x, _| 2.0 * PI * PI * sine(x));
    let u = solve_elliptic(&m, &field, &src, None)?;
    Ok((h, l2_error(&m, u.last(), sine)))
}

// u = e^{-t} sin(πx) sin(πy) with the matching source. Crank-Nicolson runs
// open with two implicit Euler steps to damp the stiff part of the
// interpolated initial datum.
fn heat_run(m: &Arc<Mesh>, field: &CoefficientField, t: f64, dt: f64, theta: f64) -> Result<Vec<f64>> {
    let src = SourceData::zero(5.0)?.with_f(|x, t| (2.0 * PI * PI - 1.0) * (-t).exp() * sine(x));
    let p = ParabolicProblem::new(m.clone(), field.clone(), src, t, dt).with_initial(sine);
    let mut s = ThetaStepper::new(&p)?;
    let (k, b) = assemble(m, field)?;
    while !s.done() {
        if s.step_index() == STARTUP_STEPS.min(s.n_steps()) && theta != 1.0 {
            s.set_theta(theta, &k, &b);
        }
        s.advance()?;
    }
    Ok(s.values().to_vec())
}

fn b_norm_growth() -> Result<f64> {
    let l = disk_pair(0.15, 0.0)?;
    let m = Arc::new(build_mesh(&l, 1.0 / 32.0)?);
    let field = piecewise_contrast_field(&l, &[scaled_identity(10.0), scaled_identity(10.0), IDENTITY])?;
    let p = ParabolicProblem::new(m, field, SourceData::zero(5.0)?, 0.2, 0.01)
        .with_initial(|x| (PI * x[0]).sin() * (3.0 * PI * x[1]).sin() + 0.3);
    let u = solve_parabolic(&p)?;
    Ok((1..u.n_slices()).map(|k| u.mass_norm(k) / u.mass_norm(k - 1)).fold(0.0, f64::max))
}

pub fn run_convergence(p: &ConvergenceParams, out: Option<&Path>) -> Result<ConvergenceResult> {
    let p = p.clone().validated()?;
    let space = p.space_h.par_iter().map(|&h| space_error(h)).collect::<Result<Vec<_>>>()?;

    let (l, m) = unit_square(p.time_h)?;
    let field = CoefficientField::constant(&l, IDENTITY)?;
    let finest = p.time_steps.iter().copied().fold(f64::INFINITY, f64::min);
    let reference = heat_run(&m, &field, p.final_time, finest / p.reference_divisor, 0.5)?;
    let diff = |u: &[f64]| -> Result<f64> {
        let d: Vec<f64> = u.iter().zip(&reference).map(|(a, b)| a - b).collect();
        Ok(SpaceTimeField::new(m.clone(), vec![0.0], vec![d], "difference")?.mass_norm(0))
    };
    let mut euler = Vec::new();
    let mut crank_nicolson = Vec::new();
    for &dt in &p.time_steps {
        euler.push((dt, diff(&heat_run(&m, &field, p.final_time, dt, 1.0)?)?));
        crank_nicolson.push((dt, diff(&heat_run(&m, &field, p.final_time, dt, 0.5)?)?));
    }
    let mut r = ConvergenceResult {
        space,
        euler,
        crank_nicolson,
        b_norm_growth: b_norm_growth()?,
        params: p,
        files: Vec::new(),
    };
    if let Some(dir) = out {
        r.write(dir)?;
    }
    Ok(r)
}
