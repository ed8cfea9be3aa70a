use super::output::{fmt, strings, write_table};
use super::plot::{emit_plot, PlotSpec};
use super::{fit_slope, positive, time_grid, Check, ExperimentConfig};
use crate::coefficients::{meyers_field, meyers_solution, SourceData};
use crate::error::{Error, Result};
use crate::geometry::build_mesh;
use crate::solver::{solve_parabolic, ParabolicProblem};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Radii of the analytic ray fit.
const RAY_RADII: (f64, f64, usize) = (1e-4, 0.5, 40);

#[derive(Clone, Debug, PartialEq)]
pub struct MeyersParams {
    pub ms: Vec<f64>,
    /// Run the finite element blowup fit as well as the ray fit.
    pub fem: bool,
    pub h: f64,
    /// Inner annulus radius in units of `h`.
    pub r_min_factor: f64,
    pub r_max: f64,
    pub annuli: usize,
    pub min_annuli: usize,
    pub rays: usize,
    pub time_step: f64,
    pub final_time: f64,
    pub ray_tol: f64,
    pub slope_tol: f64,
}

impl Default for MeyersParams {
    fn default() -> Self {
        MeyersParams::from_config(&ExperimentConfig::defaults(super::Experiment::Meyers))
            .expect("default meyers config is valid")
    }
}

impl MeyersParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        MeyersParams {
            ms: cfg.nums("meyers.ms")?.to_vec(),
            fem: cfg.flag("meyers.fem")?,
            h: cfg.num("mesh.h")?,
            r_min_factor: cfg.num("meyers.r_min_factor")?,
            r_max: cfg.num("meyers.r_max")?,
            annuli: cfg.count("meyers.annuli")?,
            min_annuli: cfg.count("meyers.min_annuli")?,
            rays: cfg.count("meyers.rays")?,
            time_step: cfg.num("time.step")?,
            final_time: cfg.num("time.final")?,
            ray_tol: cfg.num("meyers.ray_tol")?,
            slope_tol: cfg.num("meyers.slope_tol")?,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.ms.is_empty() {
            return Err(Error::Config("meyers.ms is empty".into()));
        }
        if let Some(m) = self.ms.iter().find(|m| !(**m > 1.0 && m.is_finite())) {
            return Err(Error::Config(format!("contrast M = {m} must exceed 1")));
        }
        positive("mesh.h", self.h)?;
        positive("meyers.r_min_factor", self.r_min_factor)?;
        positive("meyers.r_max", self.r_max)?;
        positive("meyers.ray_tol", self.ray_tol)?;
        positive("meyers.slope_tol", self.slope_tol)?;
        if self.r_max >= 1.0 {
            return Err(Error::Config("meyers.r_max must stay inside the unit disk".into()));
        }
        time_grid(self.final_time, self.time_step)?;
        Ok(self)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min_factor * self.h
    }
}

/// Log-log slope of `|u(x) - u(0)|` along rays from the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct RayFit {
    pub m: f64,
    /// Mean slope over the rays.
    pub exponent: f64,
    /// Largest distance of a single ray's slope from the mean.
    pub ray_deviation: f64,
    /// `(r, |u(r e)|)` along the first ray.
    pub profile: Vec<(f64, f64)>,
}

impl RayFit {
    pub fn expected(&self) -> f64 {
        1.0 / self.m.sqrt()
    }
}

/// Rays at angles `(k + 1/2) 2π / rays`, which keeps `cos φ` away from 0 for even counts.
pub fn ray_fit(m: f64, rays: usize) -> Result<RayFit> {
    if !(m > 1.0) || rays == 0 {
        return Err(Error::InvalidParameter(format!("M = {m}, rays = {rays}")));
    }
    let (r0, r1, n) = RAY_RADII;
    let radii: Vec<f64> = (0..n).map(|i| r0 * (r1 / r0).powf(i as f64 / (n - 1) as f64)).collect();
    let mut slopes = Vec::with_capacity(rays);
    let mut profile = Vec::new();
    for k in 0..rays {
        let phi = (k as f64 + 0.5) * 2.0 * PI / rays as f64;
        let e = [phi.cos(), phi.sin()];
        if e[0].abs() < 1e-3 {
            continue;
        }
        let u0 = meyers_solution([0.0, 0.0], m);
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .map(|&r| {
                let v = (meyers_solution([r * e[0], r * e[1]], m) - u0).abs();
                if slopes.is_empty() {
                    profile.push((r, v));
                }
                (r.ln(), v.ln())
            })
            .collect();
        slopes.push(fit_slope(&pts)?);
    }
    let exponent = slopes.iter().sum::<f64>() / slopes.len() as f64;
    let ray_deviation = slopes.iter().map(|s| (s - exponent).abs()).fold(0.0, f64::max);
    Ok(RayFit { m, exponent, ray_deviation, profile })
}

/// Slope of `max |∇u_h|` on geometric annuli against radius.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusFit {
    pub m: f64,
    pub slope: f64,
    /// `(geometric mid-radius, max |∇u_h|)` per resolved annulus.
    pub annuli: Vec<(f64, f64)>,
    pub n_vertices: usize,
}

impl AnnulusFit {
    pub fn expected(&self) -> f64 {
        1.0 / self.m.sqrt() - 1.0
    }
}

/// Solves the parabolic problem on the unit disk with the exact solution as
/// initial and boundary data and fits the interior gradient growth.
pub fn annulus_fit(m: f64, p: &MeyersParams) -> Result<AnnulusFit> {
    let (r0, r1) = (p.r_min(), p.r_max);
    if !(r0 < r1) {
        return Err(Error::EmptyWindow(format!("annuli [{r0}, {r1}] are empty at h = {}", p.h)));
    }
    let field = meyers_field(m)?;
    let mesh = Arc::new(build_mesh(field.layout(), p.h)?);
    let problem = ParabolicProblem::new(mesh.clone(), field, SourceData::zero(5.0)?, p.final_time, p.time_step)
        .with_boundary(move |x, _| meyers_solution(x, m))
        .with_initial(move |x| meyers_solution(x, m));
    let u = solve_parabolic(&problem)?;
    let last = u.n_slices() - 1;
    let n = p.annuli;
    let edges: Vec<f64> = (0..=n).map(|i| r0 * (r1 / r0).powf(i as f64 / n as f64)).collect();
    let mut best = vec![None::<f64>; n];
    for t in 0..mesh.n_triangles() {
        let b = mesh.barycenter(t);
        let r = b[0].hypot(b[1]);
        if r < r0 || r >= r1 {
            continue;
        }
        let k = edges.partition_point(|&e| e <= r).clamp(1, n) - 1;
        let g = u.gradient(last, t);
        let v = g[0].hypot(g[1]);
        best[k] = Some(best[k].map_or(v, |w: f64| w.max(v)));
    }
    let annuli: Vec<(f64, f64)> = best
        .iter()
        .enumerate()
        .filter_map(|(k, b)| b.map(|v| ((edges[k] * edges[k + 1]).sqrt(), v)))
        .collect();
    if annuli.len() < p.min_annuli {
        return Err(Error::EmptyWindow(format!(
            "{} annuli resolved in [{r0}, {r1}], need {}",
            annuli.len(),
            p.min_annuli
        )));
    }
    let pts: Vec<(f64, f64)> = annuli.iter().map(|&(r, g)| (r.ln(), g.ln())).collect();
    Ok(AnnulusFit { m, slope: fit_slope(&pts)?, annuli, n_vertices: mesh.n_vertices() })
}

#[derive(Clone, Debug)]
pub struct MeyersResult {
    pub rays: Vec<RayFit>,
    pub fem: Vec<AnnulusFit>,
    pub ray_tol: f64,
    pub slope_tol: f64,
    pub files: Vec<PathBuf>,
}

impl MeyersResult {
    pub fn checks(&self) -> Vec<Check> {
        let mut out: Vec<Check> = self
            .rays
            .iter()
            .map(|r| {
                let e = r.expected();
                Check::within(&format!("ray exponent M = {}", r.m), r.exponent, e - self.ray_tol, e + self.ray_tol)
            })
            .collect();
        out.extend(self.fem.iter().map(|f| {
            let e = f.expected();
            Check::within(&format!("annulus slope M = {}", f.m), f.slope, e - self.slope_tol, e + self.slope_tol)
        }));
        out
    }

    pub fn summary(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .rays
            .iter()
            .map(|r| format!("M = {}: ray exponent {:.6} (1/sqrt M = {:.6})", r.m, r.exponent, r.expected()))
            .collect();
        out.extend(self.fem.iter().map(|f| {
            format!(
                "M = {}: annulus slope {:.4} (1/sqrt M - 1 = {:.4}), {} annuli",
                f.m,
                f.slope,
                f.expected(),
                f.annuli.len()
            )
        }));
        out
    }

    fn write(&mut self, dir: &Path) -> Result<()> {
        let label = |m: f64| format!("m{m}");
        let mut header = strings(&["r"]);
        header.extend(self.rays.iter().map(|r| format!("u_{}", label(r.m))));
        let rows: Vec<Vec<String>> = (0..self.rays[0].profile.len())
            .map(|i| {
                let mut row = vec![fmt(self.rays[0].profile[i].0)];
                row.extend(self.rays.iter().map(|r| fmt(r.profile[i].1)));
                row
            })
            .collect();
        let rays_csv = write_table(&dir.join("meyers_rays.csv"), &header, &rows)?;
        let ray_cols: Vec<String> = header[1..].to_vec();
        let spec = PlotSpec {
            y: ray_cols,
            ..PlotSpec::new("r", &[]).log_log().with_slope().titled("|u(x) - u(0)| along a ray")
        };
        let rays_svg = dir.join("meyers_rays.svg");
        emit_plot(&rays_csv, &spec, &rays_svg)?;
        let mut summary_rows: Vec<Vec<String>> = Vec::new();
        for r in &self.rays {
            let fem = self.fem.iter().find(|f| f.m == r.m);
            summary_rows.push(vec![
                fmt(r.m),
                fmt(r.expected()),
                fmt(r.exponent),
                fmt(r.expected() - 1.0),
                fem.map_or(String::new(), |f| fmt(f.slope)),
            ]);
        }
        let summary = write_table(
            &dir.join("meyers_summary.csv"),
            &strings(&["m", "expected_exponent", "ray_exponent", "expected_slope", "annulus_slope"]),
            &summary_rows,
        )?;
        self.files.extend([rays_csv, rays_svg, summary]);
        if let Some(first) = self.fem.first() {
            let mut header = strings(&["r"]);
            header.extend(self.fem.iter().map(|f| format!("grad_{}", label(f.m))));
            let rows: Vec<Vec<String>> = (0..first.annuli.len())
                .map(|i| {
                    let mut row = vec![fmt(first.annuli[i].0)];
                    row.extend(self.fem.iter().map(|f| f.annuli.get(i).map_or(String::new(), |a| fmt(a.1))));
                    row
                })
                .collect();
            let csv = write_table(&dir.join("meyers_annuli.csv"), &header, &rows)?;
            let spec = PlotSpec {
                y: header[1..].to_vec(),
                ..PlotSpec::new("r", &[]).log_log().with_slope().titled("max |grad u_h| on annuli")
            };
            let svg = dir.join("meyers_annuli.svg");
            emit_plot(&csv, &spec, &svg)?;
            self.files.extend([csv, svg]);
        }
        Ok(())
    }
}

pub fn run_meyers(p: &MeyersParams, out: Option<&Path>) -> Result<MeyersResult> {
    let p = p.clone().validated()?;
    let rays = p.ms.iter().map(|&m| ray_fit(m, p.rays)).collect::<Result<Vec<_>>>()?;
    let fem = if p.fem {
        p.ms.par_iter().map(|&m| annulus_fit(m, &p)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let mut r = MeyersResult { rays, fem, ray_tol: p.ray_tol, slope_tol: p.slope_tol, files: Vec::new() };
    if let Some(dir) = out {
        r.write(dir)?;
    }
    Ok(r)
}
