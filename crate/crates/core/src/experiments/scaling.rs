use super::output::{fmt, write_table};
use super::plot::{emit_plot, PlotSpec};
use super::{positive, Check, ExperimentConfig};
use crate::coefficients::{piecewise_contrast_field, IDENTITY, scaled_identity, SourceData};
use crate::error::{Error, Result};
use crate::geometry::{build_layout, build_mesh, Ellipse, GapPair, Inclusion, OuterDomain, Point};
use crate::kernels::{
    ratio_spread, scaling_check, FieldCaloric, KernelCombination, LinearCaloric, ScalingOptions, ScalingRow,
};
use crate::solver::solve_elliptic;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Half side of the square `[-w, w]²` holding the finite element cases.
const HALF_SIDE: f64 = 1.5;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingParams {
    pub rhos: Vec<f64>,
    pub pair_distance: f64,
    pub pair_lag: f64,
    pub t0: f64,
    pub radius: f64,
    /// One stationary finite element case per gap; 0 is touching.
    pub gaps: Vec<f64>,
    pub contrast: f64,
    pub h: f64,
    pub linear_tol: f64,
    pub closed_form_max: f64,
    pub fem_max: f64,
}

impl Default for ScalingParams {
    fn default() -> Self {
        ScalingParams::from_config(&ExperimentConfig::defaults(super::Experiment::Scaling))
            .expect("default scaling config is valid")
    }
}

impl ScalingParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        ScalingParams {
            rhos: cfg.nums("scaling.rhos")?.to_vec(),
            pair_distance: cfg.num("scaling.pair_distance")?,
            pair_lag: cfg.num("scaling.pair_lag")?,
            t0: cfg.num("scaling.t0")?,
            radius: cfg.num("geometry.radius")?,
            gaps: cfg.nums("geometry.gaps")?.to_vec(),
            contrast: cfg.num("field.contrast")?,
            h: cfg.num("mesh.h")?,
            linear_tol: cfg.num("scaling.linear_tol")?,
            closed_form_max: cfg.num("scaling.closed_form_max")?,
            fem_max: cfg.num("scaling.fem_max")?,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.rhos.is_empty() {
            return Err(Error::Config("scaling.rhos is empty".into()));
        }
        for &r in &self.rhos {
            positive("scaling.rhos", r)?;
            if r >= HALF_SIDE {
                return Err(Error::Config(format!("radius {r} leaves the square [-{HALF_SIDE}, {HALF_SIDE}]^2")));
            }
        }
        positive("scaling.pair_distance", self.pair_distance)?;
        positive("scaling.pair_lag", self.pair_lag)?;
        let top = self.rhos.iter().copied().fold(0.0, f64::max);
        if self.pair_lag <= top * top {
            return Err(Error::Config("scaling.pair_lag must exceed the largest rho squared".into()));
        }
        positive("geometry.radius", self.radius)?;
        positive("field.contrast", self.contrast)?;
        positive("mesh.h", self.h)?;
        positive("scaling.linear_tol", self.linear_tol)?;
        for &g in &self.gaps {
            layout(self.radius, g)?;
        }
        Ok(self)
    }
}

fn layout(radius: f64, gap: f64) -> Result<crate::geometry::InclusionLayout> {
    if !(gap >= 0.0) {
        return Err(Error::Config(format!("gap {gap} must be nonnegative")));
    }
    let c = radius + 0.5 * gap;
    build_layout(
        OuterDomain::Square { min: [-HALF_SIDE, -HALF_SIDE], side: 2.0 * HALF_SIDE },
        vec![
            Inclusion::new(Ellipse::circle([-c, 0.0], radius), 1),
            Inclusion::new(Ellipse::circle([c, 0.0], radius), 2),
        ],
        Some(GapPair { first: 0, second: 1, delta: gap }),
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingTable {
    pub name: String,
    pub rows: Vec<ScalingRow>,
}

impl ScalingTable {
    pub fn spread(&self) -> f64 {
        ratio_spread(&self.rows)
    }
}

#[derive(Clone, Debug)]
pub struct ScalingResult {
    /// `u = x₁`: `R(ρ) = 2/√π` for every `ρ`.
    pub linear: ScalingTable,
    /// Heat kernels released symmetrically about the origin, odd in `x₁`.
    pub pair: ScalingTable,
    pub fem: Vec<ScalingTable>,
    pub linear_tol: f64,
    pub closed_form_max: f64,
    pub fem_max: f64,
    pub files: Vec<PathBuf>,
}

impl ScalingResult {
    /// Largest relative deviation of the linear case from `2/√π`.
    pub fn linear_deviation(&self) -> f64 {
        let exact = 2.0 / PI.sqrt();
        self.linear.rows.iter().map(|r| (r.ratio / exact - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut out = vec![
            Check::at_most("linear R(rho) deviation", self.linear_deviation(), self.linear_tol),
            Check::at_most("heat kernel pair R(rho) spread", self.pair.spread(), self.closed_form_max),
        ];
        out.extend(
            self.fem.iter().map(|t| Check::at_most(&format!("{} R(rho) spread", t.name), t.spread(), self.fem_max)),
        );
        out
    }

    pub fn summary(&self) -> Vec<String> {
        let mut tables = vec![&self.linear, &self.pair];
        tables.extend(&self.fem);
        tables
            .iter()
            .map(|t| {
                let r: Vec<String> = t.rows.iter().map(|r| format!("{:.5}", r.ratio)).collect();
                format!("{}: R = [{}], spread {:.4}", t.name, r.join(", "), t.spread())
            })
            .collect()
    }

    fn write(&mut self, dir: &Path) -> Result<()> {
        let mut tables = vec![self.linear.clone(), self.pair.clone()];
        tables.extend(self.fem.iter().cloned());
        let mut header = vec!["rho".to_string()];
        for t in &tables {
            header.extend(["grad_sup", "l2", "ratio"].iter().map(|c| format!("{c}_{}", t.name)));
        }
        let rows: Vec<Vec<String>> = (0..tables[0].rows.len())
            .map(|i| {
                let mut row = vec![fmt(tables[0].rows[i].rho)];
                for t in &tables {
                    let r = &t.rows[i];
                    row.extend([fmt(r.grad_sup), fmt(r.l2), fmt(r.ratio)]);
                }
                row
            })
            .collect();
        let csv = write_table(&dir.join("scaling.csv"), &header, &rows)?;
        let ys: Vec<String> = tables.iter().map(|t| format!("ratio_{}", t.name)).collect();
        let spec = PlotSpec { y: ys, ..PlotSpec::new("rho", &[]).log_x().titled("R(rho)") };
        let svg = dir.join("scaling.svg");
        emit_plot(&csv, &spec, &svg)?;
        self.files.extend([csv, svg]);
        Ok(())
    }
}

fn fem_table(p: &ScalingParams, gap: f64) -> Result<ScalingTable> {
    let l = layout(p.radius, gap)?;
    let mesh = Arc::new(build_mesh(&l, p.h)?);
    let a = scaled_identity(p.contrast);
    let field = piecewise_contrast_field(&l, &[a, a, IDENTITY])?;
    let g = |x: Point| x[0];
    let u = solve_elliptic(&mesh, &field, &SourceData::zero(5.0)?, Some(&g))?;
    let rows = scaling_check(&FieldCaloric { field: &u }, [0.0, 0.0], 0.0, &p.rhos, ScalingOptions::default())?;
    let name = if gap == 0.0 { "touching".to_string() } else { format!("gap{gap}") };
    Ok(ScalingTable { name, rows })
}

pub fn run_scaling(p: &ScalingParams, out: Option<&Path>) -> Result<ScalingResult> {
    let p = p.clone().validated()?;
    let opts = ScalingOptions::default();
    let linear = ScalingTable {
        name: "linear".into(),
        rows: scaling_check(&LinearCaloric { direction: [1.0, 0.0] }, [0.0, 0.0], 0.0, &p.rhos, opts)?,
    };
    let combo = KernelCombination::antisymmetric_pair(p.pair_distance, p.t0, p.pair_lag, 1.0);
    let pair = ScalingTable { name: "pair".into(), rows: scaling_check(&combo, [0.0, 0.0], p.t0, &p.rhos, opts)? };
    let fem = p.gaps.par_iter().map(|&g| fem_table(&p, g)).collect::<Result<Vec<_>>>()?;
    let mut r = ScalingResult {
        linear,
        pair,
        fem,
        linear_tol: p.linear_tol,
        closed_form_max: p.closed_form_max,
        fem_max: p.fem_max,
        files: Vec::new(),
    };
    if let Some(dir) = out {
        r.write(dir)?;
    }
    Ok(r)
}
