use super::output::{fmt, strings, write_table, CsvSink};
use super::plot::{emit_plot, PlotSpec};
use super::{positive, spread, time_grid, Check, ExperimentConfig};
use crate::coefficients::{piecewise_contrast_field, scaled_identity, SourceData};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, disk_pair, Point, ShrunkRegion};
use crate::norms::{norm_report, InequalityContext, NormReport};
use crate::solver::{solve_parabolic, ParabolicProblem};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Two equal disks on the midline of the unit square, `u = g = x₁ - 1/2` on
/// the boundary and initially, no sources.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepParams {
    pub radius: f64,
    /// Sorted descending on construction.
    pub deltas: Vec<f64>,
    pub contrast: [f64; 2],
    pub background: f64,
    pub h: f64,
    pub time_step: f64,
    pub final_time: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub delta_tail: f64,
    pub plateau_max: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams::from_config(&ExperimentConfig::defaults(super::Experiment::Sweep))
            .expect("default sweep config is valid")
    }
}

impl SweepParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let contrast = match cfg.nums("field.contrast")? {
            [a, b] => [*a, *b],
            v => {
                return Err(Error::Config(format!(
                    "the sweep needs a pair of inclusions, field.contrast has {} entries",
                    v.len()
                )))
            }
        };
        let p = SweepParams {
            radius: cfg.num("geometry.radius")?,
            deltas: cfg.nums("geometry.deltas")?.to_vec(),
            contrast,
            background: cfg.num("field.background")?,
            h: cfg.num("mesh.h")?,
            time_step: cfg.num("time.step")?,
            final_time: cfg.num("time.final")?,
            epsilon: cfg.num("norms.epsilon")?,
            alpha: cfg.num("norms.alpha")?,
            delta_tail: cfg.num("sweep.delta_tail")?,
            plateau_max: cfg.num("sweep.plateau_max")?,
        };
        p.validated()
    }

    /// Checks every parameter and builds every layout before anything is solved.
    pub fn validated(mut self) -> Result<Self> {
        positive("geometry.radius", self.radius)?;
        positive("mesh.h", self.h)?;
        for (i, c) in self.contrast.iter().enumerate() {
            positive(&format!("field.contrast[{i}]"), *c)?;
        }
        positive("field.background", self.background)?;
        time_grid(self.final_time, self.time_step)?;
        if !(self.epsilon >= 0.0 && self.epsilon < 0.5) {
            return Err(Error::Config(format!("norms.epsilon = {} must lie in [0, 0.5)", self.epsilon)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("norms.alpha = {} must lie in (0, 1)", self.alpha)));
        }
        positive("sweep.plateau_max", self.plateau_max)?;
        if self.deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(Error::Config("gaps must be finite and nonnegative".into()));
        }
        self.deltas.sort_by(|a, b| b.total_cmp(a));
        self.deltas.dedup();
        if self.deltas.last() != Some(&0.0) {
            return Err(Error::Config("the gap list must end at 0 (touching)".into()));
        }
        if !(self.delta_tail >= 0.0) {
            return Err(Error::Config(format!("sweep.delta_tail = {} must be nonnegative", self.delta_tail)));
        }
        for &d in &self.deltas {
            disk_pair(self.radius, d)?;
        }
        Ok(self)
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub delta: f64,
    pub h: f64,
    pub tau: f64,
    pub report: NormReport,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    /// In the order of [`SweepParams::deltas`]: descending, touching last.
    pub rows: Vec<SweepRow>,
    pub delta_tail: f64,
    pub plateau_max: f64,
    pub files: Vec<PathBuf>,
}

impl SweepResult {
    /// Per region `max/min` of `sup|∇u|` over rows with `δ ≤ δ_tail`, then
    /// the largest over regions. Always recomputed from the rows.
    pub fn plateau(&self) -> f64 {
        let tail: Vec<&SweepRow> = self.rows.iter().filter(|r| r.delta <= self.delta_tail + 1e-15).collect();
        let n = tail.first().map_or(0, |r| r.report.piecewise_grad_sup.len());
        (0..n).map(|m| spread(tail.iter().map(|r| r.report.piecewise_grad_sup[m]))).fold(1.0, f64::max)
    }

    /// Largest per-region `sup|∇u|` over the whole sweep.
    pub fn max_grad(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.report.piecewise_grad_sup.iter().copied()).fold(0.0, f64::max)
    }

    pub fn touching(&self) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.delta == 0.0)
    }

    pub fn checks(&self) -> Vec<Check> {
        let finite = self
            .touching()
            .is_some_and(|r| r.report.piecewise_grad_sup.iter().all(|g| g.is_finite()));
        vec![
            Check::at_most("sweep plateau statistic", self.plateau(), self.plateau_max),
            Check::holds("sweep touching case finite", finite),
        ]
    }

    pub fn summary(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .rows
            .iter()
            .map(|r| {
                let g: Vec<String> = r.report.piecewise_grad_sup.iter().map(|v| format!("{v:.4}")).collect();
                format!("delta {:<8} sup|grad u| per region [{}]", r.delta, g.join(", "))
            })
            .collect();
        out.push(format!("plateau over delta <= {}: {:.4}", self.delta_tail, self.plateau()));
        out
    }
}

fn instance(p: &SweepParams, delta: f64) -> Result<SweepRow> {
    let layout = disk_pair(p.radius, delta)?;
    let mesh = Arc::new(build_mesh(&layout, p.h)?);
    let field = piecewise_contrast_field(
        &layout,
        &[scaled_identity(p.contrast[0]), scaled_identity(p.contrast[1]), scaled_identity(p.background)],
    )?;
    let g = |x: Point| x[0] - 0.5;
    let sources = SourceData::zero(5.0)?;
    let problem = ParabolicProblem::new(mesh.clone(), field, sources.clone(), p.final_time, p.time_step)
        .with_boundary(move |x, _| g(x))
        .with_initial(g);
    let u = solve_parabolic(&problem)?;
    let ctx = InequalityContext::new(ShrunkRegion::new(&layout, p.epsilon)?, p.alpha);
    let report = norm_report(&u, &sources, &ctx)?;
    Ok(SweepRow { delta, h: mesh.h(), tau: p.time_step, report })
}

/// Solves every gap in parallel and assembles rows in gap order. The first
/// failing instance ends the CSV with a marker row and is returned as the error.
pub fn run_sweep(p: &SweepParams, out: Option<&Path>) -> Result<SweepResult> {
    let p = p.clone().validated()?;
    let results: Vec<Result<SweepRow>> = p.deltas.par_iter().map(|&d| instance(&p, d)).collect();
    let mut sink = match out {
        Some(dir) => Some(CsvSink::create(&dir.join("sweep.csv"), &NormReport::csv_header(3))?),
        None => None,
    };
    let mut rows = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(row) => {
                if let Some(s) = sink.as_mut() {
                    s.row(&row.report.csv_row(&format!("delta_{i}"), row.delta, row.h, row.tau))?;
                }
                rows.push(row);
            }
            Err(e) => {
                if let Some(s) = sink.take() {
                    s.abort(&format!("gap {}: {e}", p.deltas[i]))?;
                }
                return Err(e);
            }
        }
    }
    let mut result = SweepResult { rows, delta_tail: p.delta_tail, plateau_max: p.plateau_max, files: Vec::new() };
    if let (Some(s), Some(dir)) = (sink, out) {
        let csv = s.finish()?;
        let svg = dir.join("sweep.svg");
        let spec = PlotSpec::new("delta", &["grad_sup_1", "grad_sup_2", "grad_sup_3"]).titled("sup |grad u| on D_eps");
        emit_plot(&csv, &spec, &svg)?;
        let summary = write_table(
            &dir.join("sweep_summary.csv"),
            &strings(&["delta_tail", "plateau", "max_grad"]),
            &[vec![fmt(result.delta_tail), fmt(result.plateau()), fmt(result.max_grad())]],
        )?;
        result.files = vec![csv, svg, summary];
    }
    Ok(result)
}
