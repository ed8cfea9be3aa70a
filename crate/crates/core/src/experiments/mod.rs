//! Named, reproducible experiments driven by flat config files. Each runner
//! returns a typed result, optionally writes CSV tables and SVG plots, and
//! exposes pass/fail [`Check`]s.

mod config;
mod convergence;
mod degiorgi;
mod kernel;
mod meyers;
mod output;
mod plot;
mod scaling;
mod sweep;

pub use config::{Experiment, ExperimentConfig, Value};
pub use convergence::{run_convergence, ConvergenceParams, ConvergenceResult};
pub use degiorgi::{
    degiorgi_triples, embedding_family, run_degiorgi, sup_cascade, CascadeRow, DegiorgiParams, DegiorgiResult,
    EmbeddingRow, TripleRow,
};
pub use kernel::{cylinder_family, run_kernel, CylinderFamily, FieldFit, KernelCase, KernelParams, KernelResult};
pub use meyers::{annulus_fit, ray_fit, run_meyers, AnnulusFit, MeyersParams, MeyersResult, RayFit};
pub use output::{fmt, write_table, CsvSink, ABORT_MARKER};
pub use plot::{emit_plot, read_columns, render_plot, PlotSpec};
pub use scaling::{run_scaling, ScalingParams, ScalingResult, ScalingTable};
pub use sweep::{run_sweep, SweepParams, SweepResult, SweepRow};

use crate::error::{Error, Result};
use std::fmt as sfmt;
use std::path::{Path, PathBuf};

/// One pass/fail assertion with the measured value and its admissible range.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub passed: bool,
}

impl Check {
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check { name: name.to_string(), value, lo, hi, passed: value >= lo && value <= hi }
    }

    pub fn at_most(name: &str, value: f64, hi: f64) -> Self {
        Check::within(name, value, f64::NEG_INFINITY, hi)
    }

    /// `|value - target| ≤ tol · |target|`.
    pub fn relative(name: &str, value: f64, target: f64, tol: f64) -> Self {
        let d = tol * target.abs();
        Check::within(name, value, target - d, target + d)
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.to_string(), value: ok as u8 as f64, lo: 1.0, hi: 1.0, passed: ok }
    }
}

impl sfmt::Display for Check {
    fn fmt(&self, f: &mut sfmt::Formatter<'_>) -> sfmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        if self.lo == 1.0 && self.hi == 1.0 {
            write!(f, "{tag} {}", self.name)
        } else if self.lo == f64::NEG_INFINITY {
            write!(f, "{tag} {} = {:.6} (<= {})", self.name, self.value, self.hi)
        } else {
            write!(f, "{tag} {} = {:.6} (in [{}, {}])", self.name, self.value, self.lo, self.hi)
        }
    }
}

/// Outcome of one configured run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub experiment: Experiment,
    pub checks: Vec<Check>,
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs the configured experiment, writing tables and plots under `out`
/// (the config's `output.dir` when `None`).
pub fn run(config: &ExperimentConfig, out: Option<&Path>) -> Result<RunReport> {
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir());
    let dir = Some(dir.as_path());
    let (checks, files, lines) = match config.experiment() {
        Experiment::Sweep => {
            let r = run_sweep(&SweepParams::from_config(config)?, dir)?;
            (r.checks(), r.files.clone(), r.summary())
        }
        Experiment::Meyers => {
            let r = run_meyers(&MeyersParams::from_config(config)?, dir)?;
            (r.checks(), r.files.clone(), r.summary())
        }
        Experiment::Scaling => {
            let r = run_scaling(&ScalingParams::from_config(config)?, dir)?;
            (r.checks(), r.files.clone(), r.summary())
        }
        Experiment::Kernel => {
            let r = run_kernel(&KernelParams::from_config(config)?, dir)?;
            (r.checks(), r.files.clone(), r.summary())
        }
        Experiment::Degiorgi => {
            let r = run_degiorgi(&DegiorgiParams::from_config(config)?, dir)?;
            (r.checks(), r.files.clone(), r.summary())
        }
        Experiment::Convergence => {
            let r = run_convergence(&ConvergenceParams::from_config(config)?, dir)?;
            (r.checks(), r.files.clone(), r.summary())
        }
    };
    Ok(RunReport { experiment: config.experiment(), checks, files, lines })
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> Result<f64> {
    if pts.len() < 2 {
        return Err(Error::DegenerateFit(format!("{} points", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("abscissae coincide".into()));
    }
    Ok(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

/// `max / min` of positive values; infinite when the minimum is 0.
pub fn spread(v: impl IntoIterator<Item = f64>) -> f64 {
    let (lo, hi) = v.into_iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(x), b.max(x)));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// `[lo, hi]` pair from a two-element list.
pub(crate) fn range2(cfg: &ExperimentConfig, key: &str) -> Result<(f64, f64)> {
    match cfg.nums(key)? {
        [a, b] if a <= b => Ok((*a, *b)),
        v => Err(Error::Config(format!("'{key}' = {v:?} must be [lo, hi] with lo <= hi"))),
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Config(format!("{name} = {v} must be positive")))
    }
}

pub(crate) fn time_grid(final_time: f64, step: f64) -> Result<usize> {
    positive("time.step", step)?;
    positive("time.final", final_time)?;
    let n = (final_time / step).round();
    if n < 1.0 || (n * step - final_time).abs() > 1e-9 * final_time {
        return Err(Error::Config(format!("time.final = {final_time} is not a multiple of time.step = {step}")));
    }
    Ok(n as usize)
}
