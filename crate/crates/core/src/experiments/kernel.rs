use super::output::{fmt, strings, write_table};
use super::plot::{emit_plot, PlotSpec};
use super::{positive, range2, spread, Check, ExperimentConfig};
use crate::coefficients::{piecewise_contrast_field, scaled_identity, CoefficientField, IDENTITY};
use crate::error::{Error, Result};
use crate::geometry::{build_layout, Ellipse, Inclusion, InclusionLayout, OuterDomain};
use crate::kernels::{
    approximate_kernel, cylinder_l2, exact_heat_kernel_estimate, gaussian_fit, gradient_gaussian_fit, CylinderL2,
    GaussianFit, GradientFit, GridSpec, KernelEstimate, KernelField, KernelOptions, LineField, ProofCase,
};
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum KernelCase {
    /// `a = 1` on the line.
    Line,
    /// `a = I` in the plane.
    Constant,
    /// Two disks with `a = κI` in a background `I`, `κI` outside the square.
    Contrast,
    /// `L²` bounds on cylinders around the exact 1D Gaussian.
    Cylinder,
}

impl KernelCase {
    pub fn name(self) -> &'static str {
        match self {
            KernelCase::Line => "line",
            KernelCase::Constant => "constant",
            KernelCase::Contrast => "contrast",
            KernelCase::Cylinder => "cylinder",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        [KernelCase::Line, KernelCase::Constant, KernelCase::Contrast, KernelCase::Cylinder]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown kernel field '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelParams {
    pub cases: Vec<KernelCase>,
    pub line: KernelOptions,
    pub plane: KernelOptions,
    pub elapsed: Vec<f64>,
    pub etas: Vec<f64>,
    pub directions: usize,
    pub half_width: f64,
    pub radius: f64,
    pub offset: f64,
    pub contrast: f64,
    pub exponent_tol: f64,
    pub rate_tol: f64,
    pub gradient_tol: f64,
    pub contrast_range: (f64, f64),
    pub cylinder_max: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams::from_config(&ExperimentConfig::defaults(super::Experiment::Kernel))
            .expect("default kernel config is valid")
    }
}

// `[start, stop, step]` inclusive.
fn stepped(cfg: &ExperimentConfig, key: &str) -> Result<Vec<f64>> {
    match cfg.nums(key)? {
        [a, b, s] if *s > 0.0 && b >= a && (b - a) / s < 1e5 => {
            let n = ((b - a) / s + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + s * k as f64).collect())
        }
        v => Err(Error::Config(format!("'{key}' = {v:?} must be [start, stop, step]"))),
    }
}

impl KernelParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let mut cases = BTreeSet::new();
        for s in cfg.texts("kernel.fields")? {
            cases.insert(KernelCase::parse(s)?);
        }
        KernelParams {
            cases: cases.into_iter().collect(),
            line: KernelOptions { h: cfg.num("kernel.line_h")?, dt: cfg.num("kernel.line_step")?, sigma: None },
            plane: KernelOptions { h: cfg.num("mesh.h")?, dt: cfg.num("time.step")?, sigma: None },
            elapsed: stepped(cfg, "kernel.elapsed")?,
            etas: stepped(cfg, "kernel.etas")?,
            directions: cfg.count("kernel.directions")?,
            half_width: cfg.num("geometry.half_width")?,
            radius: cfg.num("geometry.radius")?,
            offset: cfg.num("geometry.offset")?,
            contrast: cfg.num("field.contrast")?,
            exponent_tol: cfg.num("kernel.exponent_tol")?,
            rate_tol: cfg.num("kernel.rate_tol")?,
            gradient_tol: cfg.num("kernel.gradient_tol")?,
            contrast_range: range2(cfg, "kernel.contrast_range")?,
            cylinder_max: cfg.num("kernel.cylinder_max")?,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.cases.is_empty() {
            return Err(Error::Config("kernel.fields is empty".into()));
        }
        for (k, v) in [
            ("kernel.line_h", self.line.h),
            ("kernel.line_step", self.line.dt),
            ("mesh.h", self.plane.h),
            ("time.step", self.plane.dt),
            ("geometry.half_width", self.half_width),
            ("geometry.radius", self.radius),
            ("field.contrast", self.contrast),
        ] {
            positive(k, v)?;
        }
        if self.elapsed.iter().all(|&s| s <= 0.0) {
            return Err(Error::Config("kernel.elapsed has no positive time".into()));
        }
        if self.plane_cases() && self.layout()?.inclusions.is_empty() {
            return Err(Error::Config("contrast layout has no inclusions".into()));
        }
        Ok(self)
    }

    fn plane_cases(&self) -> bool {
        self.cases.contains(&KernelCase::Contrast)
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::Similarity { elapsed: self.elapsed.clone(), etas: self.etas.clone(), directions: self.directions }
    }

    fn square(&self) -> OuterDomain {
        OuterDomain::Square { min: [-self.half_width, -self.half_width], side: 2.0 * self.half_width }
    }

    fn layout(&self) -> Result<InclusionLayout> {
        build_layout(
            self.square(),
            vec![
                Inclusion::new(Ellipse::circle([-self.offset, 0.0], self.radius), 1),
                Inclusion::new(Ellipse::circle([self.offset, 0.0], self.radius), 2),
            ],
            None,
        )
    }

    fn field(&self, case: KernelCase) -> Result<KernelField> {
        Ok(match case {
            KernelCase::Line => KernelField::Line(LineField::constant(1.0)?),
            KernelCase::Constant => {
                let l = build_layout(self.square(), vec![], None)?;
                KernelField::Plane(CoefficientField::constant(&l, IDENTITY)?.extend_outside(1.0)?)
            }
            KernelCase::Contrast | KernelCase::Cylinder => {
                let a = scaled_identity(self.contrast);
                let f = piecewise_contrast_field(&self.layout()?, &[a, a, IDENTITY])?;
                KernelField::Plane(f.extend_outside(self.contrast)?)
            }
        })
    }
}

/// Value and gradient fits of one approximate kernel.
#[derive(Clone, Debug)]
pub struct FieldFit {
    pub case: KernelCase,
    pub value: GaussianFit,
    pub gradient: GradientFit,
    pub estimate: KernelEstimate,
}

/// `(q, s)` with `q = |x₀-ξ|²/(t₀-τ)`, four per case of the case split.
pub const CYLINDER_CONFIGURATIONS: [(f64, f64); 12] = [
    (0.0, 1.0),
    (2.0, 2.0),
    (6.0, 0.5),
    (12.0, 1.5),
    (14.0, 1.0),
    (14.3, 2.0),
    (14.6, 0.5),
    (14.9, 1.5),
    (15.5, 1.0),
    (16.5, 0.5),
    (18.0, 2.0),
    (20.0, 1.5),
];

#[derive(Clone, Debug)]
pub struct CylinderFamily {
    /// `(q, s, bound)` per configuration.
    pub rows: Vec<(f64, f64, CylinderL2)>,
}

impl CylinderFamily {
    pub fn spread(&self) -> f64 {
        spread(self.rows.iter().map(|r| r.2.ratio()))
    }

    pub fn cases(&self) -> BTreeSet<ProofCase> {
        self.rows.iter().filter_map(|r| r.2.case).collect()
    }
}

/// The `L²` cylinder bound over [`CYLINDER_CONFIGURATIONS`] for the exact
/// kernel of `∂_t - ∂²_x` with `ĉ = 1/4`.
pub fn cylinder_family() -> Result<CylinderFamily> {
    let grid = GridSpec::Lattice { half_width: 10.0, points: 1001, elapsed: (0..=300).map(|k| 0.01 * k as f64).collect() };
    let est = exact_heat_kernel_estimate(1, 1.0, [0.0, 0.0], 0.0, &grid)?;
    let rows = CYLINDER_CONFIGURATIONS
        .par_iter()
        .map(|&(q, s)| Ok((q, s, cylinder_l2(&est, 0.25, [(q * s).sqrt(), 0.0], s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CylinderFamily { rows })
}

#[derive(Clone, Debug)]
pub struct KernelResult {
    pub fits: Vec<FieldFit>,
    pub cylinder: Option<CylinderFamily>,
    pub params: KernelParams,
    pub files: Vec<PathBuf>,
}

impl KernelResult {
    pub fn fit(&self, case: KernelCase) -> Option<&FieldFit> {
        self.fits.iter().find(|f| f.case == case)
    }

    pub fn checks(&self) -> Vec<Check> {
        let p = &self.params;
        let mut out = Vec::new();
        for f in &self.fits {
            let name = f.case.name();
            match f.case {
                KernelCase::Line | KernelCase::Constant => {
                    let dim = f.estimate.dim as f64;
                    out.push(Check::relative(&format!("{name} value exponent"), f.value.exponent, 0.5 * dim, p.exponent_tol));
                    out.push(Check::relative(&format!("{name} value rate c_hat"), f.value.c_hat, 0.25, p.rate_tol));
                    if f.case == KernelCase::Constant {
                        out.push(Check::relative(
                            &format!("{name} gradient exponent"),
                            f.gradient.fit.exponent,
                            1.5,
                            p.gradient_tol,
                        ));
                    }
                }
                KernelCase::Contrast => {
                    let (lo, hi) = p.contrast_range;
                    out.push(Check::within(&format!("{name} gradient exponent"), f.gradient.on_axis_exponent, lo, hi));
                }
                KernelCase::Cylinder => {}
            }
        }
        if let Some(c) = &self.cylinder {
            out.push(Check::at_most("cylinder lhs/rhs spread", c.spread(), p.cylinder_max));
            out.push(Check::holds("cylinder family covers all three cases", c.cases().len() == 3));
        }
        out
    }

    pub fn summary(&self) -> Vec<String> {
        let mut out = Vec::new();
        for f in &self.fits {
            out.push(format!("{} value {}", f.case.name(), f.value.summary()));
            out.push(format!(
                "{} gradient {} on-axis exponent {:.4}",
                f.case.name(),
                f.gradient.fit.summary(),
                f.gradient.on_axis_exponent
            ));
            out.extend(f.estimate.warnings.iter().map(|w| format!("{} warning: {w}", f.case.name())));
        }
        if let Some(c) = &self.cylinder {
            out.push(format!("cylinder spread {:.4} over {} configurations", c.spread(), c.rows.len()));
        }
        out
    }

    fn write(&mut self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut rows = Vec::new();
        for f in &self.fits {
            let name = f.case.name();
            let samples = dir.join(format!("kernel_samples_{name}.csv"));
            f.estimate.write_samples_csv(BufWriter::new(File::create(&samples)?))?;
            let txt = dir.join(format!("kernel_fit_{name}.txt"));
            std::fs::write(
                &txt,
                format!("value = {}\ngradient = {}\n", f.value.summary(), f.gradient.fit.summary()),
            )?;
            self.files.extend([samples, txt]);
            let (v, g) = (&f.value, &f.gradient.fit);
            rows.push(vec![
                name.to_string(),
                fmt(v.c_const),
                fmt(v.c_hat),
                fmt(v.exponent),
                fmt(v.residual),
                fmt(v.window),
                fmt(g.c_const),
                fmt(g.c_hat),
                fmt(g.exponent),
                fmt(g.residual),
                fmt(f.gradient.on_axis_exponent),
            ]);
        }
        if !rows.is_empty() {
            let header = strings(&[
                "field",
                "C_hat",
                "c_hat",
                "exponent",
                "residual",
                "window",
                "grad_C_hat",
                "grad_c_hat",
                "grad_exponent",
                "grad_residual",
                "grad_on_axis_exponent",
            ]);
            self.files.push(write_table(&dir.join("kernel_fits.csv"), &header, &rows)?);
        }
        if let Some(c) = &self.cylinder {
            let rows: Vec<Vec<String>> = c
                .rows
                .iter()
                .map(|(q, s, b)| {
                    let case = b.case.map_or("none".to_string(), |k| format!("{k:?}").to_lowercase());
                    vec![fmt(*q), fmt(*s), fmt(b.rho), fmt(b.lhs), fmt(b.rhs_shape), fmt(b.ratio()), case]
                })
                .collect();
            let csv = write_table(
                &dir.join("cylinder.csv"),
                &strings(&["q", "s", "rho", "lhs", "rhs_shape", "ratio", "case"]),
                &rows,
            )?;
            let svg = dir.join("cylinder.svg");
            emit_plot(&csv, &PlotSpec::new("q", &["ratio"]).log_y().titled("lhs / rhs shape"), &svg)?;
            self.files.extend([csv, svg]);
        }
        Ok(())
    }
}

pub fn run_kernel(p: &KernelParams, out: Option<&Path>) -> Result<KernelResult> {
    let p = p.clone().validated()?;
    let grid = p.grid();
    let fits = p
        .cases
        .par_iter()
        .filter(|c| **c != KernelCase::Cylinder)
        .map(|&case| {
            let field = p.field(case)?;
            let opts = if case == KernelCase::Line { &p.line } else { &p.plane };
            let estimate = approximate_kernel(&field, [0.0, 0.0], 0.0, &grid, opts)?;
            Ok(FieldFit { case, value: gaussian_fit(&estimate)?, gradient: gradient_gaussian_fit(&estimate)?, estimate })
        })
        .collect::<Result<Vec<_>>>()?;
    let cylinder = if p.cases.contains(&KernelCase::Cylinder) { Some(cylinder_family()?) } else { None };
    let mut r = KernelResult { fits, cylinder, params: p, files: Vec::new() };
    if let Some(dir) = out {
        r.write(dir)?;
    }
    Ok(r)
}
