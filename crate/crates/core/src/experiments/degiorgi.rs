use super::output::{fmt, strings, write_table};
use super::plot::{emit_plot, PlotSpec};
use super::{positive, range2, spread, time_grid, Check, ExperimentConfig};
use crate::coefficients::{piecewise_contrast_field, scaled_identity, CoefficientField, SourceData, IDENTITY};
use crate::error::{Error, Result};
use crate::geometry::{build_layout, build_mesh, disk_pair, InclusionLayout, Mesh, OuterDomain, Point};
use crate::iteration::{degiorgi_cascade, degiorgi_sequence, gn_check, GNParams, InitialValue, IterationParams};
use crate::norms::ParabolicCylinder;
use crate::solver::{solve_parabolic, ParabolicProblem, SpaceTimeField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Relative slack on `y_m ≤ θ₀ r^{-m}`.
const SEQUENCE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DegiorgiParams {
    pub seed: u64,
    pub triples: usize,
    pub m_max: usize,
    pub c_range: (f64, f64),
    pub b_range: (f64, f64),
    pub eps_range: (f64, f64),
    pub p: f64,
    pub rho: f64,
    pub slack: f64,
    pub h: f64,
    pub time_step: f64,
    pub final_time: f64,
    pub modes: usize,
    pub embed_h: f64,
    pub embed_spread_max: f64,
    pub embed_stability: f64,
}

impl Default for DegiorgiParams {
    fn default() -> Self {
        DegiorgiParams::from_config(&ExperimentConfig::defaults(super::Experiment::Degiorgi))
            .expect("default degiorgi config is valid")
    }
}

impl DegiorgiParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        DegiorgiParams {
            seed: cfg.seed()?,
            triples: cfg.count("degiorgi.triples")?,
            m_max: cfg.count("degiorgi.m_max")?,
            c_range: range2(cfg, "degiorgi.c_range")?,
            b_range: range2(cfg, "degiorgi.b_range")?,
            eps_range: range2(cfg, "degiorgi.eps_range")?,
            p: cfg.num("cascade.p")?,
            rho: cfg.num("cascade.rho")?,
            slack: cfg.num("cascade.slack")?,
            h: cfg.num("mesh.h")?,
            time_step: cfg.num("time.step")?,
            final_time: cfg.num("time.final")?,
            modes: cfg.count("embedding.modes")?,
            embed_h: cfg.num("embedding.h")?,
            embed_spread_max: cfg.num("embedding.spread_max")?,
            embed_stability: cfg.num("embedding.stability")?,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.c_range.0 > 0.0 && self.b_range.0 > 1.0 && self.eps_range.0 > 0.0) {
            return Err(Error::Config("need C > 0, b > 1 and eps > 0 over the sampled ranges".into()));
        }
        if !(self.p > 4.0) {
            return Err(Error::Config(format!("cascade.p = {} must exceed n + 2 = 4", self.p)));
        }
        positive("cascade.rho", self.rho)?;
        positive("cascade.slack", self.slack)?;
        positive("mesh.h", self.h)?;
        positive("embedding.h", self.embed_h)?;
        time_grid(self.final_time, self.time_step)?;
        if 2.0 * self.rho > 0.5 || 4.0 * self.rho * self.rho > self.final_time + 1e-12 {
            return Err(Error::Config("Q_2rho must fit inside the unit square and the time range".into()));
        }
        Ok(self)
    }

    fn cylinder(&self) -> Result<ParabolicCylinder> {
        ParabolicCylinder::new([0.5, 0.5], self.final_time, self.rho)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TripleRow {
    pub c: f64,
    pub b: f64,
    pub eps: f64,
    /// `max_m y_m / (θ₀ r^{-m})`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeRow {
    pub name: String,
    pub k: f64,
    pub max_u: f64,
    pub bound_ratio: f64,
    pub verified: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbeddingRow {
    pub j: usize,
    pub k: usize,
    pub coarse: f64,
    pub fine: f64,
}

#[derive(Clone, Debug)]
pub struct DegiorgiResult {
    pub triples: Vec<TripleRow>,
    /// `y₁` of the equality case `(C̃, b, ε) = (1, 4, 1)`.
    pub equality_y1: f64,
    pub cascade: Vec<CascadeRow>,
    pub embedding: Vec<EmbeddingRow>,
    pub params: DegiorgiParams,
    pub files: Vec<PathBuf>,
}

impl DegiorgiResult {
    pub fn worst_ratio(&self) -> f64 {
        self.triples.iter().map(|t| t.max_ratio).fold(0.0, f64::max)
    }

    /// `max/min` of the fine-mesh constants over the family.
    pub fn embedding_spread(&self) -> f64 {
        spread(self.embedding.iter().map(|e| e.fine))
    }

    /// Largest relative change of a constant under mesh halving.
    pub fn embedding_drift(&self) -> f64 {
        self.embedding.iter().map(|e| (e.coarse - e.fine).abs() / e.fine).fold(0.0, f64::max)
    }

    pub fn worst_cascade_ratio(&self) -> f64 {
        self.cascade.iter().map(|c| c.bound_ratio).fold(0.0, f64::max)
    }

    pub fn checks(&self) -> Vec<Check> {
        let p = &self.params;
        vec![
            Check::at_most("sequence y_m / (theta0 r^-m)", self.worst_ratio(), 1.0 + SEQUENCE_SLACK),
            Check::holds("equality case y_1 = 1/16", self.equality_y1 == 1.0 / 16.0),
            Check::at_most("cascade max u / 2k", self.worst_cascade_ratio(), p.slack),
            Check::at_most("embedding constant spread", self.embedding_spread(), p.embed_spread_max),
            Check::at_most("embedding constant drift under halving", self.embedding_drift(), p.embed_stability),
        ]
    }

    pub fn summary(&self) -> Vec<String> {
        let mut out = vec![
            format!("{} triples, worst ratio {:.12}", self.triples.len(), self.worst_ratio()),
            format!("equality case y_1 = {}", self.equality_y1),
        ];
        out.extend(self.cascade.iter().map(|c| {
            format!("cascade {}: k = {:.4e}, max u = {:.4e}, max u / 2k = {:.3e}", c.name, c.k, c.max_u, c.bound_ratio)
        }));
        out.push(format!(
            "embedding: spread {:.4}, drift {:.4}",
            self.embedding_spread(),
            self.embedding_drift()
        ));
        out
    }

    fn write(&mut self, dir: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> =
            self.triples.iter().map(|t| vec![fmt(t.c), fmt(t.b), fmt(t.eps), fmt(t.max_ratio)]).collect();
        let seq = write_table(&dir.join("degiorgi_sequences.csv"), &strings(&["c_tilde", "b", "eps", "max_ratio"]), &rows)?;
        let rows: Vec<Vec<String>> = self
            .cascade
            .iter()
            .map(|c| vec![c.name.clone(), fmt(c.k), fmt(c.max_u), fmt(c.bound_ratio), c.verified.to_string()])
            .collect();
        let cas = write_table(
            &dir.join("degiorgi_cascade.csv"),
            &strings(&["instance", "k", "max_u", "bound_ratio", "verified"]),
            &rows,
        )?;
        let rows: Vec<Vec<String>> = self
            .embedding
            .iter()
            .enumerate()
            .map(|(i, e)| vec![i.to_string(), e.j.to_string(), e.k.to_string(), fmt(e.coarse), fmt(e.fine)])
            .collect();
        let emb = write_table(
            &dir.join("degiorgi_embedding.csv"),
            &strings(&["index", "j", "k", "c1_coarse", "c1_fine"]),
            &rows,
        )?;
        let svg = dir.join("degiorgi_embedding.svg");
        emit_plot(&emb, &PlotSpec::new("index", &["c1_coarse", "c1_fine"]).titled("embedding constant"), &svg)?;
        self.files.extend([seq, cas, emb, svg]);
        Ok(())
    }
}

fn unit_square(h: f64) -> Result<(InclusionLayout, Arc<Mesh>)> {
    let l = build_layout(OuterDomain::unit_square(), vec![], None)?;
    let m = Arc::new(build_mesh(&l, h)?);
    Ok((l, m))
}

fn contrast(l: &InclusionLayout) -> Result<CoefficientField> {
    piecewise_contrast_field(l, &[scaled_identity(10.0), scaled_identity(10.0), IDENTITY])
}

// Five solved instances: constant field without and with a source, a
// separated pair, and a touching pair without and with a source.
const CASCADE_INSTANCES: [(&str, f64); 5] =
    [("constant", 0.0), ("constant_source", 0.0), ("contrast", 0.1), ("touching", 0.0), ("touching_source", 0.0)];

fn cascade_instance(p: &DegiorgiParams, name: &str, delta: f64) -> Result<CascadeRow> {
    let zero = SourceData::zero(p.p)?;
    let g = |x: Point| x[0] - 0.5;
    let (problem, sources) = match name {
        "constant" | "constant_source" => {
            let (l, m) = unit_square(p.h)?;
            let field = CoefficientField::constant(&l, IDENTITY)?;
            if name == "constant" {
                let pr = ParabolicProblem::new(m, field, zero.clone(), p.final_time, p.time_step)
                    .with_initial(|x| (PI * x[0]).sin() * (PI * x[1]).sin());
                (pr, zero)
            } else {
                let src = zero.with_f(|_, _| 1.0);
                (ParabolicProblem::new(m, field, src.clone(), p.final_time, p.time_step), src)
            }
        }
        _ => {
            let l = disk_pair(0.15, delta)?;
            let m = Arc::new(build_mesh(&l, p.h)?);
            let src = if name == "touching_source" { zero.with_f(|x, _| x[1]) } else { zero };
            let pr = ParabolicProblem::new(m, contrast(&l)?, src.clone(), p.final_time, p.time_step)
                .with_boundary(move |x, _| g(x))
                .with_initial(g);
            (pr, src)
        }
    };
    let u = solve_parabolic(&problem)?;
    let r = degiorgi_cascade(&u, &p.cylinder()?, &sources)?;
    Ok(CascadeRow { name: name.to_string(), k: r.k, max_u: r.max_u, bound_ratio: r.bound_ratio(), verified: r.verified })
}

fn mode(mesh: &Arc<Mesh>, j: usize, k: usize) -> Result<SpaceTimeField> {
    let times: Vec<f64> = (0..=40).map(|i| 0.2 * i as f64 / 40.0).collect();
    SpaceTimeField::from_fn(
        mesh.clone(),
        times,
        |x, t| (-t).exp() * (j as f64 * PI * x[0]).sin() * (k as f64 * PI * x[1]).sin(),
        "mode",
    )
}

/// Random triples plus the equality case `(1, 4, 1)`.
pub fn degiorgi_triples(p: &DegiorgiParams) -> Result<(Vec<TripleRow>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let draws: Vec<(f64, f64, f64)> = (0..p.triples)
        .map(|_| {
            let c = rng.random_range(p.c_range.0..=p.c_range.1);
            let b = rng.random_range(p.b_range.0..=p.b_range.1);
            let e = rng.random_range(p.eps_range.0..=p.eps_range.1);
            (c, b, e)
        })
        .collect();
    let triples = draws
        .par_iter()
        .map(|&(c, b, eps)| {
            let s = degiorgi_sequence(InitialValue::Theta0, &IterationParams::new(c, b, eps)?, p.m_max)?;
            let max_ratio = s.ratio.iter().copied().fold(0.0, f64::max);
            Ok(TripleRow { c, b, eps, max_ratio })
        })
        .collect::<Result<Vec<_>>>()?;
    let equality_y1 = degiorgi_sequence(InitialValue::Theta0, &IterationParams::new(1.0, 4.0, 1.0)?, 1)?.value(1);
    Ok((triples, equality_y1))
}

pub fn sup_cascade(p: &DegiorgiParams) -> Result<Vec<CascadeRow>> {
    CASCADE_INSTANCES.par_iter().map(|&(name, delta)| cascade_instance(p, name, delta)).collect()
}

pub fn embedding_family(p: &DegiorgiParams) -> Result<Vec<EmbeddingRow>> {
    let gn = GNParams::embedding(2)?;
    let (_, coarse) = unit_square(p.embed_h)?;
    let (_, fine) = unit_square(0.5 * p.embed_h)?;
    let pairs: Vec<(usize, usize)> = (1..=p.modes).flat_map(|j| (1..=p.modes).map(move |k| (j, k))).collect();
    pairs
        .par_iter()
        .map(|&(j, k)| {
            Ok(EmbeddingRow {
                j,
                k,
                coarse: gn_check(&mode(&coarse, j, k)?, &gn)?.c1_hat,
                fine: gn_check(&mode(&fine, j, k)?, &gn)?.c1_hat,
            })
        })
        .collect()
}

pub fn run_degiorgi(p: &DegiorgiParams, out: Option<&Path>) -> Result<DegiorgiResult> {
    let p = p.clone().validated()?;
    let (triples, equality_y1) = degiorgi_triples(&p)?;
    let cascade = sup_cascade(&p)?;
    let embedding = embedding_family(&p)?;
    let mut r = DegiorgiResult { triples, equality_y1, cascade, embedding, params: p, files: Vec::new() };
    if let Some(dir) = out {
        r.write(dir)?;
    }
    Ok(r)
}
