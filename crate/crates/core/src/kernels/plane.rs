use super::estimate::{GridSpec, KernelEstimate, KernelSample, Lattice};
use super::{padding_distance, BOUNDARY_TOLERANCE};
use crate::coefficients::{CoefficientField, SourceData};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh_with, Mesh, MeshOptions, Padding, Point};
use crate::solver::{ParabolicProblem, ThetaStepper};
use std::sync::Arc;

fn lumped_weights(mesh: &Mesh) -> Vec<f64> {
    let mut w = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let a = mesh.area(t) / 3.0;
        for i in mesh.triangle(t) {
            w[i] += a;
        }
    }
    w
}

/// Lumped-mass P1 with implicit Euler on the field's domain, padded with the
/// field's exterior value when it has one.
pub(crate) fn evolve(
    field: &CoefficientField,
    xi: Point,
    tau: f64,
    grid: &GridSpec,
    h: f64,
    dt: f64,
    sigma: f64,
) -> Result<KernelEstimate> {
    let layout = field.layout();
    if layout.outer.inner_distance(xi) <= 0.0 {
        return Err(Error::OutsideDomain(xi[0], xi[1]));
    }
    let mut targets: Vec<(usize, f64)> = grid
        .elapsed()
        .iter()
        .map(|&s| (if s > 0.0 { (s / dt).round().max(1.0) as usize } else { 0 }, s))
        .collect();
    targets.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let last = targets.last().map_or(0, |t| t.0);
    let s_max = last as f64 * dt;

    let big = field.exterior().unwrap_or(0.0).max(field.big_lambda());
    let c = layout.outer.centroid();
    let offset = (xi[0] - c[0]).abs().max((xi[1] - c[1]).abs());
    let mut opts = MeshOptions::new(h);
    let reach = match field.exterior() {
        Some(_) => {
            let l = 1.05 * padding_distance(big, s_max, BOUNDARY_TOLERANCE);
            let half_width = offset + l;
            opts.padding = Some(Padding { half_width, growth: 0.3, max_size: (l / 20.0).max(4.0 * h) });
            half_width - offset
        }
        None => layout.outer.inner_distance(xi),
    };
    let mesh = Arc::new(build_mesh_with(layout, &opts)?);
    let weights = lumped_weights(&mesh);
    let gauss = move |x: Point| (-((x[0] - xi[0]).powi(2) + (x[1] - xi[1]).powi(2)) / (2.0 * sigma * sigma)).exp();
    let z: f64 = mesh.vertices().iter().zip(&weights).map(|(&x, w)| w * gauss(x)).sum();
    if !(z > 0.0) {
        return Err(Error::InvalidParameter("mollifier has no mass on the mesh".into()));
    }

    let problem = ParabolicProblem::new(
        mesh.clone(),
        field.clone(),
        SourceData::zero(5.0)?,
        s_max.max(dt),
        dt,
    )
    .with_initial(move |x| gauss(x) / z)
    .with_lumped_mass();
    let mut stepper = ThetaStepper::new(&problem)?;

    let lattice_axes = grid.axes(2, xi);
    let mut samples = Vec::new();
    let mut masses = Vec::new();
    let mut grad_max = Vec::new();
    let mut lattice_rows: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut peak: f64 = 0.0;
    let mut min_val: f64 = 0.0;
    let mut next = 0;
    for step in 0..=last {
        if step > 0 {
            stepper.advance()?;
        }
        while next < targets.len() && targets[next].0 == step {
            let s = targets[next].1;
            next += 1;
            let pts = grid.points(2, xi, s);
            if s <= 0.0 {
                for &x in &pts {
                    samples.push(KernelSample { x, t: tau + s, value: 0.0, grad: [0.0, 0.0] });
                }
                masses.push((s, 0.0));
                if lattice_axes.is_some() {
                    lattice_rows.push((tau + s, vec![0.0; pts.len()]));
                }
                continue;
            }
            let u = stepper.values();
            let st = stepper.time();
            let mut row = Vec::with_capacity(pts.len());
            for &x in &pts {
                let (tri, l) = mesh.locate(x).ok_or(Error::OutsideDomain(x[0], x[1]))?;
                let v = mesh.triangle(tri);
                let value = l[0] * u[v[0]] + l[1] * u[v[1]] + l[2] * u[v[2]];
                samples.push(KernelSample { x, t: tau + st, value, grad: mesh.gradient(tri, u) });
                row.push(value);
            }
            if lattice_axes.is_some() {
                lattice_rows.push((tau + st, row));
            }
            masses.push((st, u.iter().zip(&weights).map(|(a, w)| a * w).sum()));
            let gm = (0..mesh.n_triangles())
                .map(|t| {
                    let g = mesh.gradient(t, u);
                    g[0].hypot(g[1])
                })
                .fold(0.0, f64::max);
            grad_max.push((st, gm));
            peak = peak.max(u.iter().copied().fold(0.0, f64::max));
            min_val = min_val.min(u.iter().copied().fold(0.0, f64::min));
        }
    }

    let boundary_influence = (-reach * reach / (4.0 * big * s_max.max(dt))).exp();
    let mut warnings = Vec::new();
    if boundary_influence >= BOUNDARY_TOLERANCE {
        warnings.push(format!("boundary influence {boundary_influence:e} exceeds {BOUNDARY_TOLERANCE:e}"));
    }
    let lattice = lattice_axes.map(|axes| {
        lattice_rows.sort_by(|p, q| p.0.total_cmp(&q.0));
        Lattice {
            axes,
            times: lattice_rows.iter().map(|r| r.0).collect(),
            values: lattice_rows.into_iter().flat_map(|r| r.1).collect(),
        }
    });
    Ok(KernelEstimate {
        dim: 2,
        xi,
        tau,
        sigma,
        h,
        samples,
        lattice,
        masses,
        grad_max,
        peak,
        min_ratio: if peak > 0.0 { min_val / peak } else { 0.0 },
        boundary_influence,
        warnings,
    })
}
