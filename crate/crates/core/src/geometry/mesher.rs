use super::ellipse::Ellipse;
use super::layout::{InclusionLayout, OuterDomain};
use super::mesh::{dist, Mesh, EXTERIOR};
use super::Point;
use crate::error::{Error, Result};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};
use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

/// Square box around the domain, meshed coarser away from it. Triangles outside
/// the domain are tagged [`EXTERIOR`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Padding {
    pub half_width: f64,
    pub growth: f64,
    pub max_size: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshOptions {
    pub h: f64,
    pub padding: Option<Padding>,
    pub vertex_budget: usize,
    /// Element size near a narrow gap as a fraction of the local gap width.
    pub grading: f64,
}

impl MeshOptions {
    pub fn new(h: f64) -> Self {
        MeshOptions { h, padding: None, vertex_budget: 4_000_000, grading: 0.4 }
    }
}

pub fn build_mesh(layout: &InclusionLayout, h: f64) -> Result<Mesh> {
    build_mesh_with(layout, &MeshOptions::new(h))
}

pub fn build_mesh_with(layout: &InclusionLayout, opts: &MeshOptions) -> Result<Mesh> {
    let h = opts.h;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("mesh size {h} must be positive")));
    }
    for inc in &layout.inclusions {
        if h >= inc.shape.min_radius() {
            return Err(Error::InvalidParameter(format!(
                "mesh size {h} must be below the smallest inclusion radius {}",
                inc.shape.min_radius()
            )));
        }
    }
    if let OuterDomain::Square { min, side } = layout.outer {
        if layout.inclusions.is_empty() && opts.padding.is_none() {
            return structured_square(min, side, h, opts.vertex_budget);
        }
    }
    Mesher::new(layout, opts)?.run()
}

fn structured_square(min: Point, side: f64, h: f64, budget: usize) -> Result<Mesh> {
    let n = ((side / h) - 1e-9).ceil().max(1.0) as usize;
    if (n + 1) * (n + 1) > budget {
        return Err(Error::InfeasibleResolution(format!("{} vertices exceed the budget", (n + 1) * (n + 1))));
    }
    let step = side / n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    let mut boundary = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([min[0] + i as f64 * step, min[1] + j as f64 * step]);
            if i == 0 || j == 0 || i == n || j == n {
                boundary.push(idx(i, j));
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let tags = vec![1; triangles.len()];
    Mesh::new(vertices, triangles, tags, boundary, h)
}

struct GradedPair {
    a: Ellipse,
    b: Ellipse,
    floor: f64,
    gap: f64,
    p: Point,
    q: Point,
}

struct Mesher<'a> {
    layout: &'a InclusionLayout,
    opts: MeshOptions,
    pairs: Vec<GradedPair>,
}

impl<'a> Mesher<'a> {
    fn new(layout: &'a InclusionLayout, opts: &MeshOptions) -> Result<Self> {
        let h = opts.h;
        let reach = h / opts.grading;
        let mut pairs = Vec::new();
        let scale = {
            let (lo, hi) = layout.outer.bbox();
            (hi[0] - lo[0]).max(hi[1] - lo[1])
        };
        for i in 0..layout.inclusions.len() {
            for j in i + 1..layout.inclusions.len() {
                let (gap, p, q) = layout.pair_gap(i, j);
                if gap < reach {
                    let gap = if gap < 1e-12 * scale { 0.0 } else { gap };
                    let floor = if gap > 0.0 { (h / 64.0).min(opts.grading * gap) } else { h / 64.0 };
                    if floor < 1e-9 * scale {
                        return Err(Error::InfeasibleResolution(format!(
                            "gap {gap:e} needs elements below the floating-point floor"
                        )));
                    }
                    pairs.push(GradedPair {
                        a: layout.inclusions[i].shape,
                        b: layout.inclusions[j].shape,
                        floor,
                        gap,
                        p,
                        q,
                    });
                }
            }
        }
        Ok(Mesher { layout, opts: *opts, pairs })
    }

    fn size(&self, x: Point) -> f64 {
        let h = self.opts.h;
        let mut s = h;
        if let Some(pad) = self.opts.padding {
            let out = (-self.layout.outer.inner_distance(x)).max(0.0);
            s = (h + pad.growth * out).min(pad.max_size.max(h));
        }
        for pr in &self.pairs {
            let w = pr.a.signed_distance(x).abs() + pr.b.signed_distance(x).abs();
            s = s.min(pr.floor.max(self.opts.grading * w));
        }
        s
    }

    fn fill_box(&self) -> (Point, f64) {
        match self.opts.padding {
            Some(pad) => {
                let c = self.layout.outer.centroid();
                ([c[0] - pad.half_width, c[1] - pad.half_width], 2.0 * pad.half_width)
            }
            None => {
                let (lo, hi) = self.layout.outer.bbox();
                (lo, (hi[0] - lo[0]).max(hi[1] - lo[1]))
            }
        }
    }

    fn run(&self) -> Result<Mesh> {
        let budget = self.opts.vertex_budget;
        // closed curves; the first one is the mesh boundary
        let mut curves: Vec<Vec<Point>> = Vec::new();
        let (bmin, bside) = self.fill_box();
        match (self.opts.padding, self.layout.outer) {
            (Some(_), _) => curves.push(self.sample_square(bmin, bside)?),
            (None, OuterDomain::Square { min, side }) => curves.push(self.sample_square(min, side)?),
            (None, OuterDomain::Disk { center, radius }) => {
                curves.push(self.sample_ellipse(&Ellipse::circle(center, radius), &[])?)
            }
        }
        if self.opts.padding.is_some() {
            match self.layout.outer {
                OuterDomain::Square { min, side } => curves.push(self.sample_square(min, side)?),
                OuterDomain::Disk { center, radius } => {
                    curves.push(self.sample_ellipse(&Ellipse::circle(center, radius), &[])?)
                }
            }
        }
        let mut gap_points = Vec::new();
        let mut forced: Vec<Vec<Point>> = vec![Vec::new(); self.layout.inclusions.len()];
        for pr in &self.pairs {
            let ia = self.index_of(&pr.a);
            let ib = self.index_of(&pr.b);
            if pr.gap == 0.0 {
                let m = [0.5 * (pr.p[0] + pr.q[0]), 0.5 * (pr.p[1] + pr.q[1])];
                forced[ia].push(m);
                forced[ib].push(m);
            } else {
                forced[ia].push(pr.p);
                forced[ib].push(pr.q);
                let mid = [0.5 * (pr.p[0] + pr.q[0]), 0.5 * (pr.p[1] + pr.q[1])];
                let k = ((pr.gap / self.size(mid)).ceil() as usize).saturating_sub(1).max(1);
                for i in 1..=k {
                    let f = i as f64 / (k + 1) as f64;
                    gap_points.push([pr.p[0] + f * (pr.q[0] - pr.p[0]), pr.p[1] + f * (pr.q[1] - pr.p[1])]);
                }
            }
        }
        for (i, inc) in self.layout.inclusions.iter().enumerate() {
            curves.push(self.sample_ellipse(&inc.shape, &forced[i])?);
        }
        let curve_count: usize = curves.iter().map(Vec::len).sum();
        if curve_count > budget {
            return Err(Error::InfeasibleResolution(format!("{curve_count} interface vertices exceed the budget")));
        }

        let fill = self.quadtree_points(bmin, bside, budget - curve_count)?;
        let mut points: Vec<Point> = Vec::new();
        let mut boundary_count = 0;
        for (c, curve) in curves.iter().enumerate() {
            points.extend_from_slice(curve);
            if c == 0 {
                boundary_count = points.len();
            }
        }
        points.extend_from_slice(&gap_points);
        let fill_domain_distance = |x: Point| -> f64 {
            match self.opts.padding {
                Some(_) => {
                    let dx = (x[0] - bmin[0]).min(bmin[0] + bside - x[0]);
                    let dy = (x[1] - bmin[1]).min(bmin[1] + bside - x[1]);
                    dx.min(dy)
                }
                None => self.layout.outer.inner_distance(x),
            }
        };
        for x in fill {
            let s = 0.55 * self.size(x);
            if fill_domain_distance(x) < s {
                continue;
            }
            if self.opts.padding.is_some() && self.layout.outer.inner_distance(x).abs() < s {
                continue;
            }
            let near_curve = self.layout.inclusions.iter().any(|inc| {
                let e = &inc.shape;
                let r = (x[0] - e.center[0]).hypot(x[1] - e.center[1]);
                if r > e.max_radius() + s || r < e.min_radius() - s {
                    return false;
                }
                e.signed_distance(x).abs() < s
            });
            if near_curve || gap_points.iter().any(|&g| dist(g, x) < s) {
                continue;
            }
            points.push(x);
        }
        if points.len() > budget {
            return Err(Error::InfeasibleResolution(format!("{} vertices exceed the budget", points.len())));
        }

        // dedupe exact repeats so spade keeps our numbering
        let mut seen: HashMap<(u64, u64), usize> = HashMap::new();
        let mut remap = Vec::with_capacity(points.len());
        let mut unique: Vec<Point> = Vec::with_capacity(points.len());
        for p in &points {
            let key = (p[0].to_bits(), p[1].to_bits());
            let id = *seen.entry(key).or_insert_with(|| {
                unique.push(*p);
                unique.len() - 1
            });
            remap.push(id);
        }
        let mut edges = Vec::new();
        let mut offset = 0;
        for curve in &curves {
            let n = curve.len();
            for k in 0..n {
                let a = remap[offset + k];
                let b = remap[offset + (k + 1) % n];
                if a != b {
                    edges.push([a, b]);
                }
            }
            offset += n;
        }
        let boundary: Vec<usize> = {
            let mut b: Vec<usize> = remap[..boundary_count].to_vec();
            b.sort_unstable();
            b.dedup();
            b
        };
        let spade_points: Vec<Point2<f64>> = unique.iter().map(|p| Point2::new(p[0], p[1])).collect();
        let mut conflicts = 0usize;
        let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::try_bulk_load_cdt(spade_points, edges, |_| {
            conflicts += 1
        })
        .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;
        if conflicts > 0 {
            return Err(Error::Geometry(format!("{conflicts} interface edges intersect")));
        }
        if cdt.num_vertices() != unique.len() {
            return Err(Error::Geometry("triangulation merged vertices".into()));
        }
        let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
        let mut tags = Vec::with_capacity(cdt.num_inner_faces());
        for face in cdt.inner_faces() {
            let v = face.vertices();
            let tri = [v[0].fix().index(), v[1].fix().index(), v[2].fix().index()];
            let b = {
                let (p, q, r) = (unique[tri[0]], unique[tri[1]], unique[tri[2]]);
                [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
            };
            let tag = if self.opts.padding.is_some() && self.layout.outer.inner_distance(b) < 0.0 {
                EXTERIOR
            } else {
                self.layout.classify(b)?
            };
            triangles.push(tri);
            tags.push(tag);
        }
        Mesh::new(unique, triangles, tags, boundary, self.opts.h)
    }

    fn index_of(&self, e: &Ellipse) -> usize {
        self.layout.inclusions.iter().position(|inc| inc.shape == *e).unwrap_or(0)
    }

    fn refine(&self, curve: &dyn Fn(f64) -> Point, a: (f64, Point), b: (f64, Point), depth: u32, out: &mut Vec<Point>) {
        let m = 0.5 * (a.0 + b.0);
        let pm = curve(m);
        let s = self.size(a.1).min(self.size(b.1)).min(self.size(pm));
        if depth < 48 && dist(a.1, b.1) > s {
            self.refine(curve, a, (m, pm), depth + 1, out);
            self.refine(curve, (m, pm), b, depth + 1, out);
        } else {
            out.push(a.1);
        }
    }

    fn sample_ellipse(&self, e: &Ellipse, forced: &[Point]) -> Result<Vec<Point>> {
        let mut anchors: Vec<(f64, Point)> = forced
            .iter()
            .map(|&p| (e.param_of(p).rem_euclid(2.0 * PI), p))
            .collect();
        for k in 0..8 {
            let phi = k as f64 * PI / 4.0;
            let far = anchors.iter().all(|a| angular_gap(a.0, phi) > PI / 16.0);
            if far {
                anchors.push((phi, e.point_at(phi)));
            }
        }
        anchors.sort_by(|a, b| a.0.total_cmp(&b.0));
        let curve = |phi: f64| e.point_at(phi);
        let mut out = Vec::new();
        for k in 0..anchors.len() {
            let a = anchors[k];
            let mut b = anchors[(k + 1) % anchors.len()];
            if k + 1 == anchors.len() {
                b.0 += 2.0 * PI;
            }
            self.refine(&curve, a, b, 0, &mut out);
            if out.len() > self.opts.vertex_budget {
                return Err(Error::InfeasibleResolution("interface sampling exceeds the budget".into()));
            }
        }
        Ok(out)
    }

    fn sample_square(&self, min: Point, side: f64) -> Result<Vec<Point>> {
        let c = [
            min,
            [min[0] + side, min[1]],
            [min[0] + side, min[1] + side],
            [min[0], min[1] + side],
        ];
        let mut out = Vec::new();
        for k in 0..4 {
            let p = c[k];
            let q = c[(k + 1) % 4];
            let seg = move |t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
            self.refine(&seg, (0.0, p), (1.0, q), 0, &mut out);
            if out.len() > self.opts.vertex_budget {
                return Err(Error::InfeasibleResolution("boundary sampling exceeds the budget".into()));
            }
        }
        Ok(out)
    }

    fn quadtree_points(&self, origin: Point, side: f64, budget: usize) -> Result<Vec<Point>> {
        const MAXD: u32 = 40;
        let unit = side / (1u64 << MAXD) as f64;
        let mut corners: HashSet<(u64, u64)> = HashSet::new();
        let mut stack = vec![(0u64, 0u64, 0u32)];
        let mut leaves = 0usize;
        while let Some((ix, iy, lvl)) = stack.pop() {
            let cs = side / (1u64 << lvl) as f64;
            let x0 = origin[0] + ix as f64 * cs;
            let y0 = origin[1] + iy as f64 * cs;
            let mut s = self.size([x0 + 0.5 * cs, y0 + 0.5 * cs]);
            for (dx, dy) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
                s = s.min(self.size([x0 + dx * cs, y0 + dy * cs]));
            }
            if cs > s * (1.0 + 1e-12) && lvl < MAXD {
                for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    stack.push((2 * ix + dx, 2 * iy + dy, lvl + 1));
                }
                continue;
            }
            leaves += 1;
            if leaves > budget {
                return Err(Error::InfeasibleResolution(format!("more than {budget} fill cells required")));
            }
            let sh = MAXD - lvl;
            for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                corners.insert(((ix + dx) << sh, (iy + dy) << sh));
            }
        }
        let mut pts: Vec<(u64, u64)> = corners.into_iter().collect();
        pts.sort_unstable_by_key(|&(x, y)| (y, x));
        Ok(pts
            .into_iter()
            .map(|(x, y)| [origin[0] + x as f64 * unit, origin[1] + y as f64 * unit])
            .collect())
    }
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
