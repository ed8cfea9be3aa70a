use super::Point;
use crate::error::{Error, Result};
use std::io::{BufRead, Write};
use std::sync::OnceLock;

/// Region tag used for triangles outside the physical domain on padded meshes.
pub const EXTERIOR: usize = 0;

/// Conforming P1 triangulation with a region tag per triangle.
#[derive(Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<usize>,
    on_boundary: Vec<bool>,
    boundary: Vec<usize>,
    h: f64,
    locator: OnceLock<Locator>,
}

impl Clone for Mesh {
    fn clone(&self) -> Self {
        Mesh {
            vertices: self.vertices.clone(),
            triangles: self.triangles.clone(),
            tags: self.tags.clone(),
            on_boundary: self.on_boundary.clone(),
            boundary: self.boundary.clone(),
            h: self.h,
            locator: OnceLock::new(),
        }
    }
}

impl Mesh {
    /// Orients every triangle counter-clockwise and rejects degenerate ones.
    pub fn new(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        tags: Vec<usize>,
        boundary: Vec<usize>,
        h: f64,
    ) -> Result<Self> {
        if tags.len() != triangles.len() {
            return Err(Error::InvalidParameter("one tag per triangle".into()));
        }
        let nv = vertices.len();
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidParameter(format!("triangle {t} references a missing vertex")));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(a.abs() > 0.0) {
                return Err(Error::DegenerateElement(t));
            }
            if a < 0.0 {
                tri.swap(1, 2);
            }
        }
        let mut on_boundary = vec![false; nv];
        for &b in &boundary {
            if b >= nv {
                return Err(Error::InvalidParameter("boundary vertex out of range".into()));
            }
            on_boundary[b] = true;
        }
        let boundary = (0..nv).filter(|&i| on_boundary[i]).collect();
        Ok(Mesh { vertices, triangles, tags, on_boundary, boundary, h, locator: OnceLock::new() })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn tags(&self) -> &[usize] {
        &self.tags
    }

    pub fn tag(&self, t: usize) -> usize {
        self.tags[t]
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn corners(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        signed_area(a, b, c)
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [a, b, c] = self.corners(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Gradients of the three barycentric basis functions.
    pub fn basis_gradients(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.corners(t);
        let two_a = 2.0 * signed_area(a, b, c);
        [
            [(b[1] - c[1]) / two_a, (c[0] - b[0]) / two_a],
            [(c[1] - a[1]) / two_a, (a[0] - c[0]) / two_a],
            [(a[1] - b[1]) / two_a, (b[0] - a[0]) / two_a],
        ]
    }

    /// Elementwise gradient of the P1 interpolant of nodal `values`.
    pub fn gradient(&self, t: usize, values: &[f64]) -> Point {
        let g = self.basis_gradients(t);
        let tri = self.triangles[t];
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += values[tri[k]] * g[k][0];
            out[1] += values[tri[k]] * g[k][1];
        }
        out
    }

    pub fn longest_edge(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn region_area(&self, tag: usize) -> f64 {
        (0..self.n_triangles()).filter(|&t| self.tags[t] == tag).map(|t| self.area(t)).sum()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    /// Containing triangle and barycentric coordinates of `x`.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        self.locator.get_or_init(|| Locator::build(self)).find(self, x)
    }

    /// P1 interpolation of nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: Point) -> Option<f64> {
        let (t, l) = self.locate(x)?;
        let tri = self.triangles[t];
        Some(l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]])
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# gradlab mesh")?;
        writeln!(w, "h {:?}", self.h)?;
        writeln!(w, "nodes {}", self.vertices.len())?;
        for (i, v) in self.vertices.iter().enumerate() {
            writeln!(w, "{i} {:?} {:?} {}", v[0], v[1], u8::from(self.on_boundary[i]))?;
        }
        writeln!(w, "elements {}", self.triangles.len())?;
        for (t, tri) in self.triangles.iter().enumerate() {
            writeln!(w, "{t} {} {} {} {}", tri[0], tri[1], tri[2], self.tags[t])?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("mesh file: {m}"));
        let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim_start().starts_with('#')));
        let mut next = || -> Result<String> { lines.next().ok_or_else(|| bad("truncated"))?.map_err(Error::from) };
        let header = |line: String, key: &str| -> Result<String> {
            line.strip_prefix(key).map(|s| s.trim().to_string()).ok_or_else(|| bad(&format!("expected {key}")))
        };
        let h: f64 = header(next()?, "h")?.parse().map_err(|_| bad("h"))?;
        let nv: usize = header(next()?, "nodes")?.parse().map_err(|_| bad("nodes"))?;
        let mut vertices = Vec::with_capacity(nv);
        let mut boundary = Vec::new();
        for i in 0..nv {
            let line = next()?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(bad("node record"));
            }
            let x: f64 = f[1].parse().map_err(|_| bad("x"))?;
            let y: f64 = f[2].parse().map_err(|_| bad("y"))?;
            vertices.push([x, y]);
            if f[3] == "1" {
                boundary.push(i);
            }
        }
        let nt: usize = header(next()?, "elements")?.parse().map_err(|_| bad("elements"))?;
        let mut triangles = Vec::with_capacity(nt);
        let mut tags = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = next()?;
            let f: Vec<usize> = line
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad("element record")))
                .collect::<Result<_>>()?;
            if f.len() != 5 {
                return Err(bad("element record"));
            }
            triangles.push([f[1], f[2], f[3]]);
            tags.push(f[4]);
        }
        Mesh::new(vertices, triangles, tags, boundary, h)
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug)]
struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    items: Vec<usize>,
}

impl Locator {
    fn build(mesh: &Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            lo = [lo[0].min(v[0]), lo[1].min(v[1])];
            hi = [hi[0].max(v[0]), hi[1].max(v[1])];
        }
        let nt = mesh.n_triangles().max(1);
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
        let n = ((nt as f64 / 2.0).sqrt().ceil() as usize).clamp(1, 2048);
        let cell = span / n as f64 * (1.0 + 1e-12);
        let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).max(1);
        let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).max(1);
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
        for t in 0..mesh.n_triangles() {
            let c = mesh.corners(t);
            let bx0 = c.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let bx1 = c.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let by0 = c.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
            let by1 = c.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
            let ix0 = (((bx0 - lo[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
            let ix1 = (((bx1 - lo[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
            let iy0 = (((by0 - lo[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
            let iy1 = (((by1 - lo[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
            for iy in iy0..=iy1 {
                for ix in ix0..=ix1 {
                    buckets[iy * nx + ix].push(t);
                }
            }
        }
        let mut start = Vec::with_capacity(nx * ny + 1);
        let mut items = Vec::new();
        for b in buckets {
            start.push(items.len());
            items.extend(b);
        }
        start.push(items.len());
        Locator { origin: lo, cell, nx, ny, start, items }
    }

    fn find(&self, mesh: &Mesh, x: Point) -> Option<(usize, [f64; 3])> {
        let fx = (x[0] - self.origin[0]) / self.cell;
        let fy = (x[1] - self.origin[1]) / self.cell;
        if !(fx >= -1e-9 && fy >= -1e-9) {
            return None;
        }
        let ix = (fx.max(0.0) as usize).min(self.nx - 1);
        let iy = (fy.max(0.0) as usize).min(self.ny - 1);
        let b = iy * self.nx + ix;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.items[self.start[b]..self.start[b + 1]] {
            let [a, bb, c] = mesh.corners(t);
            let area = signed_area(a, bb, c);
            let l = [
                signed_area(x, bb, c) / area,
                signed_area(a, x, c) / area,
                signed_area(a, bb, x) / area,
            ];
            let m = l[0].min(l[1]).min(l[2]);
            if m >= 0.0 {
                return Some((t, l));
            }
            if best.as_ref().map_or(true, |bst| m > bst.2) {
                best = Some((t, l, m));
            }
        }
        best.filter(|b| b.2 > -1e-10).map(|b| (b.0, b.1))
    }
}
