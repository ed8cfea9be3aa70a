use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use std::io::Write;
use std::sync::Arc;

/// Nodal P1 values on a mesh at a list of increasing times.
#[derive(Clone, Debug)]
pub struct SpaceTimeField {
    mesh: Arc<Mesh>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    label: String,
}

impl SpaceTimeField {
    pub fn new(mesh: Arc<Mesh>, times: Vec<f64>, values: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidParameter("one slice per time required".into()));
        }
        if values.iter().any(|v| v.len() != mesh.n_vertices()) {
            return Err(Error::InvalidParameter("slice length differs from the vertex count".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("times must increase".into()));
        }
        Ok(SpaceTimeField { mesh, times, values, label: label.into() })
    }

    /// Samples `u(x, t)` at the vertices for each time.
    pub fn from_fn(mesh: Arc<Mesh>, times: Vec<f64>, u: impl Fn(Point, f64) -> f64, label: &str) -> Result<Self> {
        let values = times.iter().map(|&t| mesh.vertices().iter().map(|&x| u(x, t)).collect()).collect();
        SpaceTimeField::new(mesh, times, values, label)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn n_slices(&self) -> usize {
        self.times.len()
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn slices(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn last(&self) -> &[f64] {
        self.values.last().unwrap()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Time step of the (uniform) grid; zero for a single slice.
    pub fn step(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    pub fn gradient(&self, k: usize, t: usize) -> Point {
        self.mesh.gradient(t, &self.values[k])
    }

    pub fn value_at(&self, k: usize, x: Point) -> Option<f64> {
        self.mesh.interpolate(&self.values[k], x)
    }

    pub fn gradient_at(&self, k: usize, x: Point) -> Option<Point> {
        let (t, _) = self.mesh.locate(x)?;
        Some(self.gradient(k, t))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64, label: &str) -> SpaceTimeField {
        let values = self.values.iter().map(|v| v.iter().map(|&x| f(x)).collect()).collect();
        SpaceTimeField { mesh: self.mesh.clone(), times: self.times.clone(), values, label: label.into() }
    }

    /// Slices `from..=to` only.
    pub fn window(&self, from: usize, to: usize) -> SpaceTimeField {
        SpaceTimeField {
            mesh: self.mesh.clone(),
            times: self.times[from..=to].to_vec(),
            values: self.values[from..=to].to_vec(),
            label: self.label.clone(),
        }
    }

    /// `(uᵀ B u)^{1/2}` for slice `k` with the consistent mass matrix.
    pub fn mass_norm(&self, k: usize) -> f64 {
        let v = &self.values[k];
        let mut s = 0.0;
        for t in 0..self.mesh.n_triangles() {
            let [a, b, c] = self.mesh.triangle(t);
            let (x, y, z) = (v[a], v[b], v[c]);
            s += self.mesh.area(t) / 6.0 * (x * x + y * y + z * z + x * y + y * z + z * x);
        }
        s.max(0.0).sqrt()
    }

    /// One block per slice: a `# t = ...` header followed by `index value` lines.
    pub fn write_slices<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# field {}", self.label)?;
        for (k, t) in self.times.iter().enumerate() {
            writeln!(w, "# t = {t:?}")?;
            for (i, v) in self.values[k].iter().enumerate() {
                writeln!(w, "{i} {v:?}")?;
            }
        }
        Ok(())
    }
}
