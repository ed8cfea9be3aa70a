use super::assembly::{assemble, assemble_load};
use super::field::SpaceTimeField;
use super::sparse::{conjugate_gradient, CgOptions, CsrMatrix};
use crate::coefficients::{CoefficientField, SourceData};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use std::sync::Arc;

pub type SpatialFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>;

/// `u_t - div(a ∇u) = f - Σ ∂_i f_i` on `D × (0, T]` with Dirichlet data.
#[derive(Clone)]
pub struct ParabolicProblem {
    pub mesh: Arc<Mesh>,
    pub field: CoefficientField,
    pub sources: SourceData,
    pub initial: SpatialFn,
    /// Boundary values `g(x, t)`; `None` means homogeneous.
    pub boundary: Option<BoundaryFn>,
    pub final_time: f64,
    pub time_step: f64,
    pub theta: f64,
    /// Row-summed mass matrix; with an M-matrix stiffness this keeps
    /// implicit Euler nonnegative.
    pub lumped_mass: bool,
}

impl ParabolicProblem {
    pub fn new(mesh: Arc<Mesh>, field: CoefficientField, sources: SourceData, final_time: f64, time_step: f64) -> Self {
        ParabolicProblem {
            mesh,
            field,
            sources,
            initial: Arc::new(|_| 0.0),
            boundary: None,
            final_time,
            time_step,
            theta: 1.0,
            lumped_mass: false,
        }
    }

    pub fn with_initial(mut self, u0: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        self.initial = Arc::new(u0);
        self
    }

    pub fn with_boundary(mut self, g: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.boundary = Some(Arc::new(g));
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_lumped_mass(mut self) -> Self {
        self.lumped_mass = true;
        self
    }
}

/// θ-scheme integrator that advances one step at a time:
/// `(B + θτK) uⁿ⁺¹ = (B - (1-θ)τK) uⁿ + τ(θLⁿ⁺¹ + (1-θ)Lⁿ)`.
pub struct ThetaStepper {
    mesh: Arc<Mesh>,
    sources: SourceData,
    boundary: Option<BoundaryFn>,
    lhs: CsrMatrix,
    lhs_free: CsrMatrix,
    rhs_op: CsrMatrix,
    free: Vec<usize>,
    tau: f64,
    theta: f64,
    n_steps: usize,
    step: usize,
    u: Vec<f64>,
    load: Vec<f64>,
    cg: CgOptions,
    iterations: usize,
}

impl ThetaStepper {
    pub fn new(problem: &ParabolicProblem) -> Result<Self> {
        let (t_end, dt, theta) = (problem.final_time, problem.time_step, problem.theta);
        if !(t_end > 0.0 && dt > 0.0 && dt <= t_end) {
            return Err(Error::InvalidParameter(format!("time step {dt} and horizon {t_end}")));
        }
        if !(0.5..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta {theta} outside [1/2, 1]")));
        }
        let n_steps = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
        let tau = t_end / n_steps as f64;
        let mesh = problem.mesh.clone();
        let (k, b) = assemble(&mesh, &problem.field)?;
        let b = if problem.lumped_mass { b.lumped() } else { b };
        let lhs = b.combine(1.0, &k, theta * tau);
        let rhs_op = b.combine(1.0, &k, -(1.0 - theta) * tau);
        let free: Vec<usize> = (0..mesh.n_vertices()).filter(|&i| !mesh.is_boundary(i)).collect();
        let lhs_free = lhs.submatrix(&free);
        let mut u: Vec<f64> = mesh.vertices().iter().map(|&x| (problem.initial)(x)).collect();
        for &i in mesh.boundary_vertices() {
            u[i] = problem.boundary.as_ref().map_or(0.0, |g| g(mesh.vertex(i), 0.0));
        }
        let load = assemble_load(&mesh, &problem.sources, 0.0);
        Ok(ThetaStepper {
            mesh,
            sources: problem.sources.clone(),
            boundary: problem.boundary.clone(),
            lhs,
            lhs_free,
            rhs_op,
            free,
            tau,
            theta,
            n_steps,
            step: 0,
            u,
            load,
            cg: CgOptions::default(),
            iterations: 0,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.tau
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn cg_iterations(&self) -> usize {
        self.iterations
    }

    pub fn done(&self) -> bool {
        self.step >= self.n_steps
    }

    /// Switches θ for subsequent steps (for example a few implicit Euler
    /// steps before Crank-Nicolson).
    pub fn set_theta(&mut self, theta: f64, k: &CsrMatrix, b: &CsrMatrix) {
        self.theta = theta;
        self.lhs = b.combine(1.0, k, theta * self.tau);
        self.rhs_op = b.combine(1.0, k, -(1.0 - theta) * self.tau);
        self.lhs_free = self.lhs.submatrix(&self.free);
    }

    pub fn advance(&mut self) -> Result<()> {
        let t_next = (self.step + 1) as f64 * self.tau;
        let load_next = assemble_load(&self.mesh, &self.sources, t_next);
        let mut rhs = self.rhs_op.matvec(&self.u);
        let (th, tau) = (self.theta, self.tau);
        for i in 0..rhs.len() {
            rhs[i] += tau * (th * load_next[i] + (1.0 - th) * self.load[i]);
        }
        let mut g = vec![0.0; self.u.len()];
        if let Some(bf) = &self.boundary {
            for &i in self.mesh.boundary_vertices() {
                g[i] = bf(self.mesh.vertex(i), t_next);
            }
        }
        let lift = self.lhs.matvec(&g);
        let rhs_free: Vec<f64> = self.free.iter().map(|&i| rhs[i] - lift[i]).collect();
        let guess: Vec<f64> = self.free.iter().map(|&i| self.u[i]).collect();
        let out = conjugate_gradient(&self.lhs_free, &rhs_free, Some(&guess), self.cg)?;
        self.iterations += out.iterations;
        let mut next = g;
        for (k, &i) in self.free.iter().enumerate() {
            next[i] = out.x[k];
        }
        self.u = next;
        self.load = load_next;
        self.step += 1;
        Ok(())
    }
}

/// Runs to the final time and keeps every slice.
pub fn solve_parabolic(problem: &ParabolicProblem) -> Result<SpaceTimeField> {
    solve_parabolic_strided(problem, 1)
}

/// Keeps every `stride`-th slice (the final one always).
pub fn solve_parabolic_strided(problem: &ParabolicProblem, stride: usize) -> Result<SpaceTimeField> {
    let stride = stride.max(1);
    let mut s = ThetaStepper::new(problem)?;
    let mut times = vec![0.0];
    let mut values = vec![s.values().to_vec()];
    while !s.done() {
        s.advance()?;
        if s.step_index() % stride == 0 {
            times.push(s.time());
            values.push(s.values().to_vec());
        }
    }
    SpaceTimeField::new(problem.mesh.clone(), times, values, "parabolic")
}

/// Stationary problem `-div(a ∇u) = h - Σ ∂_i g_i` with sources evaluated at `t = 0`.
pub fn solve_elliptic(
    mesh: &Arc<Mesh>,
    field: &CoefficientField,
    sources: &SourceData,
    boundary: Option<&dyn Fn(Point) -> f64>,
) -> Result<SpaceTimeField> {
    let (k, _) = assemble(mesh, field)?;
    let load = assemble_load(mesh, sources, 0.0);
    let mut g = vec![0.0; mesh.n_vertices()];
    if let Some(bf) = boundary {
        for &i in mesh.boundary_vertices() {
            g[i] = bf(mesh.vertex(i));
        }
    }
    let free: Vec<usize> = (0..mesh.n_vertices()).filter(|&i| !mesh.is_boundary(i)).collect();
    if free.is_empty() {
        return SpaceTimeField::new(mesh.clone(), vec![0.0], vec![g], "elliptic");
    }
    let lift = k.matvec(&g);
    let rhs: Vec<f64> = free.iter().map(|&i| load[i] - lift[i]).collect();
    let kf = k.submatrix(&free);
    let out = conjugate_gradient(&kf, &rhs, None, CgOptions { tol: 1e-12, max_iter: 50_000 })?;
    let mut u = g;
    for (j, &i) in free.iter().enumerate() {
        u[i] = out.x[j];
    }
    SpaceTimeField::new(mesh.clone(), vec![0.0], vec![u], "elliptic")
}
