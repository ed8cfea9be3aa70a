//! P1 finite elements in space, θ-scheme in time.

mod assembly;
pub(crate) use assembly::quad_point;
mod field;
mod parabolic;
mod sparse;

pub use assembly::{assemble, assemble_load};
pub use field::SpaceTimeField;
pub use parabolic::{
    solve_elliptic, solve_parabolic, solve_parabolic_strided, BoundaryFn, ParabolicProblem, SpatialFn, ThetaStepper,
};
pub use sparse::{cg_solve, conjugate_gradient, CgOptions, CgOutcome, CsrMatrix, SparseSystem};
