use super::sparse::CsrMatrix;
use crate::coefficients::{CoefficientField, SourceData};
use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};
use crate::quadrature::TRI3;

pub(crate) fn quad_point(c: &[Point; 3], l: &[f64; 3]) -> Point {
    [
        l[0] * c[0][0] + l[1] * c[1][0] + l[2] * c[2][0],
        l[0] * c[0][1] + l[1] * c[1][1] + l[2] * c[2][1],
    ]
}

/// Stiffness `K_kl = ∫ a ∇φ_l·∇φ_k` and consistent mass `B_kl = ∫ φ_k φ_l`.
/// The coefficient is averaged over three interior Gauss points using the
/// triangle's own region branch.
pub fn assemble(mesh: &Mesh, field: &CoefficientField) -> Result<(CsrMatrix, CsrMatrix)> {
    let mut k = CsrMatrix::mesh_pattern(mesh);
    let mut b = k.clone();
    for t in 0..mesh.n_triangles() {
        let area = mesh.area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateElement(t));
        }
        let c = mesh.corners(t);
        let tag = mesh.tag(t);
        let mut abar = [[0.0; 2]; 2];
        for (l, w) in TRI3.iter() {
            let a = field.eval_region(tag, quad_point(&c, l))?;
            for i in 0..2 {
                for j in 0..2 {
                    abar[i][j] += w * a[i][j];
                }
            }
        }
        let g = mesh.basis_gradients(t);
        let tri = mesh.triangle(t);
        for p in 0..3 {
            let ag = [
                abar[0][0] * g[p][0] + abar[0][1] * g[p][1],
                abar[1][0] * g[p][0] + abar[1][1] * g[p][1],
            ];
            for q in 0..3 {
                let kv = area * (ag[0] * g[q][0] + ag[1] * g[q][1]);
                k.add(tri[q], tri[p], kv);
                let bv = if p == q { area / 6.0 } else { area / 12.0 };
                b.add(tri[p], tri[q], bv);
            }
        }
    }
    Ok((k, b))
}

/// Load vector `L_k = ∫ f φ_k + Σ_i ∫ f_i ∂_i φ_k` at time `t`.
pub fn assemble_load(mesh: &Mesh, sources: &SourceData, t: f64) -> Vec<f64> {
    let mut load = vec![0.0; mesh.n_vertices()];
    if sources.is_zero() {
        return load;
    }
    for tri_idx in 0..mesh.n_triangles() {
        let area = mesh.area(tri_idx);
        let c = mesh.corners(tri_idx);
        let tag = mesh.tag(tri_idx);
        let g = mesh.basis_gradients(tri_idx);
        let tri = mesh.triangle(tri_idx);
        for (l, w) in TRI3.iter() {
            let x = quad_point(&c, l);
            let f = sources.f(x, t);
            let f0 = sources.flux(0, x, t, tag);
            let f1 = sources.flux(1, x, t, tag);
            for k in 0..3 {
                load[tri[k]] += area * w * (f * l[k] + f0 * g[k][0] + f1 * g[k][1]);
            }
        }
    }
    load
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::IDENTITY;
    use crate::geometry::{build_layout, OuterDomain};

    #[test]
    fn reference_triangle_stiffness() {
        let mesh = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], vec![1], vec![0, 1, 2], 1.0).unwrap();
        let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
        let f = CoefficientField::constant(&l, IDENTITY).unwrap();
        let (k, b) = assemble(&mesh, &f).unwrap();
        let exact = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k.get(i, j) - exact[i][j]).abs() < 1e-15);
                let m = if i == j { 1.0 / 12.0 } else { 1.0 / 24.0 };
                assert!((b.get(i, j) - m).abs() < 1e-15);
            }
        }
    }
}
