use gradlab_core::coefficients::*;
use gradlab_core::geometry::*;
use gradlab_core::solver::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn unit_square(h: f64) -> (InclusionLayout, Arc<Mesh>) {
    let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
    let m = Arc::new(build_mesh(&l, h).unwrap());
    (l, m)
}

// Dense Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

#[test]
fn stiffness_is_symmetric_and_kills_constants() {
    let l = disk_pair(0.15, 0.05).unwrap();
    let m = build_mesh(&l, 0.05).unwrap();
    let f = piecewise_contrast_field(&l, &[scaled_identity(10.0), [[3.0, 1.0], [1.0, 2.0]], IDENTITY]).unwrap();
    let (k, b) = assemble(&m, &f).unwrap();
    assert!(k.is_symmetric(1e-13));
    assert!(b.is_symmetric(1e-13));
    let ones = vec![1.0; m.n_vertices()];
    let k1 = k.matvec(&ones);
    assert!(k1.iter().all(|v| v.abs() < 1e-11));
    let total: f64 = b.matvec(&ones).iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn theta_step_matches_dense_oracle() {
    let l = disk_pair(0.15, 0.1).unwrap();
    let m = Arc::new(build_mesh(&l, 0.08).unwrap());
    let field = piecewise_contrast_field(&l, &[scaled_identity(10.0), scaled_identity(10.0), IDENTITY]).unwrap();
    let src = SourceData::zero(5.0).unwrap().with_f(|x, t| 1.0 + x[0] * t);
    let g = |x: Point, t: f64| x[0] - 0.5 + t * x[1];
    let p = ParabolicProblem::new(m.clone(), field.clone(), src.clone(), 0.02, 0.02)
        .with_initial(|x| (x[0] - 0.5) * x[1])
        .with_boundary(g)
        .with_theta(0.5);
    let u = solve_parabolic(&p).unwrap();

    let (k, b) = assemble(&m, &field).unwrap();
    let tau = 0.02;
    let n = m.n_vertices();
    let mut u0: Vec<f64> = m.vertices().iter().map(|&x| (x[0] - 0.5) * x[1]).collect();
    for &i in m.boundary_vertices() {
        u0[i] = g(m.vertex(i), 0.0);
    }
    let l0 = assemble_load(&m, &src, 0.0);
    let l1 = assemble_load(&m, &src, tau);
    let lhs = b.combine(1.0, &k, 0.5 * tau).to_dense();
    let rhs_op = b.combine(1.0, &k, -0.5 * tau);
    let mut rhs = rhs_op.matvec(&u0);
    for i in 0..n {
        rhs[i] += tau * 0.5 * (l0[i] + l1[i]);
    }
    let mut a = lhs.clone();
    for &i in m.boundary_vertices() {
        a[i] = vec![0.0; n];
        a[i][i] = 1.0;
        rhs[i] = g(m.vertex(i), tau);
    }
    let x = dense_solve(a, rhs);
    for i in 0..n {
        assert!((x[i] - u.slice(1)[i]).abs() < 1e-8, "node {i}: {} vs {}", x[i], u.slice(1)[i]);
    }
}

fn l2_error(m: &Mesh, u: &[f64], exact: impl Fn(Point) -> f64) -> f64 {
    let q = gradlab_core::quadrature::tri7();
    let mut s = 0.0;
    for t in 0..m.n_triangles() {
        let [a, b, c] = m.triangle(t);
        let p = m.corners(t);
        for (l, w) in q {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let uh = l[0] * u[a] + l[1] * u[b] + l[2] * u[c];
            s += w * m.area(t) * (uh - exact(x)).powi(2);
        }
    }
    s.sqrt()
}

#[test]
fn elliptic_manufactured_second_order() {
    let exact = |x: Point| (PI * x[0]).sin() * (PI * x[1]).sin();
    let mut errs = Vec::new();
    for n in [8, 16, 32] {
        let (l, m) = unit_square(1.0 / n as f64);
        let field = CoefficientField::constant(&l, IDENTITY).unwrap();
        let src = SourceData::zero(5.0).unwrap().with_f(move |x, _| 2.0 * PI * PI * exact(x));
        let u = solve_elliptic(&m, &field, &src, None).unwrap();
        errs.push(l2_error(&m, u.last(), exact));
    }
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&rate), "rate {rate}");
    }
}

#[test]
fn flux_sign_convention() {
    // -Δu = -Σ ∂_i g_i with g_i = ∂_i u, u = x₁(1-x₁)x₂(1-x₂).
    let exact = |x: Point| x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
    let (l, m) = unit_square(1.0 / 32.0);
    let field = CoefficientField::constant(&l, IDENTITY).unwrap();
    let src = SourceData::zero(5.0)
        .unwrap()
        .with_flux(0, |x, _, _| (1.0 - 2.0 * x[0]) * x[1] * (1.0 - x[1]))
        .with_flux(1, |x, _, _| x[0] * (1.0 - x[0]) * (1.0 - 2.0 * x[1]));
    let u = solve_elliptic(&m, &field, &src, None).unwrap();
    assert!(l2_error(&m, u.last(), exact) < 1e-4);
}

#[test]
fn long_time_limit_is_the_elliptic_solution() {
    let l = disk_pair(0.15, 0.05).unwrap();
    let m = Arc::new(build_mesh(&l, 1.0 / 32.0).unwrap());
    let field = piecewise_contrast_field(&l, &[scaled_identity(10.0), scaled_identity(10.0), IDENTITY]).unwrap();
    let src = SourceData::zero(5.0).unwrap().with_f(|x, _| x[1]);
    let g = |x: Point| x[0] - 0.5;
    let steady = solve_elliptic(&m, &field, &src, Some(&g)).unwrap();
    let p = ParabolicProblem::new(m.clone(), field, src, 3.0, 0.1).with_boundary(move |x, _| g(x));
    let u = solve_parabolic_strided(&p, 30).unwrap();
    let diff: f64 = u.last().iter().zip(steady.last()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn mass_norm_decays_without_sources() {
    let l = disk_pair(0.15, 0.0).unwrap();
    let m = Arc::new(build_mesh(&l, 1.0 / 32.0).unwrap());
    let field = piecewise_contrast_field(&l, &[scaled_identity(10.0), scaled_identity(10.0), IDENTITY]).unwrap();
    let p = ParabolicProblem::new(m, field, SourceData::zero(5.0).unwrap(), 0.2, 0.01)
        .with_initial(|x| (PI * x[0]).sin() * (3.0 * PI * x[1]).sin() + 0.3);
    let u = solve_parabolic(&p).unwrap();
    for k in 1..u.n_slices() {
        assert!(u.mass_norm(k) <= u.mass_norm(k - 1));
    }
}

#[test]
fn theta_outside_range_is_rejected() {
    let (l, m) = unit_square(0.25);
    let field = CoefficientField::constant(&l, IDENTITY).unwrap();
    let p = ParabolicProblem::new(m, field, SourceData::zero(5.0).unwrap(), 1.0, 0.1).with_theta(0.3);
    assert!(solve_parabolic(&p).is_err());
}
