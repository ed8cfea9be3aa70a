use gradlab_core::coefficients::*;
use gradlab_core::geometry::*;
use gradlab_core::norms::*;
use gradlab_core::solver::*;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn grid(n: usize, t: f64) -> Vec<f64> {
    (0..=n).map(|k| t * k as f64 / n as f64).collect()
}

fn square_mesh(h: f64) -> (InclusionLayout, Arc<Mesh>) {
    let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
    let m = Arc::new(build_mesh(&l, h).unwrap());
    (l, m)
}

fn mode(m: &Arc<Mesh>, n: usize, t: f64) -> SpaceTimeField {
    SpaceTimeField::from_fn(
        m.clone(),
        grid(n, t),
        |x, t| (-2.0 * PI * PI * t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin(),
        "mode",
    )
    .unwrap()
}

#[test]
fn linear_field_has_unit_gradient_everywhere() {
    let l = disk_pair(0.15, 0.05).unwrap();
    let m = Arc::new(build_mesh(&l, 1.0 / 32.0).unwrap());
    let u = SpaceTimeField::from_fn(m, vec![0.0], |x, _| x[0], "x").unwrap();
    let shrunk = ShrunkRegion::new(&l, 0.05).unwrap();
    let g = piecewise_grad_sup(&u, 3, &shrunk, (0.0, 0.0)).unwrap();
    for v in g {
        assert!((v - 1.0).abs() < 1e-12);
    }
    let c = SpaceTimeField::from_fn(u.mesh_arc().clone(), vec![0.0], |_, _| 2.5, "c").unwrap();
    assert!(piecewise_grad_sup(&c, 3, &shrunk, (0.0, 0.0)).unwrap().iter().all(|&v| v < 1e-12));
}

#[test]
fn sup_slice_of_decaying_mode_is_first_late_slice() {
    let (l, m) = square_mesh(1.0 / 32.0);
    let u = mode(&m, 20, 0.1);
    let shrunk = ShrunkRegion::new(&l, 0.1).unwrap();
    let sel = triangles_in_shrunk(&m, &shrunk);
    let v = sup_l2_slices(&u, &shrunk).unwrap();
    let k = (0..u.n_slices()).find(|&k| u.time(k) > 0.01 + 1e-12).unwrap();
    assert_eq!(v, slice_l2_sq(&m, u.slice(k), &sel).sqrt());
}

#[test]
fn sup_slice_of_one_on_shrunk_disk() {
    let l = build_layout(OuterDomain::unit_disk(), vec![], None).unwrap();
    let m = Arc::new(build_mesh(&l, 1.0 / 64.0).unwrap());
    let u = SpaceTimeField::from_fn(m, grid(4, 1.0), |_, _| 1.0, "one").unwrap();
    let shrunk = ShrunkRegion::new(&l, 0.2).unwrap();
    let v = sup_l2_slices(&u, &shrunk).unwrap();
    let exact = (PI * 0.64).sqrt();
    assert!(v <= exact && v > 0.97 * exact, "{v} vs {exact}");
    let too_big = ShrunkRegion::new(&l, 1.5).unwrap();
    assert!(sup_l2_slices(&u, &too_big).is_err());
}

#[test]
fn meyers_annulus_gradient_slope() {
    let mm: f64 = 4.0;
    let l = build_layout(OuterDomain::unit_disk(), vec![], None).unwrap();
    let m = Arc::new(build_mesh(&l, 1.0 / 128.0).unwrap());
    let u = SpaceTimeField::from_fn(m, vec![0.0], |x, _| meyers_solution(x, mm), "meyers").unwrap();
    let shrunk = ShrunkRegion::new(&l, 0.0).unwrap();
    let mut pts = Vec::new();
    for r0 in [0.4, 0.2, 0.1] {
        let mesh = u.mesh();
        let g = (0..mesh.n_triangles())
            .filter(|&t| {
                let b = mesh.barycenter(t);
                let r = b[0].hypot(b[1]);
                r > r0 && r < 0.5 && shrunk.contains(b)
            })
            .map(|t| {
                let g = u.gradient(0, t);
                g[0].hypot(g[1])
            })
            .fold(0.0, f64::max);
        pts.push((r0.ln(), g.ln()));
    }
    let slope = (pts[2].1 - pts[0].1) / (pts[2].0 - pts[0].0);
    let expect = -(1.0 - 1.0 / mm.sqrt());
    assert!((slope - expect).abs() < 0.05, "{slope}");
}

#[test]
fn holder_seminorm_self_converges() {
    let l = disk_pair(0.2, 0.1).unwrap();
    let field = piecewise_contrast_field(&l, &[scaled_identity(5.0), scaled_identity(5.0), IDENTITY]).unwrap();
    let src = SourceData::zero(5.0).unwrap();
    let g = |x: Point| x[0] - 0.5;
    let shrunk = ShrunkRegion::new(&l, 0.1).unwrap();
    let mut vals = Vec::new();
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let m = Arc::new(build_mesh(&l, h).unwrap());
        let u = solve_elliptic(&m, &field, &src, Some(&g)).unwrap();
        vals.push(holder_seminorm_grad(&u, 3, 0.25, 0, HolderOptions::default(), &shrunk).unwrap());
    }
    let rel = (vals[0] - vals[1]).abs() / vals[1];
    assert!(rel < 0.2, "{vals:?}");
}

fn contrast_instance(h: f64) -> (SpaceTimeField, SourceData, InequalityContext) {
    let l = disk_pair(0.15, 0.05).unwrap();
    let m = Arc::new(build_mesh(&l, h).unwrap());
    let field = piecewise_contrast_field(&l, &[scaled_identity(10.0), scaled_identity(10.0), IDENTITY]).unwrap();
    let src = SourceData::zero(5.0).unwrap().with_f(|x, _| 1.0 + x[1]);
    let p = ParabolicProblem::new(m, field, src.clone(), 0.1, 0.01)
        .with_initial(|x| x[0] - 0.5)
        .with_boundary(|x, _| x[0] - 0.5);
    let u = solve_parabolic(&p).unwrap();
    let ctx = InequalityContext::new(ShrunkRegion::new(&l, 0.05).unwrap(), 0.25)
        .with_cylinder(ParabolicCylinder::new([0.5, 0.5], 0.1, 0.1).unwrap());
    (u, src, ctx)
}

#[test]
fn empirical_constants_are_mesh_stable() {
    let (u1, s, ctx) = contrast_instance(1.0 / 32.0);
    let (u2, _, _) = contrast_instance(1.0 / 64.0);
    let r1 = norm_report(&u1, &s, &ctx).unwrap();
    let r2 = norm_report(&u2, &s, &ctx).unwrap();
    assert_eq!(r1.empirical_constants.len(), Inequality::ALL.len());
    for which in Inequality::ALL {
        let (a, b) = (r1.empirical_constants[&which], r2.empirical_constants[&which]);
        assert!(a.is_finite() && a > 0.0);
        assert!((a - b).abs() / b < 0.3, "{}: {a} vs {b}", which.name());
    }
    let head = NormReport::csv_header(3);
    assert_eq!(head.len(), r1.csv_row("a", 0.05, 1.0 / 32.0, 0.01).len());
    assert_eq!(&head[..4], &["id", "delta", "h", "tau"]);
}

#[test]
fn zero_problem_reports_zero_ratios() {
    let (l, m) = square_mesh(0.125);
    let u = SpaceTimeField::from_fn(m, grid(4, 0.1), |_, _| 0.0, "zero").unwrap();
    let ctx = InequalityContext::new(ShrunkRegion::new(&l, 0.1).unwrap(), 0.25);
    let src = SourceData::zero(5.0).unwrap();
    for which in [Inequality::LinftyL2, Inequality::Linfty, Inequality::DudtL2, Inequality::MainEstimate] {
        assert_eq!(inequality_ratio(which, &u, &src, &ctx).unwrap(), 0.0);
    }
    assert!(inequality_ratio(Inequality::GradL2Local, &u, &src, &ctx).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norms_grow_with_the_window(a in 0.0f64..0.05, len in 0.02f64..0.05, b_extra in 0.0f64..0.05) {
        let (_, m) = square_mesh(0.125);
        let u = SpaceTimeField::from_fn(m.clone(), grid(20, 0.2), |x, t| (x[0] - t).sin() + x[1] * t, "u").unwrap();
        let all = all_triangles(&m);
        let inner = l2_space_time(&u, &all, (a + 0.01, a + 0.01 + len)).unwrap();
        let outer = l2_space_time(&u, &all, (a, a + 0.01 + len + b_extra)).unwrap();
        prop_assert!(inner <= outer + 1e-14);
        let gi = grad_l2_space_time(&u, &all, (a + 0.01, a + 0.01 + len)).unwrap();
        let go = grad_l2_space_time(&u, &all, (a, a + 0.01 + len + b_extra)).unwrap();
        prop_assert!(gi <= go + 1e-14);
    }

    #[test]
    fn seminorm_ignores_affine_terms(c in -2.0f64..2.0, p in -3.0f64..3.0, q in -3.0f64..3.0, alpha in 0.1f64..0.9) {
        let (l, m) = square_mesh(1.0 / 12.0);
        let shrunk = ShrunkRegion::new(&l, 0.0).unwrap();
        let base = |x: Point| (2.0 * x[0]).sin() * x[1] * x[1];
        let u = SpaceTimeField::from_fn(m.clone(), vec![0.0], |x, _| base(x), "u").unwrap();
        let v = SpaceTimeField::from_fn(m, vec![0.0], |x, _| base(x) + c + p * x[0] + q * x[1], "v").unwrap();
        let opts = HolderOptions::default();
        let a = holder_seminorm_grad(&u, 1, alpha, 0, opts, &shrunk).unwrap();
        let b = holder_seminorm_grad(&v, 1, alpha, 0, opts, &shrunk).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
        let w = SpaceTimeField::from_fn(u.mesh_arc().clone(), vec![0.0], |x, _| base(x) + c, "w").unwrap();
        let gu = piecewise_grad_sup(&u, 1, &shrunk, (0.0, 0.0)).unwrap();
        let gw = piecewise_grad_sup(&w, 1, &shrunk, (0.0, 0.0)).unwrap();
        prop_assert!((gu[0] - gw[0]).abs() <= 1e-9 * (1.0 + gu[0]));
    }

    #[test]
    fn holder_exponents_are_ordered(a1 in 0.05f64..0.9, gap in 0.01f64..0.09, k in 1.0f64..4.0) {
        let l = build_layout(OuterDomain::Square { min: [0.0, 0.0], side: 0.7 }, vec![], None).unwrap();
        let m = Arc::new(build_mesh(&l, 0.7 / 12.0).unwrap());
        let u = SpaceTimeField::from_fn(m, vec![0.0], |x, _| (k * x[0]).sin() * (k * x[1]).cos(), "u").unwrap();
        let shrunk = ShrunkRegion::new(&l, 0.0).unwrap();
        let opts = HolderOptions::default();
        let s1 = holder_seminorm_grad(&u, 1, a1, 0, opts, &shrunk).unwrap();
        let s2 = holder_seminorm_grad(&u, 1, a1 + gap, 0, opts, &shrunk).unwrap();
        prop_assert!(s1 <= s2 * (1.0 + 1e-12));
    }

    #[test]
    fn sup_slice_matches_slice_norms(seed in 0u64..1000) {
        let (l, m) = square_mesh(1.0 / 16.0);
        let u = mode(&m, 10, 0.1);
        let shrunk = ShrunkRegion::new(&l, 0.0).unwrap();
        let sel = triangles_in_shrunk(&m, &shrunk);
        let best = sup_l2_slices(&u, &shrunk).unwrap();
        for j in 0..5u64 {
            let k = 1 + ((seed * 7 + j * 13) % 10) as usize;
            let single = u.window(k, k);
            let only = SpaceTimeField::new(m.clone(), vec![0.0, u.time(k)], vec![single.slice(0).to_vec(); 2], "s").unwrap();
            let a = sup_l2_slices(&only, &shrunk).unwrap();
            prop_assert!((a - slice_l2_sq(&m, u.slice(k), &sel).sqrt()).abs() < 1e-14);
            prop_assert!(a <= best + 1e-14);
        }
    }
}
