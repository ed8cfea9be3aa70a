use gradlab_core::geometry::*;
use gradlab_core::Error;
use proptest::prelude::*;

fn check_conforming(mesh: &Mesh) {
    use std::collections::HashMap;
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    assert!(edges.values().all(|&c| c <= 2), "edge shared by three triangles");
    for (&(a, b), &c) in &edges {
        if c == 1 {
            assert!(mesh.is_boundary(a) && mesh.is_boundary(b), "hanging edge ({a}, {b})");
        }
    }
    for t in 0..mesh.n_triangles() {
        assert!(mesh.area(t) > 0.0);
    }
}

#[test]
fn structured_square_h_half() {
    let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
    let m = build_mesh(&l, 0.5).unwrap();
    assert_eq!(m.n_vertices(), 9);
    assert_eq!(m.n_triangles(), 8);
    assert_eq!(m.boundary_vertices().len(), 8);
    assert!((m.total_area() - 1.0).abs() < 1e-15);
    check_conforming(&m);
}

#[test]
fn touching_disks_share_the_tangency_vertex() {
    let l = disk_pair(0.15, 0.0).unwrap();
    let m = build_mesh(&l, 0.02).unwrap();
    let hit = m.vertices().iter().any(|v| (v[0] - 0.5).abs() < 1e-15 && (v[1] - 0.5).abs() < 1e-15);
    assert!(hit);
    check_conforming(&m);
    for t in 0..m.n_triangles() {
        assert_eq!(m.tag(t), l.classify(m.barycenter(t)).unwrap());
    }
    assert!((m.total_area() - 1.0).abs() < 1e-12);
}

#[test]
fn region_areas_approach_disk_area() {
    let l = disk_pair(0.15, 0.05).unwrap();
    let m = build_mesh(&l, 1.0 / 64.0).unwrap();
    let exact = std::f64::consts::PI * 0.15 * 0.15;
    for tag in [1, 2] {
        let a = m.region_area(tag);
        assert!((a - exact).abs() / exact < 2e-3, "{a} vs {exact}");
    }
    assert!((m.total_area() - 1.0).abs() < 1e-12);
}

#[test]
fn narrow_gap_gets_two_layers() {
    let delta = 0.002;
    let l = disk_pair(0.15, delta).unwrap();
    let m = build_mesh(&l, 1.0 / 32.0).unwrap();
    check_conforming(&m);
    // vertical line through the gap centre crosses at least two background elements
    let crossing = (0..m.n_triangles())
        .filter(|&t| m.tag(t) == 3)
        .filter(|&t| {
            let c = m.corners(t);
            let xs = c.iter().map(|p| p[0]);
            let (lo, hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            let ys = c.iter().map(|p| p[1]);
            let (ylo, yhi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
            ylo <= 0.5 && yhi >= 0.5 && hi > 0.5 - delta / 2.0 && lo < 0.5 + delta / 2.0
        })
        .count();
    assert!(crossing >= 2, "{crossing}");
    let max_edge = (0..m.n_triangles())
        .filter(|&t| {
            let b = m.barycenter(t);
            (b[0] - 0.5).abs() < delta && (b[1] - 0.5).abs() < delta
        })
        .map(|t| m.longest_edge(t))
        .fold(0.0, f64::max);
    assert!(max_edge < delta, "{max_edge}");
}

#[test]
fn budget_exhaustion_is_reported() {
    let l = disk_pair(0.15, 1e-4).unwrap();
    let opts = MeshOptions { vertex_budget: 2000, ..MeshOptions::new(0.02) };
    assert!(matches!(build_mesh_with(&l, &opts), Err(Error::InfeasibleResolution(_))));
}

#[test]
fn disk_domain_mesh() {
    let l = build_layout(OuterDomain::unit_disk(), vec![], None).unwrap();
    let m = build_mesh(&l, 0.05).unwrap();
    check_conforming(&m);
    for &b in m.boundary_vertices() {
        let v = m.vertex(b);
        assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-12);
    }
    assert!((m.total_area() - std::f64::consts::PI).abs() < 0.01);
    let worst = (0..m.n_triangles()).map(|t| m.longest_edge(t)).fold(0.0, f64::max);
    assert!(worst < 2.0 * 0.05, "{worst}");
}

#[test]
fn padded_mesh_tags_exterior() {
    let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
    let opts = MeshOptions {
        padding: Some(Padding { half_width: 2.0, growth: 0.3, max_size: 0.25 }),
        ..MeshOptions::new(1.0 / 16.0)
    };
    let m = build_mesh_with(&l, &opts).unwrap();
    check_conforming(&m);
    assert!((m.total_area() - 16.0).abs() < 1e-9);
    assert!((m.region_area(1) - 1.0).abs() < 1e-9);
    assert!((m.region_area(EXTERIOR) - 15.0).abs() < 1e-9);
}

#[test]
fn mesh_text_round_trip() {
    let l = disk_pair(0.2, 0.05).unwrap();
    let m = build_mesh(&l, 0.05).unwrap();
    let mut buf = Vec::new();
    m.write_text(&mut buf).unwrap();
    let back = Mesh::read_text(&buf[..]).unwrap();
    assert_eq!(back.vertices(), m.vertices());
    assert_eq!(back.triangles(), m.triangles());
    assert_eq!(back.tags(), m.tags());
    assert_eq!(back.boundary_vertices(), m.boundary_vertices());
}

#[test]
fn locate_and_interpolate_linear() {
    let l = disk_pair(0.2, 0.0).unwrap();
    let m = build_mesh(&l, 0.05).unwrap();
    let vals: Vec<f64> = m.vertices().iter().map(|v| 2.0 * v[0] - v[1] + 0.5).collect();
    for &x in &[[0.1, 0.2], [0.5, 0.5], [0.99, 0.01], [0.3, 0.7]] {
        let v = m.interpolate(&vals, x).unwrap();
        assert!((v - (2.0 * x[0] - x[1] + 0.5)).abs() < 1e-12);
    }
    assert!(m.locate([1.5, 0.5]).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classify_is_locally_constant(seed in 0u64..1000, delta in 0.0f64..0.1) {
        use rand::{Rng, SeedableRng};
        let l = disk_pair(0.15, delta).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..400 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let near = l.inclusions.iter().any(|i| i.shape.signed_distance(x).abs() < 1e-13);
            if near { continue; }
            let a: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let y = [x[0] + 1e-14 * a.cos(), x[1] + 1e-14 * a.sin()];
            if !l.outer.contains_closed(y) { continue; }
            prop_assert_eq!(l.classify(x).unwrap(), l.classify(y).unwrap());
        }
    }

    #[test]
    fn gap_is_exact(r1 in 0.05f64..0.2, r2 in 0.05f64..0.2, delta in 0.0f64..0.1, ang in 0.0f64..3.1) {
        let c = [0.5, 0.5];
        let inc = vec![
            Inclusion::new(Ellipse::circle([c[0] - 0.2 * ang.cos(), c[1] - 0.2 * ang.sin()], r1), 1),
            Inclusion::new(Ellipse::circle([c[0] + 0.2 * ang.cos(), c[1] + 0.2 * ang.sin()], r2), 2),
        ];
        let outer = OuterDomain::Square { min: [-1.0, -1.0], side: 3.0 };
        let l = build_layout(outer, inc, Some(GapPair { first: 0, second: 1, delta })).unwrap();
        prop_assert!((l.pair_gap(0, 1).0 - delta).abs() <= 1e-12);
    }

    #[test]
    fn graded_meshes_are_conforming(delta in 0.0f64..0.06, h in 0.03f64..0.08) {
        let l = disk_pair(0.15, delta).unwrap();
        let m = build_mesh(&l, h).unwrap();
        check_conforming(&m);
        prop_assert!((m.total_area() - 1.0).abs() < 1e-12);
        for t in 0..m.n_triangles() {
            prop_assert_eq!(m.tag(t), l.classify(m.barycenter(t)).unwrap());
        }
    }
}
