use gradlab_core::coefficients::*;
use gradlab_core::geometry::*;
use gradlab_core::iteration::*;
use gradlab_core::norms::ParabolicCylinder;
use gradlab_core::solver::*;
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

fn square(h: f64) -> Arc<Mesh> {
    let l = build_layout(OuterDomain::unit_square(), vec![], None).unwrap();
    Arc::new(build_mesh(&l, h).unwrap())
}

fn grid(n: usize, t: f64) -> Vec<f64> {
    (0..=n).map(|k| t * k as f64 / n as f64).collect()
}

fn heat_mode(m: &Arc<Mesh>) -> SpaceTimeField {
    SpaceTimeField::from_fn(
        m.clone(),
        grid(40, 0.2),
        |x, t| (-t).exp() * (PI * x[0]).sin() * (PI * x[1]).sin(),
        "mode",
    )
    .unwrap()
}

#[test]
fn embedding_constant_is_mesh_stable() {
    let g = GNParams::embedding(2).unwrap();
    let a = gn_check(&heat_mode(&square(1.0 / 16.0)), &g).unwrap();
    let b = gn_check(&heat_mode(&square(1.0 / 32.0)), &g).unwrap();
    assert!(a.c1_hat > 0.0 && a.c1_hat.is_finite());
    assert!((a.c1_hat - b.c1_hat).abs() / b.c1_hat < 0.1, "{} vs {}", a.c1_hat, b.c1_hat);
    let z = SpaceTimeField::from_fn(square(0.25), grid(2, 1.0), |_, _| 0.0, "0").unwrap();
    let zc = gn_check(&z, &g).unwrap();
    assert_eq!((zc.lhs, zc.rhs_factor, zc.c1_hat), (0.0, 0.0, 0.0));
    let bad = SpaceTimeField::from_fn(square(0.25), grid(2, 1.0), |_, _| 1.0, "1").unwrap();
    assert!(gn_check(&bad, &g).is_err());
}

#[test]
fn cascade_on_zero_field() {
    let m = square(1.0 / 16.0);
    let u = SpaceTimeField::from_fn(m, grid(20, 0.2), |_, _| 0.0, "0").unwrap();
    let cyl = ParabolicCylinder::new([0.5, 0.5], 0.2, 0.2).unwrap();
    let r = degiorgi_cascade(&u, &cyl, &SourceData::zero(6.0).unwrap()).unwrap();
    assert_eq!(r.k, 0.0);
    assert!(r.verified);
}

#[test]
fn cascade_bounds_heat_mode_from_both_sides() {
    let m = square(1.0 / 32.0);
    let u = heat_mode(&m);
    let cyl = ParabolicCylinder::new([0.5, 0.5], 0.2, 0.2).unwrap();
    let src = SourceData::zero(6.0).unwrap();
    let up = degiorgi_cascade(&u, &cyl, &src).unwrap();
    assert!(up.verified && up.bound_ratio() <= 1.0);
    assert_eq!(up.levels.len(), CASCADE_DEPTH + 1);
    let lo = degiorgi_cascade_lower(&u, &cyl, &src).unwrap();
    assert!(lo.verified);
    let far = ParabolicCylinder::new([0.9, 0.5], 0.2, 0.2).unwrap();
    assert!(matches!(degiorgi_cascade(&u, &far, &src), Err(gradlab_core::Error::Geometry(_))));
}

#[test]
fn one_step_constants_are_finite_below_the_explicit_level() {
    let m = square(1.0 / 32.0);
    let mut consts = Vec::new();
    for (freq, amp) in [(1.0, 1.0), (1.0, 3.0), (2.0, 1.0)] {
        let u = SpaceTimeField::from_fn(
            m.clone(),
            grid(40, 0.2),
            move |x, t| amp * (-t).exp() * (freq * PI * x[0]).sin().abs() * (PI * x[1]).sin(),
            "u",
        )
        .unwrap();
        let cyl = ParabolicCylinder::new([0.5, 0.5], 0.2, 0.2).unwrap();
        let levels = cascade_levels(&u, &cyl, 0.3 * amp, 6.0, 4).unwrap();
        for l in &levels {
            if let Some(c) = l.step_constant {
                assert!(c.is_finite() && c >= 0.0);
                consts.push(c);
            }
        }
        for w in levels.windows(2) {
            assert!(w[1].phi <= w[0].phi);
        }
    }
    assert!(!consts.is_empty());
}

#[test]
fn truncation_measure_is_nonincreasing() {
    let m = square(1.0 / 16.0);
    let u = heat_mode(&m);
    let mut last = f64::INFINITY;
    for i in 0..=20 {
        let k = -0.1 + 1.2 * i as f64 / 20.0;
        let d = level_truncate(&u, k, Sign::Plus, None).unwrap();
        assert!(d.active_measure <= last);
        assert!(d.active_measure >= 0.0 && d.active_measure <= 0.2 + 1e-12);
        last = d.active_measure;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extremal_sequence_tracks_the_bound(c in 0.5f64..10.0, b in 1.0001f64..16.0, eps in 0.1f64..2.0) {
        let p = IterationParams::new(c, b, eps).unwrap();
        let s = degiorgi_sequence(InitialValue::Theta0, &p, 60).unwrap();
        prop_assert!(s.decays);
        prop_assert!(s.ratio.iter().all(|&r| r <= 1.0 + 1e-9));
    }

    #[test]
    fn gn_relation_holds(n in 1usize..5, j in 0usize..2, extra in 1usize..3, s in 1.5f64..4.0, r in 1.5f64..4.0, t in 0.05f64..0.95) {
        let k = j + extra;
        let nf = n as f64;
        // pick q from γ so that the relation is satisfied by construction
        let lo = j as f64 / k as f64;
        let gamma = lo + t * (1.0 - lo);
        let inv_q = j as f64 / nf + gamma * (1.0 / s - k as f64 / nf) + (1.0 - gamma) / r;
        prop_assume!(inv_q > 0.0);
        if let Ok(g) = GNParams::new(n, j, k, 1.0 / inv_q, r, s) {
            prop_assert!(g.residual() <= 1e-12);
            prop_assert!((g.gamma - gamma).abs() < 1e-9);
        }
    }
}
