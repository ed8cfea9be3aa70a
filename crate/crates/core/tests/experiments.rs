use gradlab_core::experiments::*;
use gradlab_core::Error;
use proptest::prelude::*;

fn coarse_sweep() -> SweepParams {
    SweepParams {
        deltas: vec![0.1, 0.05, 0.0],
        h: 1.0 / 32.0,
        time_step: 0.05,
        ..SweepParams::default()
    }
}

#[test]
fn unknown_key_is_rejected() {
    let e = ExperimentConfig::parse("experiment = sweep\nmesh.hh = 0.1\n").unwrap_err();
    assert!(matches!(e, Error::Config(_)), "{e}");
    assert!(ExperimentConfig::parse("mesh.h = 0.1\n").is_err());
    assert!(ExperimentConfig::parse("experiment = sweep\nmesh.h = 0.1\nmesh.h = 0.2\n").is_err());
}

#[test]
fn sections_prefix_keys() {
    let c = ExperimentConfig::parse("experiment = sweep\n# coarse\n[mesh]\nh = 1/32\n[time]\nstep = 0.05\n").unwrap();
    assert_eq!(c.num("mesh.h").unwrap(), 1.0 / 32.0);
    assert_eq!(c.num("time.step").unwrap(), 0.05);
}

#[test]
fn sweep_needs_two_inclusions() {
    let mut c = ExperimentConfig::defaults(Experiment::Sweep);
    c.set("field.contrast", "[10]").unwrap();
    assert!(matches!(SweepParams::from_config(&c), Err(Error::Config(_))));
}

#[test]
fn sweep_gaps_must_end_touching() {
    let mut c = ExperimentConfig::defaults(Experiment::Sweep);
    c.set("geometry.deltas", "[0.2, 0.1]").unwrap();
    assert!(SweepParams::from_config(&c).is_err());
    c.set("geometry.deltas", "[0.1, 0, 0.2]").unwrap();
    let p = SweepParams::from_config(&c).unwrap();
    assert_eq!(p.deltas, vec![0.2, 0.1, 0.0]);
}

#[test]
fn subcommand_mismatch_shows_in_experiment() {
    let c = ExperimentConfig::parse("experiment = meyers\n").unwrap();
    assert_eq!(c.experiment(), Experiment::Meyers);
    assert!(SweepParams::from_config(&c).is_err());
}

#[test]
fn no_contrast_sweep_is_flat() {
    let p = SweepParams { contrast: [1.0, 1.0], ..coarse_sweep() };
    let r = run_sweep(&p, None).unwrap();
    for row in &r.rows {
        for &g in &row.report.piecewise_grad_sup {
            assert!((g - 1.0).abs() < 0.01, "delta {} grad {g}", row.delta);
        }
    }
    assert!(r.plateau() < 1.01);
}

#[test]
fn sweep_output_is_byte_identical() {
    let p = coarse_sweep();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_sweep(&p, Some(a.path())).unwrap();
    run_sweep(&p, Some(b.path())).unwrap();
    for f in ["sweep.csv", "sweep.svg", "sweep_summary.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn aborted_sink_ends_with_marker() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/out.csv");
    let header: Vec<String> = ["delta", "value", "extra"].iter().map(|s| s.to_string()).collect();
    let mut sink = CsvSink::create(&path, &header).unwrap();
    sink.row(&[fmt(0.1), fmt(2.0), fmt(3.0)]).unwrap();
    assert!(sink.row(&[fmt(0.1)]).is_err());
    sink.abort("solver stalled").unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let last = text.lines().last().unwrap();
    assert!(last.starts_with(ABORT_MARKER), "{last}");
    assert!(last.contains("solver stalled"));
    let cols = read_columns(&path, &["delta".into(), "value".into()]).unwrap();
    assert_eq!(cols[0].len(), 1);
}

#[test]
fn plot_rejects_missing_column_and_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    std::fs::write(&csv, "x,y\n1,2\n2,4\n").unwrap();
    let svg = dir.path().join("t.svg");
    assert!(matches!(emit_plot(&csv, &PlotSpec::new("x", &["z"]), &svg), Err(Error::Csv(_))));
    assert!(!svg.exists());

    let empty = dir.path().join("e.csv");
    std::fs::write(&empty, "x,y\n").unwrap();
    assert!(emit_plot(&empty, &PlotSpec::new("x", &["y"]), &svg).is_err());
    assert!(!svg.exists());

    emit_plot(&csv, &PlotSpec::new("x", &["y"]).log_log().with_slope(), &svg).unwrap();
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert!(text.contains("slope 1.0000"), "{text}");
}

#[test]
fn power_law_slopes() {
    let pts: Vec<(f64, f64)> = (1..6).map(|k| (k as f64, 3.0 * (k as f64).powf(-1.5))).collect();
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    assert!((fit_slope(&logs).unwrap() + 1.5).abs() < 1e-12);
    assert_eq!(spread([2.0, 8.0, 4.0]), 4.0);
}

#[test]
fn ray_fit_matches_closed_form_exponent() {
    let r = ray_fit(4.0, 8).unwrap();
    assert!((r.exponent - 0.5).abs() < 1e-6, "{}", r.exponent);
    assert!(r.ray_deviation < 1e-6);
    let r = ray_fit(1.0 + 1e-6, 8).unwrap();
    assert!((r.exponent - 1.0).abs() < 1e-5, "{}", r.exponent);
}

#[test]
fn annulus_fit_needs_enough_annuli() {
    let p = MeyersParams { h: 1.0 / 16.0, r_min_factor: 4.0, min_annuli: 8, ..MeyersParams::default() };
    assert!(matches!(annulus_fit(4.0, &p), Err(Error::EmptyWindow(_))));
}

#[test]
fn linear_scaling_ratio_is_exact() {
    let p = ScalingParams { gaps: vec![], ..ScalingParams::default() };
    let r = run_scaling(&p, None).unwrap();
    assert!(r.linear_deviation() < 1e-9);
    assert!(r.fem.is_empty());
    assert!(r.pair.spread() <= 4.0);
}

#[test]
fn degiorgi_equality_case_is_exact() {
    let (rows, y1) = degiorgi_triples(&DegiorgiParams { triples: 10, ..DegiorgiParams::default() }).unwrap();
    assert_eq!(y1, 1.0 / 16.0);
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().all(|t| t.max_ratio <= 1.0 + 1e-9));
}

#[test]
fn degiorgi_draws_depend_only_on_seed() {
    let p = DegiorgiParams { triples: 5, ..DegiorgiParams::default() };
    let a = degiorgi_triples(&p).unwrap().0;
    let b = degiorgi_triples(&p).unwrap().0;
    assert_eq!(a, b);
    let c = degiorgi_triples(&DegiorgiParams { seed: 7, ..p }).unwrap().0;
    assert_ne!(a, c);
}

#[test]
fn kernel_fit_summaries_name_their_fields() {
    let c = cylinder_family().unwrap();
    assert_eq!(c.rows.len(), 12);
    assert_eq!(c.cases().len(), 3);
    let p = KernelParams { cases: vec![KernelCase::Line], ..KernelParams::default() };
    let r = run_kernel(&p, None).unwrap();
    let s = r.fit(KernelCase::Line).unwrap().value.summary();
    for key in ["\"C_hat\"", "\"c_hat\"", "\"exponent\"", "\"residual\"", "\"window\""] {
        assert!(s.contains(key), "{s}");
    }
}

#[test]
fn run_writes_files_under_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::defaults(Experiment::Meyers);
    c.set("meyers.fem", "0").unwrap();
    let report = run(&c, Some(dir.path())).unwrap();
    assert!(report.passed());
    assert!(!report.files.is_empty());
    assert!(report.files.iter().all(|f| f.starts_with(dir.path()) && f.exists()));
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![(1e-6f64..1e6), (-1e3f64..1e3), Just(0.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_config_round_trips(
        h in 1e-4f64..1.0,
        deltas in prop::collection::vec(number(), 1..6),
        seed in 0u64..1000,
        dir in "[a-z][a-z0-9_/]{0,12}",
    ) {
        let mut c = ExperimentConfig::defaults(Experiment::Sweep);
        c.set("mesh.h", &h.to_string()).unwrap();
        let list: Vec<String> = deltas.iter().map(|d| d.to_string()).collect();
        c.set("geometry.deltas", &format!("[{}]", list.join(", "))).unwrap();
        c.set("seed", &seed.to_string()).unwrap();
        c.set("output.dir", &dir).unwrap();
        let text = c.to_canonical();
        let back = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(back.to_canonical(), text);
        prop_assert_eq!(back.num("mesh.h").unwrap(), h);
        prop_assert_eq!(back.nums("geometry.deltas").unwrap(), &deltas[..]);
        prop_assert_eq!(back.seed().unwrap(), seed);
    }

    #[test]
    fn fraction_values_parse_as_quotients(a in 1u32..1000, b in 1u32..1000) {
        let mut c = ExperimentConfig::defaults(Experiment::Convergence);
        c.set("mesh.h", &format!("{a}/{b}")).unwrap();
        prop_assert_eq!(c.num("mesh.h").unwrap(), a as f64 / b as f64);
    }

    #[test]
    fn spread_is_scale_free(v in prop::collection::vec(0.1f64..100.0, 1..8), c in 0.01f64..100.0) {
        let a = spread(v.iter().copied());
        let b = spread(v.iter().map(|x| c * x));
        prop_assert!(a >= 1.0);
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }
}
