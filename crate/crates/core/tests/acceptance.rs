//! One line per acceptance criterion, each with its own time budget.
//! Run with `cargo test -p gradlab-core --test acceptance`.

use gradlab_core::experiments::{
    cylinder_family, degiorgi_triples, embedding_family, ray_fit, run_convergence, run_kernel, run_meyers,
    run_scaling, run_sweep, spread, sup_cascade, Check, ConvergenceParams, DegiorgiParams, KernelCase, KernelParams,
    MeyersParams, ScalingParams, SweepParams,
};
use gradlab_core::Result;
use std::time::{Duration, Instant};

struct Outcome {
    checks: Vec<Check>,
    notes: Vec<String>,
}

fn criterion(name: &str, budget_s: u64, body: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let res = body();
    let elapsed = start.elapsed();
    let in_time = elapsed <= Duration::from_secs(budget_s);
    let (ok, detail) = match res {
        Ok(o) => {
            let ok = o.checks.iter().all(|c| c.passed);
            let mut parts: Vec<String> = o.checks.iter().map(|c| c.to_string()).collect();
            parts.extend(o.notes);
            (ok, parts.join("; "))
        }
        Err(e) => (false, format!("error: {e}")),
    };
    let pass = ok && in_time;
    println!(
        "{} {name}: {detail}; runtime {:.2} s (budget {budget_s} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn main() {
    let mut results = Vec::new();

    results.push(criterion("meyers holder exponent", 1, || {
        let p = MeyersParams::default();
        let mut checks = Vec::new();
        for m in [2.0, 4.0, 9.0] {
            let r = ray_fit(m, p.rays)?;
            let e = r.expected();
            checks.push(Check::within(&format!("ray exponent M = {m}"), r.exponent, e - 1e-4, e + 1e-4));
        }
        Ok(Outcome { checks, notes: vec![] })
    }));

    results.push(criterion("meyers gradient blowup", 120, || {
        let p = MeyersParams { ms: vec![4.0], fem: true, ..MeyersParams::default() };
        let r = run_meyers(&p, None)?;
        Ok(Outcome { checks: r.checks().into_iter().filter(|c| c.name.starts_with("annulus")).collect(), notes: vec![] })
    }));

    results.push(criterion("distance independence sweep", 600, || {
        let r = run_sweep(&SweepParams::default(), None)?;
        Ok(Outcome { checks: r.checks(), notes: r.summary() })
    }));

    results.push(criterion("scaling exponent", 60, || {
        let r = run_scaling(&ScalingParams::default(), None)?;
        Ok(Outcome { checks: r.checks(), notes: vec![] })
    }));

    results.push(criterion("kernel bounds", 300, || {
        let p = KernelParams {
            cases: vec![KernelCase::Line, KernelCase::Constant, KernelCase::Contrast],
            ..KernelParams::default()
        };
        let r = run_kernel(&p, None)?;
        let notes = r
            .fit(KernelCase::Contrast)
            .map(|f| {
                vec![format!(
                    "contrast gradient exponent: on-axis {:.4}, free fit {:.4}",
                    f.gradient.on_axis_exponent, f.gradient.fit.exponent
                )]
            })
            .unwrap_or_default();
        Ok(Outcome { checks: r.checks(), notes })
    }));

    results.push(criterion("cylinder L2 bound", 30, || {
        let c = cylinder_family()?;
        Ok(Outcome {
            checks: vec![
                Check::at_most("lhs/rhs spread", c.spread(), 50.0),
                Check::holds("all three cases", c.cases().len() == 3),
                Check::holds("12 configurations", c.rows.len() == 12),
            ],
            notes: vec![],
        })
    }));

    let dg = DegiorgiParams::default();
    results.push(criterion("de giorgi sequence", 1, || {
        let (triples, y1) = degiorgi_triples(&dg)?;
        let worst = triples.iter().map(|t| t.max_ratio).fold(0.0, f64::max);
        Ok(Outcome {
            checks: vec![
                Check::holds("200 triples", triples.len() == 200),
                Check::at_most("y_m / (theta0 r^-m)", worst, 1.0 + 1e-9),
                Check::holds("y_1 = 1/16", y1 == 1.0 / 16.0),
            ],
            notes: vec![],
        })
    }));

    results.push(criterion("sup bound cascade", 300, || {
        let rows = sup_cascade(&dg)?;
        let mut checks: Vec<Check> =
            rows.iter().map(|r| Check::at_most(&format!("{} max u / 2k", r.name), r.bound_ratio, 1.05)).collect();
        checks.push(Check::holds("5 instances", rows.len() == 5));
        Ok(Outcome { checks, notes: vec![] })
    }));

    results.push(criterion("embedding constant", 60, || {
        let rows = embedding_family(&dg)?;
        let drift = rows.iter().map(|e| (e.coarse - e.fine).abs() / e.fine).fold(0.0, f64::max);
        Ok(Outcome {
            checks: vec![
                Check::at_most("spread", spread(rows.iter().map(|e| e.fine)), 3.0),
                Check::at_most("drift under halving", drift, 0.1),
            ],
            notes: vec![],
        })
    }));

    results.push(criterion("solver convergence", 120, || {
        let r = run_convergence(&ConvergenceParams::default(), None)?;
        Ok(Outcome { checks: r.checks(), notes: vec![] })
    }));

    let passed = results.iter().filter(|&&p| p).count();
    println!("{passed}/{} criteria passed", results.len());
}
