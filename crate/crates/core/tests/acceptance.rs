//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use normlab_core::haar::{build_h, h_l1_norm, haar_measure, invert_box, scale_box, HaarBox};
use normlab_core::norm_lab::{
    extremal_ladder, power_method_lower_bound, random_upper_bound_check, LogGrid,
};
use normlab_core::report::to_json;
use normlab_core::sharp_constant::{
    audit_hilbert, discrepancy_report, factor_constant, mc_constant, product_constant,
};
use normlab_core::specfun::gamma;
use normlab_core::{FactorKernel, LebesgueExponent, ProductKernel, QuadratureSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn lp(p: f64) -> LebesgueExponent {
    LebesgueExponent::new(p).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn closed_form_reproduction() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut worst: f64 = 0.0;
    for n in 1..=3usize {
        for p in [1.5, 2.0, 3.0] {
            let e = lp(p);
            let t = Instant::now();
            let q = factor_constant(
                &FactorKernel::hilbert(n).map_err(|e| e.to_string())?,
                e,
                &spec,
            )
            .map_err(|e| e.to_string())?;
            let secs = t.elapsed().as_secs_f64();
            let nf = n as f64;
            let expected = 2.0 * PI.powf(nf / 2.0) / (gamma(nf / 2.0).unwrap() * nf)
                * gamma(1.0 / p).unwrap()
                * gamma(1.0 / e.conj()).unwrap();
            let d = rel(q.value, expected);
            worst = worst.max(d);
            ensure(
                d <= 1e-8,
                format!("n={n} p={p}: {} vs {expected} (rel {d:e})", q.value),
            )?;
            ensure(secs < 1.0, format!("n={n} p={p} took {secs:.2}s"))?;
        }
    }
    Ok(format!("9 cases, worst rel deviation {worst:.2e}"))
}

fn route_agreement() -> Outcome {
    let spec = QuadratureSpec::default();
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for family in ["hilbert", "hardy"] {
        for m in 1..=3usize {
            let dims: Vec<usize> = (1..=m).collect();
            let kernel = match family {
                "hilbert" => ProductKernel::hilbert(&dims),
                _ => ProductKernel::hardy(&dims),
            }
            .map_err(|e| e.to_string())?;
            for p in [1.5, 2.0, 3.0] {
                let c = product_constant(&kernel, lp(p), &spec).map_err(|e| e.to_string())?;
                let h = build_h(&kernel, lp(p)).map_err(|e| e.to_string())?;
                let l1 = h_l1_norm(&h, &spec).map_err(|e| e.to_string())?;
                let d = rel(l1.value, c.product_constant);
                worst = worst.max(d);
                ensure(
                    d <= 1e-8,
                    format!(
                        "{family} dims={dims:?} p={p}: haar {} vs {} (rel {d:e})",
                        l1.value, c.product_constant
                    ),
                )?;
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 10.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "18 cases, worst rel deviation {worst:.2e}, {secs:.2}s"
    ))
}

fn hilbert_audit() -> Outcome {
    let spec = QuadratureSpec::default();
    let d = discrepancy_report(lp(2.0), &spec).map_err(|e| e.to_string())?;
    let pi2 = PI * PI;
    let oracle_dev = rel(d.iterated, pi2);
    ensure(
        oracle_dev <= 1e-6,
        format!("2-D oracle {} vs pi^2 (rel {oracle_dev:e})", d.iterated),
    )?;
    let printed_dev = rel(d.iterated, 2.0 * PI);
    ensure(
        printed_dev > 0.5,
        format!("printed 2B deviates only {printed_dev}"),
    )?;
    ensure(
        !d.printed_matches && d.product_matches,
        "discrepancy flags wrong".into(),
    )?;
    let audit = audit_hilbert(&[1, 1], lp(2.0), &spec).map_err(|e| e.to_string())?;
    ensure(
        !audit.printed_consistent && audit.derived_consistent,
        format!("audit verdict: {}", audit.verdict),
    )?;
    Ok(format!(
        "oracle {:.10} (rel {oracle_dev:.1e} to pi^2), printed 2pi off by {:.0}%; printed m-factor flagged",
        d.iterated,
        100.0 * printed_dev
    ))
}

fn hardy_oracle() -> Outcome {
    let spec = QuadratureSpec::default();
    for p in [1.25, 2.0, 4.0] {
        let e = lp(p);
        let q = factor_constant(&FactorKernel::hardy(1).unwrap(), e, &spec)
            .map_err(|e| e.to_string())?;
        let expected = 2.0 * e.conj();
        ensure(
            (q.value - expected).abs() <= 1e-10,
            format!("p={p}: {} vs {expected}", q.value),
        )?;
    }
    Ok("2p' reproduced for p in {1.25, 2, 4}".into())
}

fn sharpness_from_below() -> Outcome {
    let spec = QuadratureSpec::default();
    let t = Instant::now();
    let eps = [0.5, 0.2, 0.1, 0.05];
    let mut worst: f64 = f64::INFINITY;
    for m in 1..=2usize {
        let kernel = ProductKernel::hilbert(&vec![1; m]).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let rep = extremal_ladder(&kernel, lp(p), &eps, LogGrid::default().spacing(), &spec)
                .map_err(|e| e.to_string())?;
            worst = worst.min(rep.final_fraction);
            ensure(
                rep.pass,
                format!(
                    "m={m} p={p}: monotone={} bounded={} final fraction {:.4}",
                    rep.monotone, rep.bounded_by_constant, rep.final_fraction
                ),
            )?;
        }
    }
    let kernel = ProductKernel::hilbert(&[1]).unwrap();
    let c = 2.0 * PI;
    let pw = power_method_lower_bound(&kernel, lp(2.0), &LogGrid::default(), 500, 0)
        .map_err(|e| e.to_string())?;
    ensure(
        pw.lower_bound >= 0.98 * c && pw.lower_bound <= c * 1.001,
        format!("power method {} vs C {c}", pw.lower_bound),
    )?;
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 60.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "ladders monotone, worst R(0.05)/C = {worst:.4}; power method {:.4}C; {secs:.1}s",
        pw.lower_bound / c
    ))
}

fn upper_bound() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for (m, grid) in [
        (1usize, LogGrid::default()),
        (2, LogGrid::new(30.0, 401).unwrap()),
    ] {
        let kernel = ProductKernel::hilbert(&vec![1; m]).unwrap();
        let rep = random_upper_bound_check(&kernel, lp(2.0), &grid, 2024, 100)
            .map_err(|e| e.to_string())?;
        worst = worst.max(rep.max_fraction_of_constant);
        ensure(
            rep.pass && rep.quotients.len() == 100,
            format!(
                "m={m}: {} exceedances, max {:.6}C",
                rep.exceedances, rep.max_fraction_of_constant
            ),
        )?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1}s"))?;
    Ok(format!("200 quotients, max {worst:.4}C; {secs:.1}s"))
}

fn haar_suite() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..100 {
        let m = rng.gen_range(1..=3);
        // dyadic endpoints and scalings keep every ratio exactly representable
        let dy = |rng: &mut ChaCha8Rng| 2f64.powi(rng.gen_range(-20..20));
        let intervals: Vec<(f64, f64)> = (0..m)
            .map(|_| {
                let c = dy(&mut rng) * rng.gen_range(1..8) as f64;
                (c, c * 2f64.powi(rng.gen_range(1..30)))
            })
            .collect();
        let b = HaarBox::new(intervals).map_err(|e| e.to_string())?;
        let s: Vec<f64> = (0..m).map(|_| dy(&mut rng)).collect();
        let mu = haar_measure(&b);
        let scaled = haar_measure(&scale_box(&b, &s).map_err(|e| e.to_string())?);
        ensure(scaled == mu, format!("box {i}: scaled {scaled} vs {mu}"))?;
        let inv = haar_measure(&invert_box(&b));
        ensure(
            rel(inv, mu) <= 1e-13,
            format!("box {i}: inverted {inv} vs {mu}"),
        )?;
        // generic real boxes, up to rounding of the logarithm
        let g = HaarBox::new(
            (0..m)
                .map(|_| {
                    let c = rng.gen_range(1e-3..10.0);
                    (c, c + rng.gen_range(1e-2..100.0))
                })
                .collect(),
        )
        .unwrap();
        let s: Vec<f64> = (0..m).map(|_| rng.gen_range(1e-3..1e3)).collect();
        let mu = haar_measure(&g);
        ensure(
            rel(haar_measure(&scale_box(&g, &s).unwrap()), mu) <= 1e-12,
            format!("box {i}: scaling"),
        )?;
        ensure(
            rel(haar_measure(&invert_box(&g)), mu) <= 1e-12,
            format!("box {i}: inversion"),
        )?;
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 1.0, format!("took {secs:.2}s"))?;
    Ok(format!(
        "100 dyadic + 100 generic boxes invariant; {secs:.3}s"
    ))
}

fn monte_carlo() -> Outcome {
    let spec = QuadratureSpec::default();
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 1..=2usize {
        let k = FactorKernel::hilbert(n).unwrap();
        let c = factor_constant(&k, lp(2.0), &spec)
            .map_err(|e| e.to_string())?
            .value;
        let units: Vec<Vec<f64>> = match n {
            1 => vec![vec![1.0], vec![-1.0]],
            _ => vec![vec![1.0, 0.0], vec![0.6, -0.8]],
        };
        for (j, e) in units.iter().enumerate() {
            let est = mc_constant(&k, lp(2.0), e, 100 + j as u64, 1_000_000)
                .map_err(|e| e.to_string())?;
            let z = (est.estimate - c).abs() / est.std_err;
            worst = worst.max(z);
            ensure(
                z <= 3.0,
                format!(
                    "n={n} e={e:?}: {} ± {} vs {c} ({z:.2} se)",
                    est.estimate, est.std_err
                ),
            )?;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1}s"))?;
    Ok(format!(
        "4 estimates, worst {worst:.2} standard errors; {secs:.1}s"
    ))
}

fn determinism() -> Outcome {
    let kernel = ProductKernel::hilbert(&[1]).unwrap();
    let run = || {
        random_upper_bound_check(&kernel, lp(2.0), &LogGrid::default(), 7, 100)
            .and_then(|r| to_json(&r))
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    ensure(a == b, "two seeded runs serialized differently".into())?;
    Ok(format!(
        "identical {}-byte reports (binary check lives in the cli tests)",
        a.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 closed-form reproduction", closed_form_reproduction),
        ("2 route agreement", route_agreement),
        ("3 hilbert audit", hilbert_audit),
        ("4 hardy oracle", hardy_oracle),
        ("5 sharpness from below", sharpness_from_below),
        ("6 upper bound", upper_bound),
        ("7 haar invariance", haar_suite),
        ("8 monte carlo", monte_carlo),
        ("9 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
