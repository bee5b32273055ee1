//! Human, JSON and CSV renderings of each report.

use std::fmt::Write as _;

use clap::ValueEnum;

use normlab_core::haar::InvarianceReport;
use normlab_core::norm_lab::{LadderReport, PowerReport, UpperBoundReport};
use normlab_core::report::{to_json, write_csv, CsvRow};
use normlab_core::sharp_constant::HilbertAudit;
use normlab_core::{ConstantReport, Result};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Json,
    Csv,
}

enum Body {
    Constant(ConstantReport),
    Extremal {
        ladder: LadderReport,
        power: Option<PowerReport>,
    },
    UpperBound(UpperBoundReport),
    Haar(InvarianceReport),
    Audit(HilbertAudit),
}

/// A finished report and whether it counts as a pass.
pub struct Rendered {
    body: Body,
    pub pass: bool,
}

#[derive(serde::Serialize)]
struct ExtremalJson<'a> {
    ladder: &'a LadderReport,
    power_method: Option<&'a PowerReport>,
    pass: bool,
}

fn row(route: impl Into<String>, value: f64, err_est: f64, deviation: f64, pass: bool) -> CsvRow {
    CsvRow {
        route: route.into(),
        value,
        err_est,
        deviation,
        pass,
    }
}

impl Rendered {
    pub fn constant(r: ConstantReport, pass: bool) -> Self {
        Self {
            body: Body::Constant(r),
            pass,
        }
    }

    pub fn extremal(ladder: LadderReport, power: Option<PowerReport>) -> Self {
        let pass = ladder.pass
            && power.as_ref().is_none_or(|pw| {
                pw.lower_bound <= ladder.constant * (1.0 + normlab_core::norm_lab::TOL_DISC)
            });
        Self {
            body: Body::Extremal { ladder, power },
            pass,
        }
    }

    pub fn upper_bound(r: UpperBoundReport) -> Self {
        let pass = r.pass;
        Self {
            body: Body::UpperBound(r),
            pass,
        }
    }

    pub fn haar(r: InvarianceReport) -> Self {
        let pass = r.pass;
        Self {
            body: Body::Haar(r),
            pass,
        }
    }

    pub fn audit(r: HilbertAudit) -> Self {
        Self {
            body: Body::Audit(r),
            // the audit reports a finding; it fails only if the oracle disagrees with both forms
            pass: true,
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.json().map(|s| s + "\n"),
            Format::Csv => self.csv(),
            Format::Human => Ok(self.human()),
        }
    }

    fn json(&self) -> Result<String> {
        match &self.body {
            Body::Constant(r) => to_json(r),
            Body::Extremal { ladder, power } => to_json(&ExtremalJson {
                ladder,
                power_method: power.as_ref(),
                pass: self.pass,
            }),
            Body::UpperBound(r) => to_json(r),
            Body::Haar(r) => to_json(r),
            Body::Audit(r) => to_json(r),
        }
    }

    fn csv(&self) -> Result<String> {
        match &self.body {
            Body::Constant(r) => r.to_csv(),
            Body::Extremal { ladder, power } => {
                let mut rows = vec![row(
                    "constant",
                    ladder.constant,
                    ladder.constant_err_est,
                    0.0,
                    true,
                )];
                rows.extend(ladder.entries.iter().map(|e| {
                    row(
                        format!("extremal_eps_{}", e.eps),
                        e.ratio,
                        0.0,
                        (e.fraction_of_constant - 1.0).abs(),
                        ladder.pass,
                    )
                }));
                if let Some(pw) = power {
                    rows.push(row(
                        "power_method",
                        pw.lower_bound,
                        0.0,
                        (pw.lower_bound / ladder.constant - 1.0).abs(),
                        self.pass,
                    ));
                }
                write_csv(&rows)
            }
            Body::UpperBound(r) => {
                let mut rows = vec![row("constant", r.constant, r.constant_err_est, 0.0, true)];
                rows.extend(r.quotients.iter().enumerate().map(|(i, &q)| {
                    row(
                        format!("random_{i}"),
                        q,
                        0.0,
                        (q / r.constant - 1.0).abs(),
                        q <= r.constant * (1.0 + r.tol_disc),
                    )
                }));
                write_csv(&rows)
            }
            Body::Haar(r) => write_csv(&[
                row(
                    "scaling",
                    r.max_scaling_deviation,
                    0.0,
                    r.max_scaling_deviation,
                    r.pass,
                ),
                row(
                    "inversion",
                    r.max_inversion_deviation,
                    0.0,
                    r.max_inversion_deviation,
                    r.pass,
                ),
            ]),
            Body::Audit(r) => write_csv(&[
                row("oracle", r.oracle, r.oracle_err_est, 0.0, true),
                row(
                    "derived",
                    r.derived,
                    0.0,
                    r.derived_deviation,
                    r.derived_consistent,
                ),
                row(
                    "printed",
                    r.printed,
                    0.0,
                    r.printed_deviation,
                    r.printed_consistent,
                ),
                row(
                    "beta_integral_iterated",
                    r.beta_integral.iterated,
                    r.beta_integral.iterated_err_est,
                    r.beta_integral.product_deviation,
                    r.beta_integral.product_matches,
                ),
            ]),
        }
    }

    fn human(&self) -> String {
        let mut s = String::new();
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        match &self.body {
            Body::Constant(r) => {
                let _ = writeln!(
                    s,
                    "p = {}  p' = {}  convention = {}",
                    r.p, r.p_conj, r.convention
                );
                for f in &r.per_factor {
                    let _ = writeln!(
                        s,
                        "  factor {:<12} n = {:<2} C_i = {:.15} ± {:.1e}",
                        f.name, f.n, f.constant, f.err_est
                    );
                }
                let _ = writeln!(
                    s,
                    "sharp constant C = {:.15} ± {:.1e}",
                    r.product_constant, r.product_err_est
                );
                for c in &r.checks {
                    let _ = writeln!(
                        s,
                        "  {:<12} {:.15}  deviation {:.2e} (tol {:.1e})  {}",
                        c.route,
                        c.value,
                        c.deviation,
                        c.tolerance,
                        verdict(c.pass)
                    );
                }
            }
            Body::Extremal { ladder, power } => {
                let _ = writeln!(
                    s,
                    "p = {}  dims = {:?}  C = {:.12}  grid L = {:.2}, N = {}",
                    ladder.p, ladder.dims, ladder.constant, ladder.half_width, ladder.points
                );
                for e in &ladder.entries {
                    let _ = writeln!(
                        s,
                        "  eps = {:<8} R = {:.12}  R/C = {:.6}",
                        e.eps, e.ratio, e.fraction_of_constant
                    );
                    if let Some(w) = &e.warning {
                        let _ = writeln!(s, "    warning: {w}");
                    }
                }
                let _ = writeln!(
                    s,
                    "monotone: {}  bounded by C: {}  final R/C {:.4} (need {})",
                    ladder.monotone,
                    ladder.bounded_by_constant,
                    ladder.final_fraction,
                    ladder.required_fraction
                );
                if let Some(pw) = power {
                    let _ = writeln!(
                        s,
                        "power method lower bound {:.12} = {:.6} C (converged: {})",
                        pw.lower_bound,
                        pw.lower_bound / ladder.constant,
                        pw.converged
                    );
                }
                let _ = writeln!(s, "{}", verdict(self.pass));
            }
            Body::UpperBound(r) => {
                let _ = writeln!(
                    s,
                    "p = {}  dims = {:?}  seed = {}  C = {:.12}  grid L = {:.2}, N = {}",
                    r.p, r.dims, r.seed, r.constant, r.half_width, r.points
                );
                let _ = writeln!(
                    s,
                    "{} functions, max quotient {:.12} = {:.6} C, {} above C(1 + {:e})",
                    r.count, r.max_quotient, r.max_fraction_of_constant, r.exceedances, r.tol_disc
                );
                let _ = writeln!(s, "{}", verdict(r.pass));
            }
            Body::Haar(r) => {
                let _ = writeln!(
                    s,
                    "seed = {}  {} dyadic + {} generic boxes",
                    r.seed, r.count, r.count
                );
                let _ = writeln!(
                    s,
                    "max deviation: scaling {:.2e}, inversion {:.2e} (tol {:.0e})",
                    r.max_scaling_deviation, r.max_inversion_deviation, r.tolerance
                );
                let _ = writeln!(
                    s,
                    "failures: dyadic {}, generic {}",
                    r.dyadic_failures, r.generic_failures
                );
                let _ = writeln!(s, "{}", verdict(r.pass));
            }
            Body::Audit(r) => {
                let _ = writeln!(s, "Hilbert kernel, dims = {:?}, p = {}", r.dims, r.p);
                let _ = writeln!(
                    s,
                    "  quadrature oracle     {:.15} ± {:.1e}",
                    r.oracle, r.oracle_err_est
                );
                let _ = writeln!(
                    s,
                    "  B^m form              {:.15}  deviation {:.2e}  {}",
                    r.derived,
                    r.derived_deviation,
                    if r.derived_consistent {
                        "oracle-consistent"
                    } else {
                        "oracle-inconsistent"
                    }
                );
                let _ = writeln!(
                    s,
                    "  printed m·ΓΓ form     {:.15}  deviation {:.2e}  {}",
                    r.printed,
                    r.printed_deviation,
                    if r.printed_consistent {
                        "oracle-consistent"
                    } else {
                        "oracle-inconsistent"
                    }
                );
                let b = &r.beta_integral;
                let _ = writeln!(
                    s,
                    "  iterated 2-D integral {:.15}  vs B^2 {:.15}  vs 2B {:.15}",
                    b.iterated, b.product_value, b.printed_value
                );
                let _ = writeln!(s, "{}", r.verdict);
            }
        }
        s
    }
}
