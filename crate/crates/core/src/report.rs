//! Serializable reports shared by the library routes and the CLI.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorEntry {
    pub name: String,
    pub n: usize,
    pub constant: f64,
    pub err_est: f64,
}

/// Outcome of comparing one independent route against the quadrature constant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub route: String,
    pub value: f64,
    /// Error estimate (quadrature routes) or standard error (Monte Carlo).
    pub err_est: f64,
    /// `|value - product_constant| / product_constant`.
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantReport {
    pub p: f64,
    pub p_conj: f64,
    pub convention: String,
    pub per_factor: Vec<FactorEntry>,
    pub product_constant: f64,
    pub product_err_est: f64,
    pub closed_form: Option<f64>,
    pub closed_form_err_est: Option<f64>,
    pub haar_l1: Option<f64>,
    pub haar_l1_err_est: Option<f64>,
    pub checks: Vec<Check>,
}

impl ConstantReport {
    pub fn relative_deviation(&self, value: f64) -> f64 {
        relative_deviation(value, self.product_constant)
    }

    /// Appends a check whose pass criterion is `deviation <= tolerance`.
    pub fn push_check(&mut self, route: &str, value: f64, err_est: f64, tolerance: f64) {
        let deviation = self.relative_deviation(value);
        self.checks.push(Check {
            route: route.to_string(),
            value,
            err_est,
            deviation,
            tolerance,
            pass: deviation <= tolerance,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    /// CSV rows: the quadrature constant first, then one row per check.
    pub fn to_csv(&self) -> Result<String> {
        let mut rows = vec![CsvRow {
            route: "quadrature".into(),
            value: self.product_constant,
            err_est: self.product_err_est,
            deviation: 0.0,
            pass: true,
        }];
        rows.extend(self.checks.iter().map(|c| CsvRow {
            route: c.route.clone(),
            value: c.value,
            err_est: c.err_est,
            deviation: c.deviation,
            pass: c.pass,
        }));
        write_csv(&rows)
    }
}

pub fn relative_deviation(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        ((value - reference) / reference).abs()
    }
}

/// Flat `(route, value, deviation)` row used by every CSV report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub route: String,
    pub value: f64,
    pub err_est: f64,
    pub deviation: f64,
    pub pass: bool,
}

pub fn write_csv(rows: &[CsvRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| Error::Evaluation(format!("csv serialization failed: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Evaluation(format!("csv serialization failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Evaluation(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::Evaluation(format!("json serialization failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ConstantReport {
        ConstantReport {
            p: 2.0,
            p_conj: 2.0,
            convention: "operator".into(),
            per_factor: vec![FactorEntry {
                name: "hilbert1".into(),
                n: 1,
                constant: 6.0,
                err_est: 1e-12,
            }],
            product_constant: 6.0,
            product_err_est: 1e-12,
            closed_form: Some(6.0),
            closed_form_err_est: Some(0.0),
            haar_l1: None,
            haar_l1_err_est: None,
            checks: vec![],
        }
    }

    #[test]
    fn json_keys() {
        let mut r = sample();
        r.push_check("haar", 6.000000001, 1e-12, 1e-8);
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in [
            "per_factor",
            "product_constant",
            "closed_form",
            "haar_l1",
            "checks",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let f = &v["per_factor"][0];
        for key in ["name", "n", "constant", "err_est"] {
            assert!(f.get(key).is_some(), "missing per_factor.{key}");
        }
        let c = &v["checks"][0];
        for key in ["route", "value", "deviation", "pass", "err_est"] {
            assert!(c.get(key).is_some(), "missing checks.{key}");
        }
        assert_eq!(c["pass"], serde_json::Value::Bool(true));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let mut r = sample();
        r.push_check("mc", 5.0, 0.1, 0.05);
        let text = r.to_csv().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "route,value,err_est,deviation,pass");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("mc,5.0,"));
        assert!(lines[2].ends_with(",false"));
    }
}
