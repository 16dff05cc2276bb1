//! Experiment reports: parameters, measured tables, fitted slopes and the
//! pass/fail gates with their thresholds.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

/// A least-squares line `y ≈ slope·x + intercept`; `residual` is the RMS of
/// the fit residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub name: String,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub points: usize,
    /// Whether the fit was done on `(ln x, ln y)`.
    pub log_log: bool,
}

/// A measured value with its acceptance interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
}

impl Gate {
    pub fn new(name: impl Into<String>, value: f64, lower: Option<f64>, upper: Option<f64>) -> Self {
        let passed = value.is_finite() && lower.is_none_or(|l| value >= l) && upper.is_none_or(|u| value <= u);
        Gate {
            name: name.into(),
            value,
            lower,
            upper,
            passed,
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Gate::new(name, value, Some(lower), Some(upper))
    }

    pub fn at_least(name: impl Into<String>, value: f64, lower: f64) -> Self {
        Gate::new(name, value, Some(lower), None)
    }

    pub fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Gate::new(name, value, None, Some(upper))
    }

    /// A boolean condition recorded as `1` (holds) or `0`.
    pub fn holds(name: impl Into<String>, condition: bool) -> Self {
        Gate::new(name, if condition { 1.0 } else { 0.0 }, Some(1.0), None)
    }

    pub fn describe(&self) -> String {
        let bounds = match (self.lower, self.upper) {
            (Some(l), Some(u)) => format!("in [{l:e}, {u:e}]"),
            (Some(l), None) => format!(">= {l:e}"),
            (None, Some(u)) => format!("<= {u:e}"),
            (None, None) => "recorded".to_string(),
        };
        format!(
            "{} {}: {:e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            bounds
        )
    }
}

/// Rows of numbers under named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

/// A two-column series meant for plotting, with raw (untransformed) values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<[f64; 2]>,
}

impl Curve {
    pub fn new(name: impl Into<String>, x_label: &str, y_label: &str, points: Vec<[f64; 2]>) -> Self {
        Curve {
            name: name.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
        }
    }

    /// Samples of a fitted line at the given abscissae, in raw coordinates.
    pub fn from_fit(fit: &LineFit, x_label: &str, xs: &[f64]) -> Self {
        let points = xs
            .iter()
            .map(|&x| {
                if fit.log_log {
                    [x, (fit.intercept + fit.slope * x.ln()).exp()]
                } else {
                    [x, fit.intercept + fit.slope * x]
                }
            })
            .collect();
        Curve::new(format!("{}_fit", fit.name), x_label, "fit", points)
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.x_label, self.y_label);
        for [x, y] in &self.points {
            let _ = writeln!(s, "{x:?},{y:?}");
        }
        s
    }
}

/// Outcome of one experiment. Wall-clock runtime is kept out of the
/// serialized form so that reports are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: BTreeMap<String, Value>,
    pub tables: Vec<Table>,
    pub fits: Vec<LineFit>,
    pub curves: Vec<Curve>,
    pub gates: Vec<Gate>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        ExperimentReport {
            experiment: experiment.into(),
            parameters: BTreeMap::new(),
            tables: Vec::new(),
            fits: Vec::new(),
            curves: Vec::new(),
            gates: Vec::new(),
            runtime: Duration::ZERO,
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.parameters.insert(key.to_string(), v);
        self
    }

    pub fn gate(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn failed_gates(&self) -> Vec<&Gate> {
        self.gates.iter().filter(|g| !g.passed).collect()
    }

    pub fn find_gate(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn find_fit(&self, name: &str) -> Option<&LineFit> {
        self.fits.iter().find(|f| f.name == name)
    }

    pub fn find_table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Appends the gates, fits, tables and curves of `other`, prefixing their
    /// names.
    pub fn absorb(&mut self, prefix: &str, other: ExperimentReport) {
        let name = |n: &str| format!("{prefix}/{n}");
        for mut g in other.gates {
            g.name = name(&g.name);
            self.gates.push(g);
        }
        for mut f in other.fits {
            f.name = name(&f.name);
            self.fits.push(f);
        }
        for mut t in other.tables {
            t.name = name(&t.name);
            self.tables.push(t);
        }
        for mut c in other.curves {
            c.name = name(&c.name);
            self.curves.push(c);
        }
        self.runtime += other.runtime;
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} ({} of {} gates passed)\n",
            self.experiment,
            if self.passed() { "PASS" } else { "FAIL" },
            self.gates.iter().filter(|g| g.passed).count(),
            self.gates.len()
        );
        for f in &self.fits {
            let _ = writeln!(s, "  fit {}: slope {:.4} (residual {:.2e}, {} points)", f.name, f.slope, f.residual, f.points);
        }
        for g in &self.gates {
            let _ = writeln!(s, "  {}", g.describe());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gates() {
        assert!(Gate::within("a", 1.0, 0.0, 2.0).passed);
        assert!(!Gate::within("a", 3.0, 0.0, 2.0).passed);
        assert!(!Gate::at_most("a", f64::NAN, 2.0).passed);
        assert!(Gate::holds("b", true).passed);
        assert!(!Gate::holds("b", false).passed);
    }

    #[test]
    fn json_round_trip_skips_runtime() {
        let mut r = ExperimentReport::new("x");
        r.param("n", 3).param("grid", vec![0.1, 0.2]);
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![1.0, 0.1 + 0.2]);
        r.tables.push(t);
        r.gate(Gate::at_least("g", 1.0, 0.5));
        r.runtime = Duration::from_millis(5);
        let back = ExperimentReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.runtime, Duration::ZERO);
        assert_eq!(back.tables, r.tables);
        assert_eq!(back.parameters, r.parameters);
        assert!(back.passed());
        assert_eq!(r.tables[0].to_csv(), "a,b\n1.0,0.30000000000000004\n");
    }

    #[test]
    fn absorb_prefixes() {
        let mut a = ExperimentReport::new("a");
        let mut b = ExperimentReport::new("b");
        b.gate(Gate::holds("ok", false));
        a.absorb("sub", b);
        assert_eq!(a.gates[0].name, "sub/ok");
        assert!(!a.passed());
    }
}
