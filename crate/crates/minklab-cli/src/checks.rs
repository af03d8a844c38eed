//! Check rows: the measured-vs-expected records that go into run
//! manifests and verification tables.

use serde::Serialize;

/// How a measured value is compared against the expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// |measured - expected| <= tolerance.
    AbsDiff,
    /// measured <= expected + tolerance.
    AtMost,
    /// measured >= expected - tolerance.
    AtLeast,
}

/// One quality gate: a named measurement, its expectation, tolerance, and
/// the anchor describing which identity or law it instantiates.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    /// What the check instantiates (e.g. "round-body extinction power law").
    pub source: String,
    pub pass: bool,
}

impl CheckRow {
    pub fn new(
        name: &str,
        measured: f64,
        expected: f64,
        tolerance: f64,
        comparison: Comparison,
        source: &str,
    ) -> Self {
        let pass = match comparison {
            Comparison::AbsDiff => (measured - expected).abs() <= tolerance,
            Comparison::AtMost => measured <= expected + tolerance,
            Comparison::AtLeast => measured >= expected - tolerance,
        } && measured.is_finite();
        CheckRow {
            name: name.to_string(),
            measured,
            expected,
            tolerance,
            comparison,
            source: source.to_string(),
            pass,
        }
    }
}

/// Render rows as an aligned table.
pub fn format_table(rows: &[CheckRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<44} {:>14} {:>14} {:>9} {:<8} {:<6} source\n",
        "check", "measured", "expected", "tol", "cmp", "status"
    ));
    for r in rows {
        let cmp = match r.comparison {
            Comparison::AbsDiff => "abs-diff",
            Comparison::AtMost => "at-most",
            Comparison::AtLeast => "at-least",
        };
        out.push_str(&format!(
            "{:<44} {:>14.6e} {:>14.6e} {:>9.1e} {:<8} {:<6} {}\n",
            r.name,
            r.measured,
            r.expected,
            r.tolerance,
            cmp,
            if r.pass { "pass" } else { "FAIL" },
            r.source
        ));
    }
    out
}
