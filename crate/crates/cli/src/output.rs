//! Report documents and their text and JSON renderings.

use std::io;

use serde::Serialize;
use serde_json::ser::Formatter;
use wronski::verify::{EquivalenceResult, SkippedPoint, VerificationReport};

/// Writes every float in scientific notation with 17 significant digits so
/// that equal values always serialize to equal bytes.
struct FixedFloats;

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as one line of JSON with fixed float formatting.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value
        .serialize(&mut ser)
        .expect("report types always serialize");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[derive(Debug, Serialize)]
pub struct BellTerm {
    pub word: String,
    pub indices: Vec<usize>,
    pub coefficient: i64,
}

#[derive(Debug, Serialize)]
pub struct BellOutput {
    pub task: &'static str,
    pub m: usize,
    pub expansion: String,
    pub word_count: usize,
    pub coefficient_sum: i64,
    pub terms: Vec<BellTerm>,
}

#[derive(Debug, Serialize)]
pub struct WronskianRow {
    pub k: String,
    pub direct: Vec<Option<f64>>,
    /// Bell-polynomial route with the configured coefficients, if any.
    pub bell: Option<Vec<Option<f64>>>,
}

#[derive(Debug, Serialize)]
pub struct WronskianOutput {
    pub task: &'static str,
    pub n: usize,
    pub points: Vec<f64>,
    pub values: Vec<WronskianRow>,
    pub skipped: Vec<SkippedPoint>,
}

#[derive(Debug, Serialize)]
pub struct ReconstructOutput {
    pub task: &'static str,
    pub n: usize,
    pub points: Vec<f64>,
    /// `a_1..a_n` per point; `None` where the point was skipped.
    pub coefficients: Vec<Option<Vec<f64>>>,
    pub skipped: Vec<SkippedPoint>,
}

#[derive(Debug, Serialize)]
pub struct VerifyOutput {
    pub task: &'static str,
    pub n: usize,
    pub passed: bool,
    pub reports: Vec<VerificationReport>,
}

#[derive(Debug, Serialize)]
pub struct EquivOutput {
    pub task: &'static str,
    pub n: usize,
    pub tolerance: f64,
    pub result: EquivalenceResult,
}

#[derive(Debug, Serialize)]
pub struct ErrorOutput {
    pub task: &'static str,
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.12e}"))
}

pub fn bell_text(out: &BellOutput) -> String {
    format!("{}\n", out.expansion)
}

pub fn wronskian_text(out: &WronskianOutput) -> String {
    let mut s = format!("wronskian: n = {}, {} points\n", out.n, out.points.len());
    for row in &out.values {
        s.push_str(&format!("W^{}\n", row.k));
        for (i, t) in out.points.iter().enumerate() {
            s.push_str(&format!("  t = {t:<22} direct = {}", opt(row.direct[i])));
            if let Some(bell) = &row.bell {
                s.push_str(&format!("  bell = {}", opt(bell[i])));
            }
            s.push('\n');
        }
    }
    for p in &out.skipped {
        s.push_str(&format!("skipped t = {}: {}\n", p.t, p.reason));
    }
    s
}

pub fn reconstruct_text(out: &ReconstructOutput) -> String {
    let mut s = format!("reconstruct: n = {}, {} points\n", out.n, out.points.len());
    for (t, a) in out.points.iter().zip(&out.coefficients) {
        if let Some(a) = a {
            let parts: Vec<String> = a.iter().map(|v| format!("{v:.12e}")).collect();
            s.push_str(&format!("  t = {t:<22} a = ({})\n", parts.join(", ")));
        }
    }
    for p in &out.skipped {
        s.push_str(&format!("skipped t = {}: {}\n", p.t, p.reason));
    }
    s
}

pub fn verify_text(out: &VerifyOutput) -> String {
    let mut s = format!("verify: n = {}\n", out.n);
    for r in &out.reports {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!(
            "{verdict}  {:<30} max rel {}  (tol {}, {} evaluated, {} skipped)",
            r.identity,
            sci(r.max_rel),
            sci(r.tolerance),
            r.evaluated_points,
            r.skipped.len()
        ));
        if let Some(w) = &r.worst {
            s.push_str(&format!("  worst at t = {} [{}]", w.t, w.case));
        }
        s.push('\n');
    }
    let passed = out.reports.iter().filter(|r| r.passed).count();
    s.push_str(&format!(
        "result: {} ({passed}/{} identities passed)\n",
        if out.passed { "PASS" } else { "FAIL" },
        out.reports.len()
    ));
    s
}

pub fn equiv_text(out: &EquivOutput) -> String {
    let r = &out.result;
    let mut s = format!(
        "equiv: n = {}, {} usable points, {} skipped\n",
        out.n,
        r.usable_points.len(),
        r.skipped.len()
    );
    s.push_str(&format!("max Phi mismatch: {}\n", sci(r.max_phi_mismatch)));
    if let Some(w) = &r.witness {
        s.push_str(&format!(
            "not equivalent: Phi^[{}] mismatch at t = {}: {} (f) vs {} (g)\n",
            w.j, w.t, w.phi_f, w.phi_g
        ));
    }
    if let Some(a) = &r.matrix {
        let n = out.n;
        s.push_str("equivalent: f = A g with A =\n");
        for row in a.chunks(n) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>22.15}")).collect();
            s.push_str(&format!("  [{}]\n", cells.join(", ")));
        }
        if let Some(v) = r.max_validation_residual {
            s.push_str(&format!("max validation residual: {}\n", sci(v)));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(to_json(&0.1), "1.0000000000000001e-1");
        assert_eq!(to_json(&-3.0), "-3.0000000000000000e0");
        assert_eq!(to_json(&vec![f64::NAN]), "[null]");
        let back: f64 = serde_json::from_str(&to_json(&(1.0 / 3.0))).unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }
}
