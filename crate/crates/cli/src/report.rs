//! JSON report and CSV trace emission.
//!
//! The JSON writer is hand-rolled so every float is printed with 17
//! significant digits — byte-stable across runs and lossless to reparse.

use itersolve::{IterationTrace, SolveReport};

use crate::io::format_f64;

fn push_array(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format_f64(*v));
    }
    out.push(']');
}

/// Render the report as a JSON object.
pub fn report_to_json(report: &SolveReport) -> String {
    let mut out = String::with_capacity(1024);
    out.push_str("{\n");
    out.push_str(&format!("  \"mode\": \"{}\",\n", report.mode));
    out.push_str(&format!("  \"n\": {},\n", report.dim()));
    out.push_str(&format!("  \"w\": {},\n", format_f64(report.w)));
    out.push_str(&format!("  \"N\": {},\n", report.horizon));
    out.push_str(&format!("  \"M\": {},\n", report.steps_requested));
    out.push_str("  \"gain\": ");
    push_array(&mut out, report.gain.k.entries());
    out.push_str(",\n  \"x_tilde\": ");
    push_array(&mut out, report.x_tilde.entries());
    out.push_str(",\n  \"x\": ");
    push_array(&mut out, report.x.entries());
    out.push_str(",\n  \"residual\": ");
    push_array(&mut out, report.residual.entries());
    out.push_str(&format!(",\n  \"residual_norm\": {},\n", format_f64(report.residual_norm)));
    out.push_str(&format!("  \"steps_used\": {},\n", report.steps_used));
    out.push_str("  \"diagnostics\": {");
    for (i, (key, value)) in report.diagnostics.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("\n    \"{key}\": {}", format_f64(*value)));
    }
    if !report.diagnostics.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("}\n}\n");
    out
}

/// Render the iterate trace as CSV: step, iterate components, and the error
/// norm column when the trace carries one.
pub fn trace_to_csv(trace: &IterationTrace) -> String {
    let n = trace.iterates[0].dim();
    let mut out = String::new();
    out.push_str("step");
    for i in 1..=n {
        out.push_str(&format!(",x_tilde_{i}"));
    }
    let with_errors = trace.error_norms.is_some();
    if with_errors {
        out.push_str(",error_norm");
    }
    out.push('\n');
    for (step, iterate) in trace.iterates.iter().enumerate() {
        out.push_str(&step.to_string());
        for j in 0..n {
            out.push(',');
            out.push_str(&format_f64(iterate[j]));
        }
        if let Some(errors) = &trace.error_norms {
            out.push(',');
            out.push_str(&format_f64(errors[step]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use itersolve::{DenseMatrix, DenseVector, SolveMode, SolveParams};

    fn sample_report() -> (SolveReport, IterationTrace) {
        let a = DenseMatrix::from_rows(&[&[4.0, 1.0], &[1.0, 5.0]]).unwrap();
        let b = DenseVector::from_slice(&[6.0, 11.0]).unwrap();
        let mut params = SolveParams::new(SolveMode::Jacobi);
        params.steps = Some(100);
        itersolve::solve_with_trace(&a, &b, &params).unwrap()
    }

    #[test]
    fn json_shape() {
        let (report, _) = sample_report();
        let json = report_to_json(&report);
        assert!(json.contains("\"mode\": \"jacobi\""));
        assert!(json.contains("\"n\": 2"));
        assert!(json.contains("\"residual_norm\""));
        assert!(json.contains("\"diagnostics\""));
    }

    #[test]
    fn csv_rows_match_trace() {
        let (_, trace) = sample_report();
        let csv = trace_to_csv(&trace);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,x_tilde_1,x_tilde_2");
        assert_eq!(lines.len(), trace.iterates.len() + 1);
    }
}
