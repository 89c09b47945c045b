//! CSV output: one row per solve, plus the per-iteration trace.

use std::io::Write;

use llmpcc::homotopy::{OuterRecord, SolveReport};
use llmpcc::inner::{InnerResult, InnerStatus};
use llmpcc::model::{cc_violation, MpccProblem, Norm};

pub const HEADER: [&str; 11] = [
    "problem",
    "seed",
    "status",
    "objective",
    "cc_violation_inf",
    "cc_violation_2",
    "residual",
    "outer_iters",
    "inner_iters_total",
    "time_ms",
    "label",
];

pub const TRACE_HEADER: [&str; 8] = [
    "nu",
    "lambda",
    "s_value",
    "f_value",
    "inner_residual",
    "envelope_residual",
    "cc_violation",
    "inner_iters",
];

/// Seventeen significant digits, enough to recover every `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub problem: String,
    pub seed: u64,
    pub status: String,
    pub objective: f64,
    pub cc_violation_inf: f64,
    pub cc_violation_2: f64,
    pub residual: f64,
    pub outer_iters: usize,
    pub inner_iters_total: usize,
    pub time_ms: f64,
    pub label: String,
}

impl ReportRow {
    /// Row for a homotopy run; `constant` is added to the reported objective.
    pub fn from_solve(
        problem_name: &str,
        seed: u64,
        problem: &MpccProblem,
        report: &SolveReport,
        constant: f64,
        time_ms: f64,
    ) -> Self {
        let x = &report.x_final;
        ReportRow {
            problem: problem_name.to_string(),
            seed,
            status: report.status.as_str().to_string(),
            objective: problem.objective(x) + constant,
            cc_violation_inf: cc_violation(problem, x, Norm::Inf),
            cc_violation_2: cc_violation(problem, x, Norm::Two),
            residual: report.certificate.residual,
            outer_iters: report.outer_iters(),
            inner_iters_total: report.inner_iters_total(),
            time_ms,
            label: report.certificate.label.as_str().to_string(),
        }
    }

    /// Row for a projected gradient run. Its iterates carry no certificate.
    pub fn from_pgm(problem_name: &str, seed: u64, problem: &MpccProblem, res: &InnerResult, time_ms: f64) -> Self {
        let status = match res.status {
            InnerStatus::Converged => "PgmConverged",
            InnerStatus::MaxIters => "PgmMaxIters",
            InnerStatus::LineSearchStall => "PgmLineSearchStall",
        };
        ReportRow {
            problem: problem_name.to_string(),
            seed,
            status: status.to_string(),
            objective: res.value,
            cc_violation_inf: cc_violation(problem, &res.x, Norm::Inf),
            cc_violation_2: cc_violation(problem, &res.x, Norm::Two),
            residual: res.residual,
            outer_iters: 0,
            inner_iters_total: res.iters,
            time_ms,
            label: "None".to_string(),
        }
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.problem.clone(),
            self.seed.to_string(),
            self.status.clone(),
            fmt_num(self.objective),
            fmt_num(self.cc_violation_inf),
            fmt_num(self.cc_violation_2),
            fmt_num(self.residual),
            self.outer_iters.to_string(),
            self.inner_iters_total.to_string(),
            fmt_num(self.time_ms),
            self.label.clone(),
        ]
    }
}

pub fn write_rows<W: Write>(out: W, rows: &[ReportRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace<W: Write>(out: W, trace: &[OuterRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.nu.to_string(),
            fmt_num(r.lambda),
            fmt_num(r.s_value),
            fmt_num(r.f_value),
            fmt_num(r.inner_residual),
            fmt_num(r.envelope_residual),
            fmt_num(r.cc_violation),
            r.inner_iters.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -4873.863706152965, 5e-324, 1e300] {
            let s = fmt_num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn header_then_rows() {
        let row = ReportRow {
            problem: "p".into(),
            seed: 3,
            status: "OuterLimit".into(),
            objective: 0.5,
            cc_violation_inf: 0.0,
            cc_violation_2: 0.0,
            residual: 1.0,
            outer_iters: 2,
            inner_iters_total: 9,
            time_ms: 1.5,
            label: "None".into(),
        };
        let mut buf = Vec::new();
        write_rows(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], HEADER.join(","));
        assert!(lines[1].starts_with("p,3,OuterLimit,5.0000000000000000e-1,"));
        assert_eq!(lines.len(), 2);
    }
}
