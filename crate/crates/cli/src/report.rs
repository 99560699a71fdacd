//! Trace and summary-report serialization.
//!
//! Traces are CSV with header
//! `k,productive,h,sub_norm,delta,g_value,f_estimate,bregman_to_ref`,
//! UTF-8, LF line endings, full-precision decimal floats (shortest
//! round-trip representation). Reports are JSON documents carrying the
//! solve scalars plus the certificate array; identical config and seed
//! produce byte-identical artifacts.

use serde::{Deserialize, Serialize};

use imd_core::analysis::Certificate;
use imd_core::solver::{IterationRecord, SolveResult, StopReason};

use crate::config::RunConfig;

pub const TRACE_HEADER: &str = "k,productive,h,sub_norm,delta,g_value,f_estimate,bregman_to_ref";

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Render a trace as CSV.
pub fn trace_to_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.k,
            r.productive,
            fmt(r.h),
            fmt(r.sub_norm),
            fmt(r.delta_reported),
            fmt(r.g_value),
            fmt(r.f_value_estimate),
            r.bregman_to_ref.map(fmt).unwrap_or_default(),
        ));
    }
    out
}

/// Summary of one finished run: solve scalars, certificate verdicts, and
/// the echoed configuration (so `verify` can re-execute it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: String,
    pub algorithm: String,
    pub eps: f64,
    pub delta_noise: f64,
    pub seed: u64,
    pub stop_reason: String,
    pub output_rule: String,
    pub iterations: usize,
    pub productive_count: usize,
    pub nonproductive_count: usize,
    pub iteration_bound: u64,
    pub output_point: Vec<f64>,
    pub f_estimate: f64,
    pub g_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_gap: Option<f64>,
    pub delta_max_objective: f64,
    pub delta_max_constraint: f64,
    pub max_constraint_sub_norm: f64,
    pub trace_file: String,
    pub certificates: Vec<Certificate>,
    pub all_passed: bool,
    pub config: RunConfig,
}

pub fn stop_reason_str(reason: StopReason) -> &'static str {
    match reason {
        StopReason::CriterionMet => "criterion_met",
        StopReason::ZeroObjectiveSubgradient => "zero_objective_subgradient",
        StopReason::IterationCap => "iteration_cap",
    }
}

pub fn output_rule_str(result: &SolveResult) -> &'static str {
    match result.output_rule {
        imd_core::solver::OutputRule::WeightedAverage => "weighted_average",
        imd_core::solver::OutputRule::ArgminProductive => "argmin_productive",
    }
}

pub fn report_to_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization is infallible");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use imd_core::solver::{solve_adaptive, Algorithm};

    #[test]
    fn trace_floats_round_trip_exactly() {
        let problem = imd_core::problems::catalog_problem("p6-l1-ball")
            .unwrap()
            .build()
            .unwrap();
        let result = solve_adaptive(&problem, 0.2).unwrap();
        assert_eq!(result.algorithm, Algorithm::Adaptive);
        let csv = trace_to_csv(&result.trace);
        for (line, rec) in csv.lines().skip(1).zip(&result.trace) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 8);
            assert_eq!(cols[0].parse::<usize>().unwrap(), rec.k);
            assert_eq!(cols[1].parse::<bool>().unwrap(), rec.productive);
            assert_eq!(cols[2].parse::<f64>().unwrap().to_bits(), rec.h.to_bits());
            assert_eq!(cols[3].parse::<f64>().unwrap().to_bits(), rec.sub_norm.to_bits());
            assert_eq!(
                cols[6].parse::<f64>().unwrap().to_bits(),
                rec.f_value_estimate.to_bits()
            );
            let bregman = rec.bregman_to_ref.unwrap();
            assert_eq!(cols[7].parse::<f64>().unwrap().to_bits(), bregman.to_bits());
        }
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }
}
