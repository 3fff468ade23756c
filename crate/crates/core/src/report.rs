//! Stable text encodings of simulation results. Headers are part of the
//! output contract; all writers are deterministic for a fixed input.

use std::fmt::Write as _;

use crate::experiments::{EnvelopeRow, SweepOutput, WindowStat, WorkloadOutput};
use crate::simulator::SimReport;

pub const RECORDS_HEADER: &str = "arrival_s,class,k,n,dq_ms,ds_ms,total_ms,usage_ms";
pub const SWEEP_HEADER: &str =
    "strategy,n,k,lambda,mean_ms,median_ms,p90_ms,p99_ms,std_ms,mean_qlen";
pub const ENVELOPE_HEADER: &str =
    "lambda,mean_ms,mean_n,mean_k,median_ms,median_n,median_k,p90_ms,p90_n,p90_k,p99_ms,p99_n,p99_k";
pub const TIMESERIES_HEADER: &str = "arrival_s,total_ms";
pub const WINDOWS_HEADER: &str = "window_start_s,mean_ms,count";

/// Per-request records, one row per completed request in arrival order.
pub fn records_csv(report: &SimReport) -> String {
    let mut out = String::with_capacity(64 * report.records.len() + 64);
    out.push_str(RECORDS_HEADER);
    out.push('\n');
    for r in &report.records {
        writeln!(
            out,
            "{:.6},{},{},{},{:.4},{:.4},{:.4},{:.4}",
            r.arrival_s,
            r.class,
            r.code.k(),
            r.code.n(),
            r.dq_s * 1000.0,
            r.ds_s * 1000.0,
            r.total_s * 1000.0,
            r.usage_s * 1000.0
        )
        .unwrap();
    }
    out
}

/// Long-format sweep table; adaptive strategies leave the code columns empty.
pub fn sweep_csv(output: &SweepOutput) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in &output.rows {
        let (n, k) = match row.code {
            Some(c) => (c.n().to_string(), c.k().to_string()),
            None => (String::new(), String::new()),
        };
        let a = &row.aggregates;
        writeln!(
            out,
            "{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.6}",
            row.strategy,
            n,
            k,
            row.lambda,
            a.mean_ms,
            a.median_ms,
            a.p90_ms,
            a.p99_ms,
            a.std_ms,
            a.mean_queue_length
        )
        .unwrap();
    }
    out
}

/// Per-lambda lower envelope over the static codes.
pub fn envelope_csv(rows: &[EnvelopeRow]) -> String {
    let mut out = String::new();
    out.push_str(ENVELOPE_HEADER);
    out.push('\n');
    for e in rows {
        writeln!(
            out,
            "{},{:.4},{},{},{:.4},{},{},{:.4},{},{},{:.4},{},{}",
            e.lambda,
            e.mean_ms,
            e.mean_code.n(),
            e.mean_code.k(),
            e.median_ms,
            e.median_code.n(),
            e.median_code.k(),
            e.p90_ms,
            e.p90_code.n(),
            e.p90_code.k(),
            e.p99_ms,
            e.p99_code.n(),
            e.p99_code.k()
        )
        .unwrap();
    }
    out
}

/// (arrival time, total delay) pairs for plotting delay against time.
pub fn timeseries_csv(report: &SimReport) -> String {
    let mut out = String::new();
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in &report.records {
        writeln!(out, "{:.6},{:.4}", r.arrival_s, r.total_s * 1000.0).unwrap();
    }
    out
}

pub fn windows_csv(windows: &[WindowStat]) -> String {
    let mut out = String::new();
    out.push_str(WINDOWS_HEADER);
    out.push('\n');
    for w in windows {
        writeln!(out, "{:.3},{:.4},{}", w.start_s, w.mean_ms, w.count).unwrap();
    }
    out
}

/// Summary JSON for the workload-change experiment.
pub fn workload_summary_json(out: &WorkloadOutput) -> String {
    let summary = serde_json::json!({
        "light_load_mean_ms": out.light_load_mean_ms,
        "recovery_s": out.recovery_s,
        "aggregates": out.report.aggregates,
    });
    serde_json::to_string_pretty(&summary).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{ClassSpec, CodeChoice, OpType};
    use crate::delay_model::DelayParams;
    use crate::simulator::{
        run_simulation, ArrivalProcess, DelaySource, SimConfig, StrategyRuntime,
    };

    fn small_report() -> SimReport {
        let cfg = SimConfig {
            threads: 16,
            arrivals: ArrivalProcess::Constant {
                rate: 5.0,
                duration_s: 50.0,
            },
            warmup_s: 5.0,
            seed: 3,
            classes: vec![ClassSpec::new(
                OpType::Read,
                3.0,
                1.0,
                6,
                12,
                2.0,
                DelayParams::new(0.04, 0.02, 0.02, 0.01).unwrap(),
            )
            .unwrap()],
            strategy: StrategyRuntime::Static(CodeChoice::new(2, 1).unwrap()),
            delay_source: DelaySource::Model,
        };
        run_simulation(&cfg).unwrap()
    }

    #[test]
    fn records_csv_shape() {
        let report = small_report();
        let csv = records_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), RECORDS_HEADER);
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!(fields[2], "1"); // k
        assert_eq!(fields[3], "2"); // n
        assert_eq!(csv.lines().count(), report.records.len() + 1);
    }

    #[test]
    fn csv_output_is_deterministic() {
        let a = records_csv(&small_report());
        let b = records_csv(&small_report());
        assert_eq!(a, b);
    }
}
