//! Measured task-delay traces: CSV ingestion, least-squares fitting of the
//! delay coefficients, and bootstrap resampling for trace-driven simulation.
//!
//! Trace files are CSV with a required header `op_type,chunk_size_mb,delay_ms`.
//! Delays are stored in milliseconds on disk and converted to seconds here.

use std::collections::BTreeMap;
use std::path::Path;

use crate::analysis::OpType;
use crate::delay_model::DelayParams;
use crate::error::{Error, Result};
use crate::rng::RandomStream;

/// One measured task execution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub op_type: OpType,
    pub chunk_size_mb: f64,
    pub delay_s: f64,
}

impl TraceRecord {
    pub fn new(op_type: OpType, chunk_size_mb: f64, delay_s: f64) -> Result<Self> {
        if !(chunk_size_mb.is_finite() && chunk_size_mb > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "trace chunk size must be > 0 MB, got {chunk_size_mb}"
            )));
        }
        if !(delay_s.is_finite() && delay_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "trace delay must be > 0, got {delay_s}"
            )));
        }
        Ok(Self {
            op_type,
            chunk_size_mb,
            delay_s,
        })
    }
}

pub const TRACE_HEADER: &str = "op_type,chunk_size_mb,delay_ms";

/// Load a trace CSV, validating every row. Errors carry the 1-based line
/// number of the offending row.
pub fn load_trace(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_trace(&text, &path.display().to_string())
}

fn parse_trace(text: &str, path: &str) -> Result<Vec<TraceRecord>> {
    let fail = |line: usize, message: String| Error::TraceParse {
        path: path.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| fail(0, "empty trace file".into()))?;
    if header.trim() != TRACE_HEADER {
        return Err(fail(
            1,
            format!("expected header {TRACE_HEADER:?}, got {:?}", header.trim()),
        ));
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(fail(
                line_no,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        }
        let op_type: OpType = fields[0]
            .trim()
            .parse()
            .map_err(|e: Error| fail(line_no, e.to_string()))?;
        let chunk_size_mb: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| fail(line_no, format!("bad chunk size {:?}", fields[1].trim())))?;
        let delay_ms: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| fail(line_no, format!("bad delay {:?}", fields[2].trim())))?;
        let record = TraceRecord::new(op_type, chunk_size_mb, delay_ms / 1000.0)
            .map_err(|e| fail(line_no, e.to_string()))?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(fail(0, "trace contains no data rows".into()));
    }
    Ok(records)
}

/// Per-bucket statistics after worst-case filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketStat {
    pub chunk_size_mb: f64,
    pub kept: usize,
    pub dropped: usize,
    pub mean_s: f64,
    pub std_s: f64,
}

/// Outcome of fitting: the validated coefficients plus the raw fitted lines
/// and any coefficients that were clamped up to zero.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: DelayParams,
    /// (intercept, slope) of the least-squares line through bucket means.
    pub mean_line: (f64, f64),
    /// (intercept, slope) of the least-squares line through bucket stds.
    pub std_line: (f64, f64),
    pub clamped: Vec<&'static str>,
    pub buckets: Vec<BucketStat>,
}

fn group_by_chunk_size(records: &[TraceRecord], op_type: OpType) -> BTreeMap<u64, Vec<f64>> {
    let mut buckets: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for r in records {
        if r.op_type == op_type {
            buckets
                .entry(r.chunk_size_mb.to_bits())
                .or_default()
                .push(r.delay_s);
        }
    }
    buckets
}

/// Unweighted least-squares line through the points, as (intercept, slope).
fn least_squares_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - x_mean).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - x_mean) * (p.1 - y_mean)).sum();
    let slope = sxy / sxx;
    (y_mean - slope * x_mean, slope)
}

/// Fit the four delay coefficients from a trace: per chunk-size bucket, drop
/// the worst 10% of delays, take the bucket mean and standard deviation, and
/// fit lines through both. The std line is attributed entirely to the
/// exponential tail; the shift line is the mean line minus the tail line.
/// Negative fitted coefficients clamp to zero with a warning.
pub fn fit_params(records: &[TraceRecord], op_type: OpType) -> Result<FitOutcome> {
    let grouped = group_by_chunk_size(records, op_type);
    if grouped.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need >= 2 distinct chunk sizes to fit {op_type} delays, got {}",
            grouped.len()
        )));
    }
    let mut buckets = Vec::with_capacity(grouped.len());
    for (bits, mut delays) in grouped {
        let size = f64::from_bits(bits);
        if delays.len() < 10 {
            return Err(Error::InvalidParameter(format!(
                "chunk-size bucket {size} MB has only {} samples (need >= 10)",
                delays.len()
            )));
        }
        delays.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let dropped = delays.len() / 10;
        let kept = &delays[..delays.len() - dropped];
        let n = kept.len() as f64;
        let mean = kept.iter().sum::<f64>() / n;
        let var = kept.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        buckets.push(BucketStat {
            chunk_size_mb: size,
            kept: kept.len(),
            dropped,
            mean_s: mean,
            std_s: var.sqrt(),
        });
    }

    let mean_points: Vec<(f64, f64)> = buckets
        .iter()
        .map(|b| (b.chunk_size_mb, b.mean_s))
        .collect();
    let std_points: Vec<(f64, f64)> = buckets.iter().map(|b| (b.chunk_size_mb, b.std_s)).collect();
    let mean_line = least_squares_line(&mean_points);
    let std_line = least_squares_line(&std_points);

    // mean = shift + tail, std = tail
    let raw = [
        ("fixed_shift_s", mean_line.0 - std_line.0),
        ("shift_slope_s_per_mb", mean_line.1 - std_line.1),
        ("fixed_tail_s", std_line.0),
        ("tail_slope_s_per_mb", std_line.1),
    ];
    let mut clamped = Vec::new();
    let mut values = [0.0f64; 4];
    for (i, (name, v)) in raw.iter().enumerate() {
        if *v < 0.0 {
            log::warn!("fitted coefficient {name} = {v:.6} clamped to 0");
            clamped.push(*name);
            values[i] = 0.0;
        } else {
            values[i] = *v;
        }
    }
    let params = DelayParams::new(values[0], values[1], values[2], values[3])?;
    Ok(FitOutcome {
        params,
        mean_line,
        std_line,
        clamped,
        buckets,
    })
}

/// Empirical delay source: sorted sample vectors per (op type, chunk size),
/// immutable after construction. Sampling is i.i.d. with replacement within
/// a bucket.
#[derive(Debug, Clone)]
pub struct EmpiricalDelaySource {
    // key: (op_type, chunk size bits); values sorted ascending
    buckets: Vec<((OpType, f64), Vec<f64>)>,
}

impl EmpiricalDelaySource {
    pub fn from_records(records: &[TraceRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidParameter(
                "cannot build a delay source from an empty trace".into(),
            ));
        }
        let mut buckets = Vec::new();
        for op in [OpType::Read, OpType::Write] {
            for (bits, mut delays) in group_by_chunk_size(records, op) {
                delays.sort_by(|a, b| a.partial_cmp(b).unwrap());
                buckets.push(((op, f64::from_bits(bits)), delays));
            }
        }
        Ok(Self { buckets })
    }

    pub fn available_sizes(&self, op_type: OpType) -> Vec<f64> {
        self.buckets
            .iter()
            .filter(|((op, _), _)| *op == op_type)
            .map(|((_, size), _)| *size)
            .collect()
    }

    fn bucket(&self, op_type: OpType, chunk_size_mb: f64) -> Option<&[f64]> {
        let tol = 1e-9 * chunk_size_mb.abs().max(1.0);
        self.buckets
            .iter()
            .filter(|((op, size), _)| *op == op_type && (size - chunk_size_mb).abs() <= tol)
            .map(|(_, delays)| delays.as_slice())
            .next()
    }

    /// One delay drawn uniformly from the matching bucket.
    pub fn bootstrap_delay(
        &self,
        op_type: OpType,
        chunk_size_mb: f64,
        rng: &mut RandomStream,
    ) -> Result<f64> {
        let bucket = self
            .bucket(op_type, chunk_size_mb)
            .ok_or_else(|| Error::MissingBucket {
                op_type: op_type.to_string(),
                requested: chunk_size_mb,
                available: self.available_sizes(op_type),
            })?;
        Ok(bucket[rng.index(bucket.len())])
    }
}
