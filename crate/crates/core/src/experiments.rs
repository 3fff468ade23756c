//! Experiment drivers built on the simulator: the static-versus-adaptive
//! arrival-rate sweep, the changing-workload run, and the coded-storage
//! round-trip demo.

use rayon::prelude::*;

use crate::analysis::CodeChoice;
use crate::codec::StripCode;
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::scenario::ScenarioConfig;
use crate::simulator::{
    run_simulation, Aggregates, ArrivalProcess, RateSegment, SimConfig, SimReport, StrategyRuntime,
};
use crate::storage::{CodedObjectMeta, ObjectStore};

/// One sweep cell: a strategy at one arrival rate.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub strategy: String,
    /// Set for static strategies only.
    pub code: Option<CodeChoice>,
    pub lambda: f64,
    pub aggregates: Aggregates,
}

/// Best static result per metric at one arrival rate.
#[derive(Debug, Clone, Copy)]
pub struct EnvelopeRow {
    pub lambda: f64,
    pub mean_ms: f64,
    pub mean_code: CodeChoice,
    pub median_ms: f64,
    pub median_code: CodeChoice,
    pub p90_ms: f64,
    pub p90_code: CodeChoice,
    pub p99_ms: f64,
    pub p99_code: CodeChoice,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub envelope: Vec<EnvelopeRow>,
}

#[derive(Debug, Clone)]
enum CellStrategy {
    Static(CodeChoice),
    Greedy,
    Tofec,
}

/// Run every (strategy, arrival rate) cell of the configured sweep. Cells run
/// concurrently with seeds derived from the scenario seed and the cell index;
/// output order is deterministic regardless of scheduling.
pub fn run_sweep(scenario: &ScenarioConfig) -> Result<SweepOutput> {
    let section = scenario
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("scenario has no \"sweep\" section".into()))?;
    if section.lambdas.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one arrival rate".into(),
        ));
    }
    for &l in &section.lambdas {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Config(format!(
                "sweep arrival rates must be > 0, got {l}"
            )));
        }
    }
    let codes = match &section.codes {
        Some(codes) if !codes.is_empty() => codes.clone(),
        _ => scenario.all_static_codes(),
    };
    let delay_source = scenario.delay_source()?;
    let tables = if section.include_tofec {
        Some(scenario.build_tables()?)
    } else {
        None
    };

    let mut cells: Vec<(u64, f64, CellStrategy)> = Vec::new();
    let mut cell_index = 0u64;
    for &lambda in &section.lambdas {
        let mut push = |strategy: CellStrategy, idx: &mut u64| {
            cells.push((*idx, lambda, strategy));
            *idx += 1;
        };
        if section.include_tofec {
            push(CellStrategy::Tofec, &mut cell_index);
        }
        if section.include_greedy {
            push(CellStrategy::Greedy, &mut cell_index);
        }
        for &code in &codes {
            push(CellStrategy::Static(code), &mut cell_index);
        }
    }

    let rows: Result<Vec<SweepRow>> = cells
        .par_iter()
        .map(|(index, lambda, strategy)| {
            let duration = section.requests_per_cell as f64 / lambda;
            let runtime = match strategy {
                CellStrategy::Static(code) => StrategyRuntime::Static(*code),
                CellStrategy::Greedy => StrategyRuntime::Greedy,
                CellStrategy::Tofec => StrategyRuntime::Tofec {
                    alpha: scenario.alpha,
                    tables: tables.clone().expect("tables built when tofec included"),
                },
            };
            let cfg = SimConfig {
                threads: scenario.threads,
                arrivals: ArrivalProcess::Constant {
                    rate: *lambda,
                    duration_s: duration,
                },
                warmup_s: duration * 0.1,
                seed: scenario.seed ^ index,
                classes: scenario.classes.clone(),
                strategy: runtime,
                delay_source: delay_source.clone(),
            };
            let report = run_simulation(&cfg)?;
            Ok(SweepRow {
                strategy: cfg.strategy.label().to_string(),
                code: match strategy {
                    CellStrategy::Static(code) => Some(*code),
                    _ => None,
                },
                lambda: *lambda,
                aggregates: report.aggregates,
            })
        })
        .collect();
    let mut rows = rows?;
    rows.sort_by(|a, b| {
        a.strategy
            .cmp(&b.strategy)
            .then_with(|| {
                let key = |c: &Option<CodeChoice>| c.map(|c| (c.n(), c.k())).unwrap_or((0, 0));
                key(&a.code).cmp(&key(&b.code))
            })
            .then_with(|| a.lambda.total_cmp(&b.lambda))
    });

    let mut envelope = Vec::new();
    for &lambda in &section.lambdas {
        let statics: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.code.is_some() && r.lambda == lambda)
            .collect();
        if statics.is_empty() {
            continue;
        }
        let best = |f: fn(&Aggregates) -> f64| {
            let row = statics
                .iter()
                .min_by(|a, b| f(&a.aggregates).total_cmp(&f(&b.aggregates)))
                .unwrap();
            (f(&row.aggregates), row.code.unwrap())
        };
        let (mean_ms, mean_code) = best(|a| a.mean_ms);
        let (median_ms, median_code) = best(|a| a.median_ms);
        let (p90_ms, p90_code) = best(|a| a.p90_ms);
        let (p99_ms, p99_code) = best(|a| a.p99_ms);
        envelope.push(EnvelopeRow {
            lambda,
            mean_ms,
            mean_code,
            median_ms,
            median_code,
            p90_ms,
            p90_code,
            p99_ms,
            p99_code,
        });
    }
    envelope.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(SweepOutput { rows, envelope })
}

/// Windowed mean of the total delay over one stretch of arrivals.
#[derive(Debug, Clone, Copy)]
pub struct WindowStat {
    pub start_s: f64,
    pub mean_ms: f64,
    pub count: u64,
}

#[derive(Debug, Clone)]
pub struct WorkloadOutput {
    pub report: SimReport,
    pub windows: Vec<WindowStat>,
    /// Mean total delay of requests arriving in the first segment after
    /// warmup.
    pub light_load_mean_ms: f64,
    /// Seconds after the final rate change until the windowed mean settles
    /// within 25% of the light-load mean; None when it never does.
    pub recovery_s: Option<f64>,
}

/// Run the piecewise-rate scenario with the configured strategy and measure
/// how quickly delays return to the light-load level after the final rate
/// drop.
pub fn run_workload_change(scenario: &ScenarioConfig) -> Result<WorkloadOutput> {
    let section = scenario
        .workload_change
        .as_ref()
        .ok_or_else(|| Error::Config("scenario has no \"workload_change\" section".into()))?;
    if section.segments.is_empty() {
        return Err(Error::Config("workload_change needs >= 1 segment".into()));
    }
    if !(section.window_s.is_finite() && section.window_s > 0.0) {
        return Err(Error::Config("window_s must be > 0".into()));
    }
    let segments: Vec<RateSegment> = section
        .segments
        .iter()
        .map(|s| RateSegment {
            rate: s.rate_per_s,
            duration_s: s.duration_s,
        })
        .collect();
    let duration: f64 = segments.iter().map(|s| s.duration_s).sum();
    let first_segment_end = segments[0].duration_s;
    let last_segment_start = duration - segments.last().unwrap().duration_s;
    let warmup = scenario
        .warmup_s
        .unwrap_or(first_segment_end * 0.1)
        .min(first_segment_end * 0.5);

    let cfg = SimConfig {
        threads: scenario.threads,
        arrivals: ArrivalProcess::Piecewise { segments },
        warmup_s: warmup,
        seed: scenario.seed,
        classes: scenario.classes.clone(),
        strategy: scenario.strategy_runtime()?,
        delay_source: scenario.delay_source()?,
    };
    let report = run_simulation(&cfg)?;

    let light: Vec<f64> = report
        .records
        .iter()
        .filter(|r| r.arrival_s >= warmup && r.arrival_s < first_segment_end)
        .map(|r| r.total_s)
        .collect();
    let light_load_mean_ms = if light.is_empty() {
        0.0
    } else {
        light.iter().sum::<f64>() / light.len() as f64 * 1000.0
    };

    let window_count = (duration / section.window_s).ceil() as usize;
    let mut sums = vec![0.0f64; window_count];
    let mut counts = vec![0u64; window_count];
    for r in &report.records {
        let w = ((r.arrival_s / section.window_s) as usize).min(window_count - 1);
        sums[w] += r.total_s;
        counts[w] += 1;
    }
    let windows: Vec<WindowStat> = (0..window_count)
        .map(|w| WindowStat {
            start_s: w as f64 * section.window_s,
            mean_ms: if counts[w] == 0 {
                0.0
            } else {
                sums[w] / counts[w] as f64 * 1000.0
            },
            count: counts[w],
        })
        .collect();

    // earliest window after the final rate change from which every later
    // window stays within 25% of the light-load mean
    let threshold = light_load_mean_ms * 1.25;
    let tail: Vec<&WindowStat> = windows
        .iter()
        .filter(|w| w.start_s >= last_segment_start)
        .collect();
    let mut recovery_s = None;
    for (i, w) in tail.iter().enumerate() {
        let settled = tail[i..]
            .iter()
            .all(|later| later.count == 0 || later.mean_ms <= threshold);
        if settled {
            recovery_s = Some(w.start_s - last_segment_start);
            break;
        }
    }
    Ok(WorkloadOutput {
        report,
        windows,
        light_load_mean_ms,
        recovery_s,
    })
}

/// Result of the coded-storage round trip.
#[derive(Debug, Clone)]
pub struct CodecDemoReport {
    pub total_strips: u32,
    pub data_strips: u32,
    pub strip_bytes: usize,
    pub chunk_bytes: usize,
    pub chunk_count: u32,
    pub chunks_needed: u32,
    /// 1-based chunk labels, as printed for humans.
    pub chunks_used: Vec<u32>,
    pub original_len: u64,
    pub verified: bool,
}

#[allow(clippy::too_many_arguments)]
/// Encode a file, store it as one coded object plus a metadata sidecar, read
/// back a random sufficient subset of chunk ranges, decode, and verify. Set
/// `corrupt_byte` to flip one stored byte in the first fetched chunk and
/// watch verification fail.
pub fn run_codec_demo(
    store: &dyn ObjectStore,
    key: &str,
    file: &[u8],
    total_strips: u32,
    data_strips: u32,
    strip_bytes: usize,
    chunk_bytes: usize,
    seed: u64,
    corrupt_byte: Option<usize>,
) -> Result<CodecDemoReport> {
    let code = StripCode::systematic(total_strips, data_strips, strip_bytes)?;
    if file.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot encode an empty file".into(),
        ));
    }
    if file.len() > code.data_len() {
        return Err(Error::InvalidParameter(format!(
            "file of {} bytes exceeds code capacity {} ({} strips of {})",
            file.len(),
            code.data_len(),
            data_strips,
            strip_bytes
        )));
    }
    // pick the random chunk subset up front; it depends only on the seed
    let views = code.chunk_ranges(chunk_bytes)?;
    let m = views[0].strips_per_chunk;
    let needed = (data_strips / m) as usize;
    let mut rng = RandomStream::seeded(seed);
    let mut available: Vec<u32> = (0..views.len() as u32).collect();
    let mut picked = Vec::with_capacity(needed);
    for _ in 0..needed {
        picked.push(available.remove(rng.index(available.len())));
    }
    picked.sort_unstable();

    // zero-pad up to the code dimension; the sidecar remembers the real length
    let mut padded = file.to_vec();
    padded.resize(code.data_len(), 0);
    let mut coded = code.encode(&padded)?;
    if let Some(at) = corrupt_byte {
        // flip a byte inside the first chunk that will be read back, so the
        // corruption is guaranteed to reach the decoder
        let v = views[picked[0] as usize];
        coded[v.offset + at % v.len] ^= 0xFF;
    }
    store.put(key, &coded)?;
    CodedObjectMeta {
        original_len: file.len() as u64,
        strip_bytes: strip_bytes as u64,
        data_strips,
        total_strips,
    }
    .store(store, key)?;

    let meta = CodedObjectMeta::load(store, key)?;
    let mut fetched: Vec<(u32, Vec<u8>)> = Vec::with_capacity(needed);
    for &idx in &picked {
        let v = views[idx as usize];
        fetched.push((idx, store.get_range(key, v.offset as u64, v.len as u64)?));
    }
    let borrowed: Vec<(u32, &[u8])> = fetched.iter().map(|(i, d)| (*i, d.as_slice())).collect();
    let decoded = code.decode_chunks(chunk_bytes, &borrowed)?;
    let verified = decoded[..meta.original_len as usize] == *file;

    Ok(CodecDemoReport {
        total_strips,
        data_strips,
        strip_bytes,
        chunk_bytes,
        chunk_count: views.len() as u32,
        chunks_needed: needed as u32,
        chunks_used: picked.iter().map(|i| i + 1).collect(),
        original_len: file.len() as u64,
        verified,
    })
}
