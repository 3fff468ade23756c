//! Command-line front end: fit delay coefficients from traces, solve for
//! adaptation thresholds, run simulations and experiments, and demo the
//! coded-storage round trip.
//!
//! Exit codes: 0 on success, 2 for configuration/usage errors, 1 for runtime
//! failures. Set `TOFEC_LOG` (e.g. `TOFEC_LOG=debug`) for log output.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use tofec::analysis::{ClassSpec, OpType};
use tofec::delay_model::DelayParams;
use tofec::error::{Error, Result};
use tofec::experiments::{run_codec_demo, run_sweep, run_workload_change};
use tofec::report;
use tofec::scenario::ScenarioConfig;
use tofec::simulator::run_simulation;
use tofec::solver::build_thresholds;
use tofec::storage::{DirStore, MemoryStore, ObjectStore};
use tofec::trace::{fit_params, load_trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    /// Human-readable summary.
    #[default]
    Text,
    /// Machine-readable JSON on stdout.
    Json,
    /// CSV rows on stdout.
    Csv,
}

#[derive(Parser)]
#[command(
    name = "tofec",
    version,
    about = "Backlog-adaptive erasure-coded storage access: solver, simulator, and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit delay coefficients from a task-delay trace CSV.
    Fit {
        /// Trace CSV with header op_type,chunk_size_mb,delay_ms.
        #[arg(long)]
        trace: PathBuf,
        /// Operation type to fit: read or write.
        #[arg(long, default_value = "read")]
        op_type: String,
        /// Output parameter file.
        #[arg(long, default_value = "params.json")]
        out: PathBuf,
    },
    /// Compute adaptation threshold tables for one request class.
    Solve {
        /// Delay parameter JSON (as written by `fit`).
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 16)]
        threads: u32,
        #[arg(long, default_value = "read")]
        op_type: String,
        #[arg(long, default_value_t = 3.0)]
        file_size_mb: f64,
        #[arg(long, default_value_t = 6)]
        k_max: u32,
        #[arg(long, default_value_t = 12)]
        n_max: u32,
        #[arg(long, default_value_t = 2.0)]
        r_max: f64,
        /// Output threshold file.
        #[arg(long, default_value = "thresholds.json")]
        out: PathBuf,
    },
    /// Run one simulation from a scenario config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for report.json and records.csv.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Sweep arrival rates across static codes and the adaptive strategies.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for sweep.csv and envelope.csv.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Piecewise-rate run measuring recovery after a load spike.
    WorkloadChange {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for timeseries.csv, windows.csv, and summary.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Encode a file, store it, read back a random chunk subset, and verify.
    CodecDemo {
        /// Input file to encode.
        #[arg(long)]
        file: PathBuf,
        /// Total strips in the coded file.
        #[arg(long, default_value_t = 12)]
        total_strips: u32,
        /// Data strips (the code dimension). Strips are 0-based internally;
        /// chunks print 1-based.
        #[arg(long, default_value_t = 6)]
        data_strips: u32,
        /// Strip size in bytes; defaults to ceil(file_len / data_strips).
        #[arg(long)]
        strip_bytes: Option<usize>,
        /// Chunk size in bytes; defaults to one strip.
        #[arg(long)]
        chunk_bytes: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Store in this directory instead of in memory.
        #[arg(long)]
        store_dir: Option<PathBuf>,
        /// Flip one stored byte inside the first chunk that will be read,
        /// to watch verification fail.
        #[arg(long)]
        corrupt_byte: Option<usize>,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn load_scenario(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut scenario = ScenarioConfig::load(path)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

fn cmd_fit(trace: &Path, op_type: &str, out: &Path) -> Result<()> {
    let op: OpType = op_type.parse()?;
    let records = load_trace(trace)?;
    let fit = fit_params(&records, op)?;
    println!("fitted {} rows from {}", records.len(), trace.display());
    for b in &fit.buckets {
        println!(
            "  {:>7.3} MB: kept {} dropped {}  mean {:.2} ms  std {:.2} ms",
            b.chunk_size_mb,
            b.kept,
            b.dropped,
            b.mean_s * 1000.0,
            b.std_s * 1000.0
        );
    }
    println!(
        "mean line: {:.6} + {:.6} * MB   std line: {:.6} + {:.6} * MB",
        fit.mean_line.0, fit.mean_line.1, fit.std_line.0, fit.std_line.1
    );
    for name in &fit.clamped {
        eprintln!("warning: fitted coefficient {name} was negative; clamped to 0");
    }
    write_file(out, &serde_json::to_string_pretty(&fit.params)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    params_path: &Path,
    threads: u32,
    op_type: &str,
    file_size_mb: f64,
    k_max: u32,
    n_max: u32,
    r_max: f64,
    out: &Path,
) -> Result<()> {
    let op: OpType = op_type.parse()?;
    let text = std::fs::read_to_string(params_path)?;
    let params: DelayParams = serde_json::from_str(&text)?;
    let cls = ClassSpec::new(op, file_size_mb, 1.0, k_max, n_max, r_max, params)?;
    let table = build_thresholds(&cls, threads)?;

    println!("thresholds for {op} {file_size_mb} MB, {threads} threads");
    let show = |name: &str, thresholds: &[f64], anchors: &[f64]| {
        for (i, &t) in thresholds.iter().enumerate() {
            if t.is_infinite() {
                println!("  {name}[{}] = inf", i + 1);
            } else {
                println!("  {name}[{}] = {t:.6}", i + 1);
            }
            if i < anchors.len() {
                println!("    Q at level {} = {:.6}", i + 1, anchors[i]);
            }
        }
    };
    show("zeta", &table.zeta, &table.q_n);
    show("kappa", &table.kappa, &table.q_k);
    if table.n_truncated || table.k_truncated {
        eprintln!("warning: table truncated before reaching the class limits");
    }

    let doc = serde_json::json!({
        "threads": threads,
        "classes": [{
            "op_type": op.to_string(),
            "file_size_mb": file_size_mb,
            "k_max": k_max,
            "n_max": n_max,
            "r_max": r_max,
            "table": table,
        }],
    });
    write_file(out, &serde_json::to_string_pretty(&doc)?)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_simulate(config: &Path, seed: Option<u64>, out_dir: &Path, format: Format) -> Result<()> {
    let scenario = load_scenario(config, seed)?;
    let sim = scenario.build_sim()?;
    let report = run_simulation(&sim)?;

    let report_json = serde_json::to_string_pretty(&serde_json::json!({
        "strategy": sim.strategy.label(),
        "seed": sim.seed,
        "duration_s": report.duration_s,
        "warmup_s": report.warmup_s,
        "aggregates": report.aggregates,
    }))?;
    write_file(&out_dir.join("report.json"), &report_json)?;
    let records = report::records_csv(&report);
    write_file(&out_dir.join("records.csv"), &records)?;

    let a = &report.aggregates;
    match format {
        Format::Json => println!("{report_json}"),
        Format::Csv => print!("{records}"),
        Format::Text => {
            println!("strategy {}  seed {}", sim.strategy.label(), sim.seed);
            println!(
                "requests {}  throughput {:.2}/s  mean queue {:.3}",
                a.completed_requests, a.throughput_rps, a.mean_queue_length
            );
            println!(
                "total delay: mean {:.1} ms  median {:.1} ms  p90 {:.1} ms  p99 {:.1} ms  std {:.1} ms",
                a.mean_ms, a.median_ms, a.p90_ms, a.p99_ms, a.std_ms
            );
            let comp: Vec<String> = a
                .composition_by_k
                .iter()
                .map(|(k, f)| format!("k={k}: {:.1}%", f * 100.0))
                .collect();
            println!("composition: {}", comp.join("  "));
            if a.queue_growth_flag {
                println!("warning: queue grew across all observation windows (overload)");
            }
        }
    }
    Ok(())
}

fn cmd_sweep(config: &Path, seed: Option<u64>, out_dir: &Path, format: Format) -> Result<()> {
    let scenario = load_scenario(config, seed)?;
    let output = run_sweep(&scenario)?;
    let sweep = report::sweep_csv(&output);
    let envelope = report::envelope_csv(&output.envelope);
    write_file(&out_dir.join("sweep.csv"), &sweep)?;
    write_file(&out_dir.join("envelope.csv"), &envelope)?;
    match format {
        Format::Csv => print!("{sweep}"),
        Format::Json => {
            let rows: Vec<serde_json::Value> = output
                .rows
                .iter()
                .map(|r| {
                    serde_json::json!({
                        "strategy": r.strategy,
                        "n": r.code.map(|c| c.n()),
                        "k": r.code.map(|c| c.k()),
                        "lambda": r.lambda,
                        "aggregates": r.aggregates,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&rows)?);
        }
        Format::Text => {
            println!(
                "{} cells ({} rates), wrote {} and {}",
                output.rows.len(),
                output.envelope.len(),
                out_dir.join("sweep.csv").display(),
                out_dir.join("envelope.csv").display()
            );
            for e in &output.envelope {
                println!(
                    "  lambda {:>7.2}: best static mean {:.1} ms with {}",
                    e.lambda, e.mean_ms, e.mean_code
                );
            }
        }
    }
    Ok(())
}

fn cmd_workload_change(
    config: &Path,
    seed: Option<u64>,
    out_dir: &Path,
    format: Format,
) -> Result<()> {
    let scenario = load_scenario(config, seed)?;
    let output = run_workload_change(&scenario)?;
    let timeseries = report::timeseries_csv(&output.report);
    write_file(&out_dir.join("timeseries.csv"), &timeseries)?;
    write_file(
        &out_dir.join("windows.csv"),
        &report::windows_csv(&output.windows),
    )?;
    let summary = report::workload_summary_json(&output);
    write_file(&out_dir.join("workload_summary.json"), &summary)?;
    match format {
        Format::Json => println!("{summary}"),
        Format::Csv => print!("{timeseries}"),
        Format::Text => {
            println!(
                "light-load mean {:.1} ms; recovery after final rate change: {}",
                output.light_load_mean_ms,
                match output.recovery_s {
                    Some(s) => format!("{s:.0} s"),
                    None => "not reached".into(),
                }
            );
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_codec_demo(
    file: &Path,
    total_strips: u32,
    data_strips: u32,
    strip_bytes: Option<usize>,
    chunk_bytes: Option<usize>,
    seed: u64,
    store_dir: Option<&Path>,
    corrupt_byte: Option<usize>,
) -> Result<()> {
    let data = std::fs::read(file)?;
    if data.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} is empty",
            file.display()
        )));
    }
    let strip_bytes = strip_bytes.unwrap_or(data.len().div_ceil(data_strips as usize));
    let chunk_bytes = chunk_bytes.unwrap_or(strip_bytes);

    let run = |store: &dyn ObjectStore| {
        run_codec_demo(
            store,
            "demo-object",
            &data,
            total_strips,
            data_strips,
            strip_bytes,
            chunk_bytes,
            seed,
            corrupt_byte,
        )
    };
    let demo = match store_dir {
        Some(dir) => run(&DirStore::open(dir)?)?,
        None => run(&MemoryStore::new())?,
    };

    println!(
        "({},{}) code over {} strips of {} bytes; {} chunks of {} bytes",
        demo.total_strips,
        demo.data_strips,
        demo.total_strips,
        demo.strip_bytes,
        demo.chunk_count,
        demo.chunk_bytes
    );
    let used: Vec<String> = demo.chunks_used.iter().map(|c| c.to_string()).collect();
    println!(
        "read {} of {} chunks (chunks {}), decoded {} bytes",
        demo.chunks_needed,
        demo.chunk_count,
        used.join(", "),
        demo.original_len
    );
    if demo.verified {
        println!("verified: decoded bytes match the original file");
        Ok(())
    } else {
        Err(Error::Numeric(
            "decoded bytes do not match the original file".into(),
        ))
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Fit {
            trace,
            op_type,
            out,
        } => cmd_fit(trace, op_type, out),
        Command::Solve {
            params,
            threads,
            op_type,
            file_size_mb,
            k_max,
            n_max,
            r_max,
            out,
        } => cmd_solve(
            params,
            *threads,
            op_type,
            *file_size_mb,
            *k_max,
            *n_max,
            *r_max,
            out,
        ),
        Command::Simulate {
            config,
            seed,
            out,
            format,
        } => cmd_simulate(config, *seed, out, *format),
        Command::Sweep {
            config,
            seed,
            out,
            format,
        } => cmd_sweep(config, *seed, out, *format),
        Command::WorkloadChange {
            config,
            seed,
            out,
            format,
        } => cmd_workload_change(config, *seed, out, *format),
        Command::CodecDemo {
            file,
            total_strips,
            data_strips,
            strip_bytes,
            chunk_bytes,
            seed,
            store_dir,
            corrupt_byte,
        } => cmd_codec_demo(
            file,
            *total_strips,
            *data_strips,
            *strip_bytes,
            *chunk_bytes,
            *seed,
            store_dir.as_deref(),
            *corrupt_byte,
        ),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TOFEC_LOG")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
