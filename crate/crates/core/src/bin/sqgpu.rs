use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use serde_json::json;

use sqgpu::config::{parse_config, OutputTarget, RunConfig};
use sqgpu::cost_model::{calibrate_cost_params, SystemShape};
use sqgpu::experiments::{config_hash, run_cost_sweep, CostScale, run_csr_sweep, run_qcount_sweep, BatchSource, CsrSweep};
use sqgpu::report::{format_float, read_table, render_chart, render_table, Format, Metadata, TableRow};
use sqgpu::sched_sim::{self, ResourceModel};
use sqgpu::{Error, Result};

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SQGPU_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: SQGPU_THREADS must be a positive integer, got `{threads}`");
                return ExitCode::from(2);
            }
        }
    }

    let config = match parse_config(std::env::args_os()) {
        Ok(Ok(config)) => config,
        Ok(Err(err)) => return report_error(&err),
        Err(clap_err) => {
            let _ = clap_err.print();
            return if clap_err.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };

    eprintln!("{}", serde_json::to_string(&config.describe()).unwrap_or_default());
    match run(config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => report_error(&err),
    }
}

fn report_error(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_usage() { 2 } else { 1 })
}

fn emit(bytes: &[u8], path: Option<&Path>) -> Result<()> {
    match path {
        Some(path) => fs::write(path, bytes)?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn emit_table<R: TableRow>(rows: &[R], output: &OutputTarget, meta: &Metadata) -> Result<()> {
    emit(&render_table(rows, output.format, meta)?, output.path.as_deref())
}

fn run(config: RunConfig) -> Result<()> {
    match config {
        RunConfig::Calibrate { points, output } => {
            let cal = calibrate_cost_params(points[0], points[1])?;
            println!("epsilon={}", format_float(cal.epsilon));
            println!("a={}", format_float(cal.a));
            if let Some(output) = output {
                let bytes = match output.format {
                    Format::Csv => format!("epsilon,a\n{},{}\n", format_float(cal.epsilon), format_float(cal.a)).into_bytes(),
                    Format::Json => {
                        let mut v = serde_json::to_vec_pretty(&json!({"epsilon": cal.epsilon, "a": cal.a}))?;
                        v.push(b'\n');
                        v
                    }
                };
                emit(&bytes, output.path.as_deref())?;
            }
            Ok(())
        }
        RunConfig::Cost { sweep, output } => {
            let rows = run_cost_sweep(&sweep)?;
            let scale = match sweep.scale {
                CostScale::Linear => "linear",
                CostScale::Lg10 => "lg10",
            };
            let meta = Metadata::new()
                .with("config_hash", config_hash(&sweep))
                .with("scale", scale);
            emit_table(&rows, &output, &meta)
        }
        RunConfig::Qcount { sweep, output } => {
            let rows = run_qcount_sweep(&sweep)?;
            let meta = Metadata::new().with("config_hash", config_hash(&sweep));
            emit_table(&rows, &output, &meta)
        }
        RunConfig::Simulate { sweep, emit_schedule, verbose, output, .. } => {
            if let Some(path) = &emit_schedule {
                write_schedules(&sweep, path, verbose)?;
            }
            let report = run_csr_sweep(&sweep)?;
            for v in &report.violations {
                eprintln!(
                    "warning: trial {} ({} M={}): ideal greedy makespan {} exceeds constrained {}",
                    v.trial_index, v.arch, v.nodes, v.ideal, v.constrained
                );
            }
            let meta = Metadata::new()
                .with("config_hash", sweep.config_hash())
                .with("master_seed", sweep.master_seed)
                .with("empty_batches", "counted_as_zero_latency")
                .with("ordering_violations", report.violations.len());
            emit_table(&report.points, &output, &meta)
        }
        RunConfig::Plot { input, chart, out } => {
            let table = read_table(&input)?;
            render_chart(&table, &chart, &out)
        }
    }
}

/// Greedy schedules of the injected batch under each requested model plus
/// the ideal one.
fn write_schedules(sweep: &CsrSweep, path: &Path, verbose: bool) -> Result<()> {
    let BatchSource::Injected(batch) = &sweep.source else {
        return Err(Error::Config("--emit-schedule needs --inject".into()));
    };
    let m = sweep.nodes[0];
    let shape = SystemShape::new(m, sweep.qubits_per_node, sweep.comm.total(m))?;
    let mut models: Vec<(String, ResourceModel)> = Vec::new();
    for arch in &sweep.archs {
        models.push((arch.to_string(), arch.resource_model(&shape)?));
    }
    models.push(("ideal".into(), ResourceModel::Ideal));

    let mut schedules = Vec::new();
    for (name, model) in &models {
        let result = sched_sim::simulate(batch, model)?;
        let mut entry = json!({
            "model": name,
            "makespan": result.makespan,
            "peak_utilization": result.peak_utilization,
        });
        if verbose {
            entry["steps"] = json!(result.steps);
        }
        schedules.push(entry);
    }
    let doc = json!({ "requests": batch.len(), "schedules": schedules });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}
