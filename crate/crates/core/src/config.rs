//! Command-line and config-file parsing.
//!
//! A config file is a flat JSON object whose keys are flag names without the
//! leading dashes. Precedence is flag, then file, then built-in default.
//! Unknown keys are rejected.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::{json, Value};

use crate::cost_model::{CostParams, SystemShape};
use crate::error::{Error, Result};
use crate::experiments::{
    BatchSource, CommRule, CostScale, CostSweep, CostVariant, CsrSweep, QcountSweep,
    DEFAULT_COMM_PER_NODE, DEFAULT_NODES, DEFAULT_NODE_BURSTS, DEFAULT_QUBITS_PER_NODE,
    DEFAULT_QUBIT_BURSTS, DEFAULT_SEED, DEFAULT_TRIALS,
};
use crate::report::{ChartSpec, Format};
use crate::sched_sim::Architecture;
use crate::workload::{Batch, BurstLevel};

/// Accepts a JSON string, number, or array (joined with commas) so config
/// files can write `"trials": 100` or `"burst": [0.1, 0.2]`.
fn flexible<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    let v = Option::<Value>::deserialize(d)?;
    Ok(v.map(|v| scalar_text(&v)))
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(scalar_text).collect::<Vec<_>>().join(","),
        other => other.to_string(),
    }
}

fn flexible_list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    let v = Option::<Value>::deserialize(d)?;
    Ok(match v {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items.iter().map(scalar_text).collect(),
        Some(other) => vec![scalar_text(&other)],
    })
}

#[derive(Debug, Parser)]
#[command(name = "sqgpu", version, about = "Shared vs dedicated communication qubits: cost model and burst simulator")]
pub struct Cli {
    /// JSON file of default flag values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit (epsilon, a) to two (qubits, price) points.
    Calibrate(CalibrateArgs),
    /// Cost table over an (M, N) grid.
    Cost(CostArgs),
    /// Communication-qubit budgets for partial pairing.
    Qcount(QcountArgs),
    /// Monte-Carlo CSR sweep.
    Simulate(SimulateArgs),
    /// Line chart of a CSV/JSON table as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,

    /// csv or json; defaults from the output extension.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateArgs {
    /// `qubits:price`, given twice.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible_list")]
    pub point: Vec<String>,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostArgs {
    /// Node counts: `6`, `1:64`, `1:64:2`, or `2,4,8`.
    #[arg(long = "M")]
    #[serde(default, rename = "M", deserialize_with = "flexible")]
    pub m: Option<String>,

    /// Qubits per node, same syntax as `--M`.
    #[arg(long = "N")]
    #[serde(default, rename = "N", deserialize_with = "flexible")]
    pub n: Option<String>,

    /// Shared side sized for R simultaneous gates.
    #[arg(long, conflicts_with_all = ["even", "uneven"])]
    #[serde(default, deserialize_with = "flexible")]
    pub partial: Option<String>,

    /// Evenly distributed engagement of x qubits per node.
    #[arg(long, conflicts_with = "uneven")]
    #[serde(default, deserialize_with = "flexible")]
    pub even: Option<String>,

    /// Engaged nodes y for `--even` (default M).
    #[arg(long, requires = "even")]
    #[serde(default, deserialize_with = "flexible")]
    pub y: Option<String>,

    /// Unevenly distributed engagement with R gates.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub uneven: Option<String>,

    /// JSON file with epsilon, a, b, d.
    #[arg(long)]
    #[serde(default)]
    pub params: Option<PathBuf>,

    /// Emit lg10 of each cost.
    #[arg(long)]
    #[serde(default)]
    pub lg: bool,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QcountArgs {
    /// E (even, vary x) or U (uneven, vary R).
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub subcase: Option<String>,

    #[arg(long = "M")]
    #[serde(default, rename = "M", deserialize_with = "flexible")]
    pub m: Option<String>,

    #[arg(long = "N")]
    #[serde(default, rename = "N", deserialize_with = "flexible")]
    pub n: Option<String>,

    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub x: Option<String>,

    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub y: Option<String>,

    #[arg(long = "R")]
    #[serde(default, rename = "R", deserialize_with = "flexible")]
    pub r: Option<String>,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// dedicated, shared, or both.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub arch: Option<String>,

    /// qubit or node.
    #[arg(long, conflicts_with = "inject")]
    #[serde(default, deserialize_with = "flexible")]
    pub level: Option<String>,

    #[arg(long = "M")]
    #[serde(default, rename = "M", deserialize_with = "flexible")]
    pub m: Option<String>,

    #[arg(long = "N")]
    #[serde(default, rename = "N", deserialize_with = "flexible")]
    pub n: Option<String>,

    /// Total communication qubits: an integer, or `kM` for k per node.
    #[arg(long = "Q")]
    #[serde(default, rename = "Q", deserialize_with = "flexible")]
    pub q: Option<String>,

    /// Comma-separated burst ratios in [0, 1].
    #[arg(long, conflicts_with = "inject")]
    #[serde(default, deserialize_with = "flexible")]
    pub burst: Option<String>,

    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub trials: Option<String>,

    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub seed: Option<String>,

    /// Replay a JSON-lines batch instead of generating one.
    #[arg(long)]
    #[serde(default)]
    pub inject: Option<PathBuf>,

    /// With `--inject`, write the schedules as JSON here.
    #[arg(long, requires = "inject")]
    #[serde(default, rename = "emit-schedule")]
    pub emit_schedule: Option<PathBuf>,

    /// Include per-step request lists in the emitted schedules.
    #[arg(long)]
    #[serde(default)]
    pub verbose: bool,

    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotArgs {
    #[arg(long = "in")]
    #[serde(default, rename = "in")]
    pub input: Option<PathBuf>,

    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub x: Option<String>,

    /// Comma-separated y columns.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub y: Option<String>,

    #[arg(long)]
    #[serde(default)]
    pub logy: bool,

    /// One series per distinct value of this column.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub group: Option<String>,

    /// `column=value`; repeatable.
    #[arg(long)]
    #[serde(default, deserialize_with = "flexible_list")]
    pub filter: Vec<String>,

    #[arg(long)]
    #[serde(default, deserialize_with = "flexible")]
    pub title: Option<String>,

    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
}

// ─── merging ──────────────────────────────────────────────────────────────

trait Merge {
    /// `self` holds flag values, `file` config-file values.
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_fields {
    ($ty:ty { $($opt:ident),* ; $($flag:ident),* ; $($list:ident),* ; $($nested:ident),* }) => {
        impl Merge for $ty {
            #[allow(unused_mut)]
            fn merge(mut self, file: Self) -> Self {
                $( self.$opt = self.$opt.or(file.$opt); )*
                $( self.$flag = self.$flag || file.$flag; )*
                $( if self.$list.is_empty() { self.$list = file.$list; } )*
                $( self.$nested = self.$nested.merge(file.$nested); )*
                self
            }
        }
    };
}

merge_fields!(OutputArgs { out, format ; ; ; });
merge_fields!(CalibrateArgs { ; ; point ; output });
merge_fields!(CostArgs { m, n, partial, even, y, uneven, params ; lg ; ; output });
merge_fields!(QcountArgs { subcase, m, n, x, y, r ; ; ; output });
merge_fields!(SimulateArgs { arch, level, m, n, q, burst, trials, seed, inject, emit_schedule ; verbose ; ; output });
merge_fields!(PlotArgs { input, x, y, group, title, out ; logy ; filter ; });

// ─── resolved configuration ───────────────────────────────────────────────

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputTarget {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Calibrate {
        points: [(u32, f64); 2],
        output: Option<OutputTarget>,
    },
    Cost {
        sweep: CostSweep,
        output: OutputTarget,
    },
    Qcount {
        sweep: QcountSweep,
        output: OutputTarget,
    },
    Simulate {
        sweep: CsrSweep,
        inject: Option<PathBuf>,
        emit_schedule: Option<PathBuf>,
        verbose: bool,
        output: OutputTarget,
    },
    Plot {
        input: PathBuf,
        chart: ChartSpec,
        out: PathBuf,
    },
}

impl RunConfig {
    /// JSON view printed to stderr before each run. Injected batches are
    /// summarised by path and size.
    pub fn describe(&self) -> Value {
        match self {
            RunConfig::Calibrate { points, output } => json!({
                "subcommand": "calibrate", "points": points, "output": output,
            }),
            RunConfig::Cost { sweep, output } => json!({
                "subcommand": "cost", "sweep": sweep, "output": output,
            }),
            RunConfig::Qcount { sweep, output } => json!({
                "subcommand": "qcount", "sweep": sweep, "output": output,
            }),
            RunConfig::Simulate { sweep, inject, emit_schedule, verbose, output } => {
                let mut sweep_json = serde_json::to_value(sweep).unwrap_or(Value::Null);
                if let (Some(path), BatchSource::Injected(batch)) = (inject, &sweep.source) {
                    sweep_json["source"] = json!({
                        "injected": { "path": path, "requests": batch.len() }
                    });
                }
                json!({
                    "subcommand": "simulate", "sweep": sweep_json,
                    "emit_schedule": emit_schedule, "verbose": verbose, "output": output,
                })
            }
            RunConfig::Plot { input, chart, out } => json!({
                "subcommand": "plot", "in": input, "chart": chart, "out": out,
            }),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(flag: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| cfg_err(format!("--{flag}: cannot parse `{s}` as a number")))
}

/// `a`, `a:b`, `a:b:step` (inclusive), or a comma list of those.
pub fn parse_range(flag: &str, s: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let fields: Vec<&str> = part.split(':').collect();
        match fields[..] {
            [v] => out.push(parse_num(flag, v)?),
            [a, b] | [a, b, _] => {
                let (a, b): (u64, u64) = (parse_num(flag, a)?, parse_num(flag, b)?);
                let step: u64 = if fields.len() == 3 { parse_num(flag, fields[2])? } else { 1 };
                if step == 0 || b < a {
                    return Err(cfg_err(format!("--{flag}: empty range `{part}`")));
                }
                out.extend((a..=b).step_by(step as usize));
            }
            _ => return Err(cfg_err(format!("--{flag}: cannot parse range `{part}`"))),
        }
    }
    Ok(out)
}

fn parse_range_u32(flag: &str, s: &str) -> Result<Vec<u32>> {
    parse_range(flag, s)?
        .into_iter()
        .map(|v| u32::try_from(v).map_err(|_| cfg_err(format!("--{flag}: {v} is too large"))))
        .collect()
}

fn parse_bursts(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            let v: f64 = parse_num("burst", p)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(cfg_err(format!("--burst: {v} is outside [0, 1]")));
            }
            Ok(v)
        })
        .collect()
}

fn parse_comm(s: &str) -> Result<CommRule> {
    let s = s.trim();
    match s.strip_suffix('M') {
        Some(k) => Ok(CommRule::PerNode(parse_num("Q", k)?)),
        None => Ok(CommRule::Total(parse_num("Q", s)?)),
    }
}

fn resolve_output(args: OutputArgs) -> Result<OutputTarget> {
    let format = match (&args.format, &args.out) {
        (Some(f), _) => f.parse()?,
        (None, Some(path)) => Format::from_path(path),
        (None, None) => Format::Csv,
    };
    Ok(OutputTarget { path: args.out, format })
}

fn load_params(path: Option<&Path>) -> Result<CostParams> {
    let Some(path) = path else {
        return Ok(CostParams::REFERENCE);
    };
    let text = fs::read_to_string(path)?;
    let params: CostParams = serde_json::from_str(&text)
        .map_err(|e| cfg_err(format!("--params {}: {e}", path.display())))?;
    params.validate()?;
    Ok(params)
}

fn resolve_calibrate(a: CalibrateArgs) -> Result<RunConfig> {
    if a.point.len() != 2 {
        return Err(cfg_err(format!("calibrate needs exactly two --point values, got {}", a.point.len())));
    }
    let mut points = [(0u32, 0f64); 2];
    for (slot, p) in points.iter_mut().zip(&a.point) {
        let (n, price) = p
            .split_once(':')
            .ok_or_else(|| cfg_err(format!("--point: expected qubits:price, got `{p}`")))?;
        *slot = (parse_num("point", n)?, parse_num("point", price)?);
    }
    let output = if a.output.out.is_some() {
        Some(resolve_output(a.output)?)
    } else {
        None
    };
    Ok(RunConfig::Calibrate { points, output })
}

fn resolve_cost(a: CostArgs) -> Result<RunConfig> {
    let chosen = [a.partial.is_some(), a.even.is_some(), a.uneven.is_some()];
    if chosen.iter().filter(|&&c| c).count() > 1 {
        return Err(cfg_err("--partial, --even and --uneven are mutually exclusive"));
    }
    if a.y.is_some() && a.even.is_none() {
        return Err(cfg_err("--y only applies with --even"));
    }
    let variant = if let Some(r) = &a.partial {
        CostVariant::Partial { r: parse_num("partial", r)? }
    } else if let Some(x) = &a.even {
        CostVariant::Even {
            x: parse_num("even", x)?,
            y: a.y.as_deref().map(|y| parse_num("y", y)).transpose()?,
        }
    } else if let Some(r) = &a.uneven {
        CostVariant::Uneven { r: parse_num("uneven", r)? }
    } else {
        CostVariant::Full
    };
    let sweep = CostSweep {
        nodes: parse_range_u32("M", a.m.as_deref().unwrap_or("6"))?,
        qubits_per_node: parse_range_u32("N", a.n.as_deref().unwrap_or("2:300"))?,
        params: load_params(a.params.as_deref())?,
        scale: if a.lg { CostScale::Lg10 } else { CostScale::Linear },
        variant,
    };
    Ok(RunConfig::Cost {
        sweep,
        output: resolve_output(a.output)?,
    })
}

fn single(flag: &str, s: &str) -> Result<u32> {
    match parse_range_u32(flag, s)?[..] {
        [v] => Ok(v),
        _ => Err(cfg_err(format!("--{flag} takes a single value here"))),
    }
}

fn resolve_qcount(a: QcountArgs) -> Result<RunConfig> {
    let subcase = a.subcase.as_deref().unwrap_or("E");
    let nodes = single("M", a.m.as_deref().unwrap_or("6"))?;
    let sweep = match subcase {
        "E" | "e" => {
            if a.r.is_some() || a.n.is_some() {
                return Err(cfg_err("subcase E takes --x and --y, not --R or --N"));
            }
            QcountSweep::Even {
                nodes,
                y: single("y", a.y.as_deref().unwrap_or("3"))?,
                x: parse_range_u32("x", a.x.as_deref().unwrap_or("1:50"))?,
            }
        }
        "U" | "u" => {
            if a.x.is_some() || a.y.is_some() {
                return Err(cfg_err("subcase U takes --N and --R, not --x or --y"));
            }
            QcountSweep::Uneven {
                nodes,
                qubits_per_node: single("N", a.n.as_deref().unwrap_or("50"))?,
                r: parse_range("R", a.r.as_deref().unwrap_or("1:100"))?,
            }
        }
        other => return Err(cfg_err(format!("--subcase: expected E or U, got `{other}`"))),
    };
    Ok(RunConfig::Qcount {
        sweep,
        output: resolve_output(a.output)?,
    })
}

fn resolve_simulate(a: SimulateArgs) -> Result<RunConfig> {
    if a.inject.is_some() && (a.burst.is_some() || a.level.is_some()) {
        return Err(cfg_err("--inject replaces --level and --burst"));
    }
    if a.emit_schedule.is_some() && a.inject.is_none() {
        return Err(cfg_err("--emit-schedule needs --inject"));
    }
    let archs = match a.arch.as_deref().unwrap_or("both") {
        "both" => Architecture::ALL.to_vec(),
        other => vec![other.parse()?],
    };
    let trials = parse_num("trials", a.trials.as_deref().unwrap_or(&DEFAULT_TRIALS.to_string()))?;
    let master_seed = parse_num("seed", a.seed.as_deref().unwrap_or(&DEFAULT_SEED.to_string()))?;
    let qubits_per_node = single("N", a.n.as_deref().unwrap_or(&DEFAULT_QUBITS_PER_NODE.to_string()))?;
    let comm = match &a.q {
        Some(q) => parse_comm(q)?,
        None => CommRule::PerNode(DEFAULT_COMM_PER_NODE),
    };

    let (nodes, source) = if let Some(path) = &a.inject {
        let m = single("M", a.m.as_deref().ok_or_else(|| cfg_err("--inject needs a single --M"))?)?;
        let shape = SystemShape::new(m, qubits_per_node, comm.total(m))?;
        let file = fs::File::open(path)?;
        let batch = Batch::read_jsonl(std::io::BufReader::new(file), shape)?;
        (vec![m], BatchSource::Injected(batch))
    } else {
        let level: BurstLevel = a.level.as_deref().unwrap_or("qubit").parse()?;
        let burst_ratios = match &a.burst {
            Some(b) => parse_bursts(b)?,
            None => match level {
                BurstLevel::Qubit => DEFAULT_QUBIT_BURSTS.to_vec(),
                BurstLevel::Node => DEFAULT_NODE_BURSTS.to_vec(),
            },
        };
        let nodes = match &a.m {
            Some(m) => parse_range_u32("M", m)?,
            None => DEFAULT_NODES.to_vec(),
        };
        (nodes, BatchSource::Generated { level, burst_ratios })
    };

    Ok(RunConfig::Simulate {
        sweep: CsrSweep {
            archs,
            nodes,
            qubits_per_node,
            comm,
            source,
            trials,
            master_seed,
        },
        inject: a.inject,
        emit_schedule: a.emit_schedule,
        verbose: a.verbose,
        output: resolve_output(a.output)?,
    })
}

fn resolve_plot(a: PlotArgs) -> Result<RunConfig> {
    let input = a.input.ok_or_else(|| cfg_err("plot needs --in"))?;
    let out = a.out.ok_or_else(|| cfg_err("plot needs --out"))?;
    let x = a.x.ok_or_else(|| cfg_err("plot needs --x"))?;
    let y: Vec<String> = a
        .y
        .ok_or_else(|| cfg_err("plot needs --y"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let filters = a
        .filter
        .iter()
        .map(|f| {
            f.split_once('=')
                .map(|(c, v)| (c.to_string(), v.to_string()))
                .ok_or_else(|| cfg_err(format!("--filter: expected column=value, got `{f}`")))
        })
        .collect::<Result<_>>()?;
    Ok(RunConfig::Plot {
        input,
        out,
        chart: ChartSpec {
            x,
            y,
            logy: a.logy,
            group_by: a.group,
            filters,
            title: a.title,
        },
    })
}

fn read_config_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| cfg_err(format!("config file {}: {e}", path.display())))
}

fn with_file<T: Merge + Default + for<'de> Deserialize<'de>>(flags: T, config: Option<&Path>) -> Result<T> {
    Ok(match config {
        Some(path) => flags.merge(read_config_file(path)?),
        None => flags,
    })
}

/// Resolves parsed flags plus the optional `--config` file into a run.
pub fn resolve(cli: Cli) -> Result<RunConfig> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Calibrate(a) => resolve_calibrate(with_file(a, file)?),
        Command::Cost(a) => resolve_cost(with_file(a, file)?),
        Command::Qcount(a) => resolve_qcount(with_file(a, file)?),
        Command::Simulate(a) => resolve_simulate(with_file(a, file)?),
        Command::Plot(a) => resolve_plot(with_file(a, file)?),
    }
}

/// Parses `argv` (program name first). Clap errors, including `--help`,
/// come back unchanged so the caller can print them with the right status.
pub fn parse_config<I, T>(argv: I) -> std::result::Result<Result<RunConfig>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    Ok(resolve(cli))
}
