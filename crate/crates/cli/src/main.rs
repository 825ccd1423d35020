//! `pneusid` command-line front end.
//!
//! Every run prints one JSON object on stdout. Exit status: 0 success,
//! 1 usage error, 2 data error, 3 numeric failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pneusid::actuator::{find_cylinder, find_valve, presets};
use pneusid::harness::flow::{cmd_grid, export_flow_curve, flow_table_csv};
use pneusid::harness::{evaluate_logs, generate_synthetic, read_log, write_log, EvalConfig, SynthConfig};
use pneusid::sim::rollout;
use pneusid::sysid::{identify, IdentifyConfig};
use pneusid::{GasConstants, PneumaticModel, SensorLog, SimSettings, ATMOSPHERIC_PA};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const CONFIG_ENV: &str = "PNEUSID_CONFIG";

#[derive(Parser)]
#[command(name = "pneusid", version, about = "Pneumatic chamber simulation and identification")]
struct Cli {
    /// JSON config with optional `synth`, `identify`, `eval` and `sim` sections.
    /// Falls back to $PNEUSID_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed for synthetic data.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate identification and validation logs from a truth model.
    Synth(ModelArgs),
    /// Identify a model from fixed-volume step logs.
    Identify {
        /// Log files, or directories of logs.
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Predict the pressure of a whole log from its first sample.
    Predict {
        #[arg(long)]
        model: PathBuf,
        log: PathBuf,
    },
    /// Score short-horizon predictions of a model on logs.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        logs: Vec<PathBuf>,
    },
    /// Steady-state valve flow over a command grid (l/min).
    FlowCurve {
        #[command(flatten)]
        model: ModelArgs,
        /// Upstream pressure (Pa absolute). Defaults to 60 kPa above ambient.
        #[arg(long)]
        supply: Option<f64>,
        #[arg(long, default_value_t = ATMOSPHERIC_PA)]
        ambient: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// List the built-in cylinder and valve presets.
    Presets,
}

#[derive(Args)]
struct ModelArgs {
    /// Model JSON file; overrides the preset names.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "AIR37")]
    cylinder: String,
    #[arg(long, default_value = "valve1")]
    valve: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default)]
struct Config {
    synth: SynthConfig,
    identify: IdentifyConfig,
    eval: EvalSection,
    sim: SimSettings,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
struct EvalSection {
    window_s: f64,
    overlap: f64,
    fixed_range_pa: Option<f64>,
    /// Acceptance threshold on percent-of-range.
    max_percent: Option<f64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        let d = EvalConfig::default();
        EvalSection { window_s: d.window_s, overlap: d.overlap, fixed_range_pa: d.fixed_range_pa, max_percent: None }
    }
}

enum Failure {
    Usage(String),
    Core(pneusid::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) if e.is_numeric() => 3,
            Failure::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<pneusid::Error> for Failure {
    fn from(e: pneusid::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

type Outcome = Result<Value, Failure>;

fn load_config(path: Option<&Path>) -> Result<Config, Failure> {
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    match path.map(Path::to_path_buf).or(env_path) {
        None => Ok(Config::default()),
        Some(p) => {
            let text = fs::read_to_string(&p)
                .map_err(|e| Failure::Core(pneusid::Error::InvalidInput(format!("config {}: {e}", p.display()))))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Core(pneusid::Error::InvalidInput(format!("config {}: {e}", p.display()))))
        }
    }
}

fn required_out(out: Option<&Path>, what: &str) -> Result<PathBuf, Failure> {
    out.map(Path::to_path_buf).ok_or_else(|| Failure::Usage(format!("--out <{what}> is required")))
}

fn load_model(path: &Path) -> Result<PneumaticModel, Failure> {
    Ok(PneumaticModel::from_json(&fs::read_to_string(path)?)?)
}

fn model_from_args(args: &ModelArgs) -> Result<PneumaticModel, Failure> {
    if let Some(p) = &args.model {
        return load_model(p);
    }
    let cyl = find_cylinder(&args.cylinder).ok_or_else(|| Failure::Usage(format!("unknown cylinder {}", args.cylinder)))?;
    let valve = find_valve(&args.valve).ok_or_else(|| Failure::Usage(format!("unknown valve {}", args.valve)))?;
    Ok(PneumaticModel::from_parts(GasConstants::default(), valve, cyl))
}

/// Expands directories into their CSV files, preferring names that start
/// with `prefix`.
fn collect_logs(paths: &[PathBuf], prefix: &str) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if !p.is_dir() {
            files.push(p.clone());
            continue;
        }
        let mut csv: Vec<PathBuf> = fs::read_dir(p)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|f| f.extension().is_some_and(|x| x == "csv"))
            .collect();
        csv.sort();
        let named = |f: &PathBuf| f.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with(prefix));
        if csv.iter().any(named) {
            csv.retain(named);
        }
        files.extend(csv);
    }
    if files.is_empty() {
        return Err(Failure::Usage("no log files found".into()));
    }
    Ok(files)
}

fn read_logs(files: &[PathBuf]) -> Result<Vec<SensorLog>, Failure> {
    files.iter().map(|f| read_log(f).map_err(Failure::from)).collect()
}

fn synth(cli: &Cli, config: &Config, args: &ModelArgs) -> Outcome {
    let dir = required_out(cli.out.as_deref(), "dir")?;
    let truth = model_from_args(args)?;
    let logs = generate_synthetic(&truth, &config.synth, cli.seed)?;
    fs::create_dir_all(&dir)?;
    let mut written = Vec::new();
    for (i, log) in logs.iter().enumerate() {
        let name = log.meta.scenario.clone().unwrap_or_else(|| format!("log-{i:02}"));
        let path = dir.join(format!("{name}.csv"));
        write_log(log, &path)?;
        written.push(json!({ "file": path, "scenario": name, "samples": log.len(), "dt": log.dt }));
    }
    let truth_path = dir.join("truth.json");
    fs::write(&truth_path, truth.to_json()?)?;
    Ok(json!({ "seed": cli.seed, "truth": truth_path, "logs": written }))
}

fn identify_cmd(cli: &Cli, config: &Config, logs: &[PathBuf]) -> Outcome {
    let out = required_out(cli.out.as_deref(), "model.json")?;
    let files = collect_logs(logs, "ident")?;
    let logs = read_logs(&files)?;
    let id = identify(&logs, &config.identify)?;
    let gas = pneusid::gas::derive_constants(&config.identify.gas)?;
    fs::write(&out, id.to_model(gas).to_json()?)?;
    Ok(json!({
        "model": out,
        "logs": files.len(),
        "valve": id.valve,
        "volume_map": id.volume_map,
        "leak_area": id.leak_area,
        "stages": id.diagnostics.stages,
        "warnings": id.diagnostics.warnings,
    }))
}

fn predict(cli: &Cli, config: &Config, model: &Path, log: &Path) -> Outcome {
    let out = required_out(cli.out.as_deref(), "prediction.csv")?;
    let model = load_model(model)?;
    let log = read_log(log)?;
    let pred = rollout(log.p[0], &log.trajectory()?, &model, &config.sim)?;
    let mut csv = String::from("t,p_pred,p\n");
    for k in 0..log.len() {
        csv.push_str(&format!("{},{},{}\n", log.t[k], pred.pressure[k], log.p[k]));
    }
    fs::write(&out, csv)?;
    let ss: f64 = pred.pressure.iter().zip(&log.p).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(json!({
        "prediction": out,
        "samples": log.len(),
        "rmse_pa": (ss / log.len() as f64).sqrt(),
        "clamped_samples": pred.clamped_samples,
    }))
}

fn eval(cli: &Cli, config: &Config, model: &Path, logs: &[PathBuf]) -> Outcome {
    let model = load_model(model)?;
    let files = collect_logs(logs, "valid")?;
    let logs = read_logs(&files)?;
    let e = &config.eval;
    let cfg = EvalConfig { window_s: e.window_s, overlap: e.overlap, fixed_range_pa: e.fixed_range_pa, sim: config.sim };
    let report = evaluate_logs(&logs, &model, &cfg)?;
    let mut summary = json!({
        "rmse_pa": report.rmse_pa,
        "percent_of_range": report.percent_of_range,
        "windows": report.windows,
        "window_s": report.window_s,
        "range_pa": report.range_pa,
        "logs": files.len(),
        "failed_windows": report.failures.len(),
    });
    if let Some(max) = e.max_percent {
        summary["max_percent"] = json!(max);
        summary["within_threshold"] = json!(report.percent_of_range <= max);
    }
    if let Some(out) = &cli.out {
        fs::write(out, serde_json::to_string_pretty(&report).map_err(pneusid::Error::from)? + "\n")?;
        summary["report"] = json!(out);
    }
    Ok(summary)
}

fn flow_curve(cli: &Cli, args: &ModelArgs, supply: Option<f64>, ambient: f64, points: usize) -> Outcome {
    if points == 0 {
        return Err(Failure::Usage("--points must be positive".into()));
    }
    let model = model_from_args(args)?;
    let supply = supply.unwrap_or(ambient + 60_000.0);
    let v = &model.valve;
    let table = export_flow_curve(v, &model.gas, supply, ambient, &cmd_grid(v.cmd_min, v.cmd_max, points))?;
    let mut summary = json!({ "valve": v.name, "supply_pa": supply, "ambient_pa": ambient, "points": table });
    if let Some(out) = &cli.out {
        fs::write(out, flow_table_csv(&table))?;
        summary["table"] = json!(out);
    }
    Ok(summary)
}

fn presets_cmd(cli: &Cli) -> Outcome {
    let (cylinders, valves) = presets();
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        for c in &cylinders {
            fs::write(dir.join(format!("{}.json", c.name)), serde_json::to_string_pretty(c).map_err(pneusid::Error::from)? + "\n")?;
        }
        for v in &valves {
            fs::write(dir.join(format!("{}.json", v.name)), serde_json::to_string_pretty(v).map_err(pneusid::Error::from)? + "\n")?;
        }
    }
    Ok(json!({ "cylinders": cylinders, "valves": valves }))
}

fn run(cli: &Cli) -> Outcome {
    let config = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Synth(args) => synth(cli, &config, args),
        Command::Identify { logs } => identify_cmd(cli, &config, logs),
        Command::Predict { model, log } => predict(cli, &config, model, log),
        Command::Eval { model, logs } => eval(cli, &config, model, logs),
        Command::FlowCurve { model, supply, ambient, points } => flow_curve(cli, model, *supply, *ambient, *points),
        Command::Presets => presets_cmd(cli),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Synth(_) => "synth",
        Command::Identify { .. } => "identify",
        Command::Predict { .. } => "predict",
        Command::Eval { .. } => "eval",
        Command::FlowCurve { .. } => "flow-curve",
        Command::Presets => "presets",
    }
}

/// Prints the summary line; a closed stdout is not an error worth a panic.
fn emit(summary: &Value) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{summary}");
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            if code != 0 {
                emit(&json!({ "ok": false, "error": e.kind().to_string(), "exit_code": 1 }));
            }
            return ExitCode::from(code);
        }
    };
    let command = command_name(&cli.command);
    match run(&cli) {
        Ok(mut summary) => {
            summary["command"] = json!(command);
            summary["ok"] = json!(true);
            emit(&summary);
            ExitCode::SUCCESS
        }
        Err(f) => {
            let code = f.exit_code();
            eprintln!("error: {f}");
            emit(&json!({ "command": command, "ok": false, "error": f.to_string(), "exit_code": code }));
            ExitCode::from(code)
        }
    }
}
