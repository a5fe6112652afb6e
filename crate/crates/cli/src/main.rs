use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qi_lab_core::boundary::{find_boundaries, BoundaryQuery, Contender, Variable};
use qi_lab_core::receiver::{evaluate, parse_receivers};
use qi_lab_core::sweep::{run_sweep, Axis, AxisScale, SweepSpec};
use qi_lab_core::validate::{run_validation, Suite, ValidateOptions};
use qi_lab_core::{ChernoffCache, QiError, QiScenario, Receiver, SnrSource};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "qi-lab", version, about = "Quantum illumination receiver comparison")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every receiver at one scenario.
    Snr(SnrArgs),
    /// Sweep a (kappa, N_S) grid and label the best receiver per point.
    Scan(ScanArgs),
    /// Locate where two receivers reach equal SNR along one parameter.
    Boundary(BoundaryArgs),
    /// Run the self-check suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
struct ReceiverParams {
    /// Mean background photons per mode.
    #[arg(long)]
    nb: Option<f64>,
    /// Number of mode pairs.
    #[arg(long)]
    k: Option<f64>,
    /// OPA gain G.
    #[arg(long)]
    gain: Option<f64>,
    /// PC amplitude mu.
    #[arg(long = "pc-mu")]
    pc_mu: Option<f64>,
    /// PC amplitude nu.
    #[arg(long = "pc-nu")]
    pc_nu: Option<f64>,
    /// Comma-separated receivers from dhd, opa, pc, ci.
    #[arg(long)]
    receivers: Option<String>,
}

impl ReceiverParams {
    fn apply(&self, s: &mut QiScenario) {
        if let Some(v) = self.nb {
            s.n_b = v;
        }
        if let Some(v) = self.k {
            s.k_modes = v;
        }
        if let Some(v) = self.gain {
            s.opa_gain = v;
        }
        if let Some(v) = self.pc_mu {
            s.pc_mu = v;
        }
        if let Some(v) = self.pc_nu {
            s.pc_nu = v;
        }
    }

    fn receivers(&self) -> Result<Option<Vec<Receiver>>, QiError> {
        self.receivers.as_deref().map(parse_receivers).transpose()
    }
}

#[derive(Debug, Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct SnrArgs {
    #[arg(long, default_value_t = 0.01)]
    kappa: f64,
    #[arg(long, default_value_t = 0.01)]
    ns: f64,
    #[command(flatten)]
    params: ReceiverParams,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Sweep file of `key = value` lines.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Built-in grid used when no spec file is given: fig3a, fig3b or fig5.
    #[arg(long)]
    preset: Option<String>,
    /// Override a spec key, e.g. `--set kappa_points=81`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Moment source for the QI receivers: formula or engine.
    #[arg(long = "snr-source")]
    snr_source: Option<String>,
    #[command(flatten)]
    params: ReceiverParams,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct BoundaryArgs {
    /// First contender, e.g. `dhd` or `dhd+opa+pc` for the best of several.
    #[arg(long)]
    a: String,
    /// Second contender.
    #[arg(long)]
    b: String,
    /// Swept parameter: kappa or ns.
    #[arg(long, default_value = "kappa")]
    axis: String,
    #[arg(long, default_value_t = 1e-4)]
    min: f64,
    #[arg(long, default_value_t = 1.0)]
    max: f64,
    /// Use a linear prescan instead of a logarithmic one.
    #[arg(long)]
    linear: bool,
    /// Fixed kappa when sweeping ns.
    #[arg(long, default_value_t = 0.01)]
    kappa: f64,
    /// Fixed N_S when sweeping kappa.
    #[arg(long, default_value_t = 0.01)]
    ns: f64,
    #[arg(long = "snr-source")]
    snr_source: Option<String>,
    #[command(flatten)]
    params: ReceiverParams,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Run only these suites (formula, oracle, erfc, channel). Repeatable.
    #[arg(long)]
    suite: Vec<String>,
    /// Seed for the random scenario grids.
    #[arg(long)]
    seed: Option<u64>,
    /// Relative error added to every closed-form SNR (sensitivity check).
    #[arg(long, hide = true, default_value_t = 0.0)]
    inject_formula_error: f64,
    #[command(flatten)]
    output: Output,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
struct Fail {
    code: u8,
    message: String,
}

impl Fail {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<QiError> for Fail {
    fn from(e: QiError) -> Self {
        let code = match e {
            QiError::Domain(_) | QiError::Spec(_) | QiError::Unsupported(_) => EXIT_USAGE,
            _ => EXIT_FAIL,
        };
        Self { code, message: e.to_string() }
    }
}

fn default_scenario(kappa: f64, n_s: f64) -> QiScenario {
    QiScenario::new(kappa, n_s, 30.0, 1e7)
}

fn pick_format(requested: Option<Format>, default: Format, allowed: &[Format]) -> Result<Format, Fail> {
    let f = requested.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Fail::usage(format!("format {f:?} is not available for this command").to_lowercase()))
    }
}

fn emit(output: &Output, text: &str) -> Result<(), Fail> {
    match &output.out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail { code: EXIT_FAIL, message: format!("writing {}: {e}", path.display()) })
}

fn json_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value serializes");
    s.push('\n');
    s
}

fn cmd_snr(args: &SnrArgs) -> Result<(), Fail> {
    let format = pick_format(args.output.format, Format::Json, &[Format::Json, Format::Csv])?;
    let mut scenario = default_scenario(args.kappa, args.ns);
    args.params.apply(&mut scenario);
    scenario.validate()?;
    let receivers = args.params.receivers()?.unwrap_or_else(|| Receiver::ALL.to_vec());
    let reports = receivers
        .iter()
        .map(|&r| evaluate(r, &scenario))
        .collect::<Result<Vec<_>, _>>()?;

    let text = match format {
        Format::Json => json_text(&json!({ "scenario": scenario, "receivers": reports })),
        _ => {
            let cell = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
            let mut s = String::from(
                "receiver,r0,r1,dr0,dr1,threshold,p_false_alarm,p_miss,p_error,log_p_error,snr,snr_db,snr_formula\n",
            );
            for r in &reports {
                let row = [
                    cell(r.r0),
                    cell(r.r1),
                    cell(r.dr0),
                    cell(r.dr1),
                    cell(r.threshold),
                    cell(r.p_false_alarm),
                    cell(r.p_miss),
                    cell(Some(r.p_error)),
                    cell(Some(r.log_p_error)),
                    cell(Some(r.snr)),
                    cell(Some(r.snr_db)),
                    cell(r.snr_formula),
                ];
                s.push_str(&format!("{},{}\n", r.receiver.label(), row.join(",")));
            }
            s
        }
    };
    emit(&args.output, &text)
}

fn load_spec(args: &ScanArgs) -> Result<SweepSpec, Fail> {
    let mut text = match &args.spec {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Fail::usage(format!("reading {}: {e}", path.display())))?,
        None => String::new(),
    };
    // flags are appended as spec lines so later keys win and one error list covers both
    text.push('\n');
    if let Some(p) = &args.preset {
        text.push_str(&format!("preset = {p}\n"));
    }
    let p = &args.params;
    for (key, value) in [
        ("n_b", p.nb),
        ("k_modes", p.k),
        ("opa_gain", p.gain),
        ("pc_mu", p.pc_mu),
        ("pc_nu", p.pc_nu),
    ] {
        if let Some(v) = value {
            text.push_str(&format!("{key} = {v:e}\n"));
        }
    }
    if let Some(r) = &p.receivers {
        text.push_str(&format!("receivers = {r}\n"));
    }
    if let Some(s) = &args.snr_source {
        text.push_str(&format!("snr_source = {s}\n"));
    }
    for kv in &args.overrides {
        if !kv.contains('=') {
            return Err(Fail::usage(format!("--set expects KEY=VALUE, got '{kv}'")));
        }
        text.push_str(kv);
        text.push('\n');
    }
    Ok(SweepSpec::parse(&text)?)
}

fn cmd_scan(args: &ScanArgs) -> Result<(), Fail> {
    let format = pick_format(args.output.format, Format::Csv, &[Format::Csv, Format::Json, Format::Svg])?;
    let spec = load_spec(args)?;
    let map = run_sweep(&spec, &ChernoffCache::new())?;
    let text = match format {
        Format::Csv => map.to_csv(),
        Format::Svg => map.to_svg(),
        Format::Json => {
            let regions: Vec<_> = map
                .regions()
                .into_iter()
                .map(|(r, cells)| json!({ "receiver": r, "cells": cells.len() }))
                .collect();
            json_text(&json!({
                "spec": map.spec,
                "kappas": map.kappas,
                "n_s_values": map.n_s_values,
                "cells": map.cells,
                "regions": regions,
            }))
        }
    };
    emit(&args.output, &text)
}

fn cmd_boundary(args: &BoundaryArgs) -> Result<(), Fail> {
    let format = pick_format(args.output.format, Format::Json, &[Format::Json, Format::Csv])?;
    let a: Contender = args.a.parse()?;
    let b: Contender = args.b.parse()?;
    let variable: Variable = args.axis.parse()?;
    let mut base = default_scenario(args.kappa, args.ns);
    args.params.apply(&mut base);
    if args.params.receivers.is_some() {
        return Err(Fail::usage("boundary takes its receivers from --a and --b"));
    }
    let mut query = BoundaryQuery::new(a, b, base, variable);
    let scale = if args.linear { AxisScale::Lin } else { AxisScale::Log };
    query.range = Axis { scale, min: args.min, max: args.max, points: query.range.points };
    if let Some(s) = &args.snr_source {
        query.snr_source = s.parse::<SnrSource>()?;
    }
    let report = find_boundaries(&query, &ChernoffCache::new())?;
    let text = match format {
        Format::Json => {
            let status = if report.crossings.is_empty() { "no boundary in range" } else { "found" };
            json_text(&json!({ "status": status, "base": base, "report": report }))
        }
        _ => {
            let mut s = String::from("value,snr,a_leads_below\n");
            for c in &report.crossings {
                s.push_str(&format!("{:.16e},{:.16e},{}\n", c.value, c.snr, c.a_leads_below));
            }
            s
        }
    };
    if report.crossings.is_empty() {
        eprintln!("no boundary in range [{}, {}]", report.min, report.max);
    }
    emit(&args.output, &text)
}

fn cmd_validate(args: &ValidateArgs) -> Result<(), Fail> {
    pick_format(args.output.format, Format::Json, &[Format::Json])?;
    let mut opts = ValidateOptions::default();
    if !args.suite.is_empty() {
        opts.suites = args.suite.iter().map(|s| s.parse::<Suite>()).collect::<Result<_, _>>()?;
    }
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    opts.formula_perturbation = args.inject_formula_error;
    let report = run_validation(&opts);
    for s in &report.suites {
        let verdict = if s.passed { "pass" } else { "FAIL" };
        eprintln!(
            "{:<8} {verdict} cases={} worst={:.3e} failures={}",
            s.suite.name(),
            s.cases,
            s.worst_ratio,
            s.failures.len()
        );
    }
    emit(&args.output, &json_text(&serde_json::to_value(&report).expect("report serializes")))?;
    if report.passed {
        Ok(())
    } else {
        Err(Fail { code: EXIT_FAIL, message: "validation failed".into() })
    }
}

fn configure_threads() -> Result<(), Fail> {
    let Ok(raw) = std::env::var("QI_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Fail::usage(format!("QI_LAB_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Fail { code: EXIT_FAIL, message: format!("thread pool: {e}") })
}

fn run(cli: &Cli) -> Result<(), Fail> {
    configure_threads()?;
    match &cli.command {
        Command::Snr(a) => cmd_snr(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Boundary(a) => cmd_boundary(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("qi-lab: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
