mod serve;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use modiag::aggregation::validate_graph;
use modiag::config::{ConfigError, GraphConfig};
use modiag::simulator::{builtin_scenario, builtin_scenarios, RunOptions, RunResult, ScenarioScript};
use modiag::DiagnosticState;

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "modiag", version, about = "Modular fault diagnosis: validate graphs, run scenarios, serve live")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a graph config and print every finding.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a scenario headless and export its timeline.
    Run(RunArgs),
    /// Run the live system on the wall clock and accept connections.
    Serve(ServeArgs),
    /// List the built-in scenarios.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Graph config (JSON or YAML). Defaults to the bundled shuttle config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario name or path to a scenario file.
    #[arg(long)]
    scenario: String,
    /// Timeline CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Timeline JSON output with full snapshots.
    #[arg(long)]
    json_out: Option<PathBuf>,
    /// Directory for incident recordings.
    #[arg(long)]
    incident_dir: Option<PathBuf>,
    /// Replay on the wall clock while serving the bus.
    #[arg(long)]
    serve: bool,
    #[command(flatten)]
    net: NetArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    incident_dir: Option<PathBuf>,
    #[command(flatten)]
    net: NetArgs,
}

#[derive(Args, Clone)]
struct NetArgs {
    #[arg(long, env = "MODIAG_PORT", default_value_t = 7311)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory with dashboard assets served over HTTP.
    #[arg(long)]
    assets: Option<PathBuf>,
    /// Virtual seconds per wall-clock second.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
}

impl NetArgs {
    fn tick_period(&self, tick_ms: u64) -> anyhow::Result<Duration> {
        if !(self.speed.is_finite() && self.speed > 0.0) {
            bail!("--speed must be > 0, got {}", self.speed);
        }
        Ok(Duration::from_secs_f64(tick_ms as f64 / 1000.0 / self.speed))
    }
}

/// Error carrying the process exit code.
#[derive(Debug)]
struct Exit(u8, anyhow::Error);

fn usage(err: impl Into<anyhow::Error>) -> Exit {
    Exit(EXIT_USAGE, err.into())
}

fn load_config(path: Option<&Path>) -> Result<GraphConfig, Exit> {
    let Some(path) = path else {
        return Ok(GraphConfig::reference());
    };
    let config = GraphConfig::load(path).map_err(usage)?;
    let errors: Vec<String> = validate_graph(&config)
        .iter()
        .filter(|f| f.is_error())
        .map(ToString::to_string)
        .collect();
    if !errors.is_empty() {
        return Err(usage(anyhow::anyhow!("{} is invalid:\n  {}", path.display(), errors.join("\n  "))));
    }
    Ok(config)
}

fn load_scenario(spec: &str) -> Result<ScenarioScript, Exit> {
    if let Some(s) = builtin_scenario(spec) {
        return Ok(s);
    }
    let path = Path::new(spec);
    if !path.exists() {
        let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        return Err(usage(anyhow::anyhow!(
            "no scenario `{spec}`: not a built-in ({}) and not a file",
            names.join(", ")
        )));
    }
    let scenario = ScenarioScript::load(path).map_err(usage)?;
    scenario.validate().map_err(|e| usage(anyhow::anyhow!("{}: {e}", path.display())))?;
    Ok(scenario)
}

fn cmd_validate(path: &Path) -> Result<(), Exit> {
    let config = match GraphConfig::load(path) {
        Ok(c) => c,
        Err(e @ ConfigError::Io { .. }) => return Err(usage(e)),
        Err(e) => return Err(Exit(EXIT_FAIL, e.into())),
    };
    let findings = validate_graph(&config);
    for f in &findings {
        println!("{f}");
    }
    let errors = findings.iter().filter(|f| f.is_error()).count();
    if errors > 0 {
        return Err(Exit(EXIT_FAIL, anyhow::anyhow!("{} has {errors} error(s)", path.display())));
    }
    println!(
        "{}: ok ({} groups, {} monitors, {} stubs, {} warning(s))",
        path.display(),
        config.groups.len(),
        config.monitors.len(),
        config.stubs.len(),
        findings.len()
    );
    Ok(())
}

fn write_output(path: &Path, contents: &str) -> Result<(), Exit> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(usage)
}

fn report(result: &RunResult, scenario: &ScenarioScript) {
    println!("{}: {}", scenario.name, scenario.description);
    if !result.asserts.is_empty() {
        println!("  {:>7}  {:<16} {:<8} {:<6} detail", "t_ms", "group", "expect", "result");
        for a in &result.asserts {
            println!(
                "  {:>7}  {:<16} {:<8} {:<6} {}",
                a.t_ms,
                a.group.to_string(),
                a.expected.to_string(),
                if a.passed { "pass" } else { "FAIL" },
                a.detail
            );
        }
    }
    let tl = &result.timeline;
    let ever: Vec<String> = tl.groups_ever_in(DiagnosticState::Error).iter().map(ToString::to_string).collect();
    println!("groups ever in ERROR: {} ({})", ever.len(), ever.join(", "));
    let actions: Vec<String> = tl.actions.iter().map(|a| format!("{}@{}", a.action, a.tick_ms)).collect();
    println!("actions: {}", actions.join(", "));
    for i in &tl.incidents {
        match (&i.file, i.debounced) {
            (_, true) => println!("incident {} at {} ms debounced", i.label, i.tick_ms),
            (Some(f), _) => println!("incident {} at {} ms: {} entries -> {f}", i.label, i.tick_ms, i.entries),
            (None, _) => println!("incident {} at {} ms: {} entries", i.label, i.tick_ms, i.entries),
        }
    }
    for n in &tl.notices {
        println!("notice at {} ms: {}", n.tick_ms, n.message);
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Exit> {
    let config = load_config(args.config.as_deref())?;
    let scenario = load_scenario(&args.scenario)?;
    if let Some(dir) = &args.incident_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(usage)?;
    }
    let options = RunOptions {
        incident_dir: args.incident_dir.clone(),
        epoch_offset_ms: 0,
    };
    let result = if args.serve {
        let period = args.net.tick_period(config.evaluation.tick_ms).map_err(usage)?;
        serve::replay(&scenario, &config, options, &args.net.into(), period)?
    } else {
        args.net.tick_period(config.evaluation.tick_ms).map_err(usage)?;
        modiag::simulator::run_with(&scenario, &config, options).map_err(usage)?
    };
    if let Some(out) = &args.out {
        write_output(out, &result.timeline.to_csv())?;
    }
    if let Some(out) = &args.json_out {
        write_output(out, &result.timeline.to_json())?;
    }
    report(&result, &scenario);
    if result.passed() {
        Ok(())
    } else {
        let failed = result.asserts.iter().filter(|a| !a.passed).count();
        Err(Exit(
            EXIT_FAIL,
            anyhow::anyhow!(
                "{failed} assert(s) failed, first divergent tick {} ms",
                result.first_divergent_tick().unwrap_or_default()
            ),
        ))
    }
}

fn cmd_serve(args: ServeArgs) -> Result<(), Exit> {
    let config = load_config(args.config.as_deref())?;
    let period = args.net.tick_period(config.evaluation.tick_ms).map_err(usage)?;
    if let Some(dir) = &args.incident_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(usage)?;
    }
    let epoch_offset_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or_default();
    serve::live(
        &config,
        RunOptions {
            incident_dir: args.incident_dir,
            epoch_offset_ms,
        },
        &args.net.into(),
        period,
    )
}

/// The error chain on one line, skipping causes a message already quotes.
fn render(err: &anyhow::Error) -> String {
    let mut text = err.to_string();
    for cause in err.chain().skip(1) {
        let cause = cause.to_string();
        if !text.contains(&cause) {
            text = format!("{text}: {cause}");
        }
    }
    text
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Cmd::Validate { config } => cmd_validate(&config),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Serve(args) => cmd_serve(args),
        Cmd::List => {
            for s in builtin_scenarios() {
                println!("{:<12} {}", s.name, s.description);
            }
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code, err)) => {
            eprintln!("error: {}", render(&err));
            ExitCode::from(code)
        }
    }
}
