mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::{json, Map, Value};

use commands::{Command, RunContext};
use config::{read_ini, Physical, Units};
use output::{Format, Manifest, Sink, SCHEMA_VERSION};

/// Magnetotunneling engine: closed-form actions, bounces, vortex fields and
/// a direct eigensolver to check them.
#[derive(Debug, Parser)]
#[command(name = "magnetotunnel", version)]
struct Cli {
    /// `key = value` file with energy, mass, charge, a, H, u0, N.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; nothing is written elsewhere.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Unit system of the physical parameters.
    #[arg(long, global = true, value_enum, default_value_t = Units::Natural)]
    units: Units,
    #[arg(long, global = true)]
    energy: Option<f64>,
    #[arg(long, global = true)]
    mass: Option<f64>,
    #[arg(long, global = true)]
    charge: Option<f64>,
    /// Wall half-width.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Magnetic field.
    #[arg(long = "H", global = true)]
    field: Option<f64>,
    #[arg(long, global = true)]
    u0: Option<f64>,
    #[arg(long = "N", global = true)]
    exponent: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

fn threads() -> Result<usize> {
    match std::env::var("ER_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("ER_THREADS={v} is not a count"))?;
            Ok(n.max(1))
        }
        Err(_) => Ok(1),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<magnetotunnel::Error>() {
        Some(e) if e.is_numeric() => 3,
        _ => 2,
    }
}

fn execute(cli: &Cli, sink: &mut Sink, config: &mut Value) -> Result<Value> {
    let file = match &cli.config {
        Some(p) => read_ini(p)?,
        None => Default::default(),
    };
    let physical = Physical::merge(
        file,
        &[
            ("energy", cli.energy),
            ("mass", cli.mass),
            ("charge", cli.charge),
            ("a", cli.a),
            ("H", cli.field),
            ("u0", cli.u0),
            ("N", cli.exponent),
        ],
    );
    config["physical"] = json!(physical.values);
    let threads = threads()?;
    config["threads"] = json!(threads);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")?;
    let ctx = RunContext {
        physical,
        units: cli.units,
    };
    let results = commands::run(&cli.command, &ctx, sink)?;
    let mut map = Map::new();
    for (k, v) in results {
        map.insert(k.to_string(), v);
    }
    if let Some(v) = commands::validity(&ctx) {
        map.insert("setup".into(), v);
    }
    Ok(Value::Object(map))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut sink = match Sink::new(&cli.out, cli.format) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let mut config = json!({
        "subcommand": cli.command,
        "config_file": cli.config.as_ref().map(|p| p.display().to_string()),
        "format": cli.format,
        "units": cli.units,
    });
    let outcome = execute(&cli, &mut sink, &mut config);
    let (status, code, error, results) = match outcome {
        Ok(r) => ("ok", 0u8, None, r),
        Err(e) => {
            eprintln!("error: {e:#}");
            ("error", exit_code(&e), Some(format!("{e:#}")), Value::Null)
        }
    };
    if let Value::Object(map) = &results {
        for (k, v) in map {
            if v.is_number() || v.is_string() || v.is_boolean() {
                println!("{k} = {v}");
            }
        }
    }
    let mut outputs = sink.written.clone();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: "magnetotunnel",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cli.command.name().into(),
        config,
        status,
        exit_code: code as i32,
        error,
        outputs,
        results,
    };
    let timing = json!({"wall_clock_seconds": start.elapsed().as_secs_f64()});
    let written = sink.json("manifest", &manifest).and_then(|_| sink.json("timing", &timing));
    if let Err(e) = written {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
