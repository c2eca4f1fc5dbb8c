//! Scenario-driven front end for `tau_core`: scenario parsing, the
//! subcommands, CSV and JSON output, and the randomized `--verify` suite.

pub mod commands;
pub mod report;
pub mod scenario;
pub mod verify;

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use report::{digest, write_json, Check, Failure, Output, Timings};
use scenario::Scenario;

pub type CommandFn = fn(&Scenario, &mut Timings) -> Result<Output, Failure>;

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct RunSettings {
    pub scenario: PathBuf,
    pub out: PathBuf,
    /// Worker threads for lattice sweeps; 0 uses all cores.
    pub jobs: usize,
    pub seed: u64,
    pub verify: bool,
}

pub fn command(name: &str) -> Option<CommandFn> {
    Some(match name {
        "symbol" => commands::symbol,
        "dn" => commands::dn,
        "tau" => commands::tau,
        "rh" => commands::rh,
        "ds" => commands::ds,
        _ => return None,
    })
}

fn output_path(out: &Path, configured: &Option<String>, default: String) -> PathBuf {
    out.join(configured.clone().unwrap_or(default))
}

/// Runs one subcommand and writes its outputs. Returns the exit status for
/// completed runs; schema and i/o problems come back as `Err`.
pub fn execute(name: &str, args: &RunSettings, run: CommandFn) -> Result<u8, Failure> {
    let (sc, bytes) = Scenario::load(&args.scenario)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::Io(e.to_string()))?;

    let mut timings = Timings::default();
    log::info!("running {name} on scenario `{}`", sc.name);
    let result = pool.install(|| run(&sc, &mut timings));
    let verification: Vec<Check> = if args.verify {
        timings.stage("verify_suite", || pool.install(|| verify::suite(args.seed)))
    } else {
        Vec::new()
    };

    let mut report = json!({
        "command": name,
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": { "name": sc.name, "sha256": digest(&bytes) },
    });
    let obj = report.as_object_mut().expect("object");
    let outcome = match result {
        Ok(output) => {
            for (table_name, table) in &output.tables {
                let default = format!("{table_name}.csv");
                // A configured csv path names the primary table only.
                let path = if table_name == name {
                    output_path(&args.out, &sc.outputs.csv, default)
                } else {
                    args.out.join(default)
                };
                table.write(&path)?;
            }
            obj.insert("status".into(), json!("ok"));
            obj.insert("results".into(), Value::Object(output.results));
            obj.insert("checks".into(), Value::Array(output.checks.iter().map(Check::to_json).collect()));
            let breaches = output.checks.iter().chain(&verification).filter(|c| !c.passed()).count();
            if args.verify && breaches > 0 {
                eprintln!("taucalc {name}: {breaches} check(s) above tolerance");
                1
            } else {
                0
            }
        }
        Err(f @ Failure::Numerical { .. }) => {
            if let Failure::Numerical { stage, message } = &f {
                obj.insert("status".into(), json!("failed"));
                obj.insert("failing_stage".into(), json!(stage));
                obj.insert("error".into(), json!(message));
            }
            eprintln!("taucalc {name}: {f}");
            f.exit_code()
        }
        Err(f) => return Err(f),
    };
    if args.verify {
        obj.insert(
            "verification".into(),
            json!({ "seed": args.seed, "checks": verification.iter().map(Check::to_json).collect::<Vec<_>>() }),
        );
    }
    obj.insert("exit_status".into(), json!(outcome));
    write_json(&output_path(&args.out, &sc.outputs.report, format!("{name}.json")), &report)?;
    write_json(&args.out.join(format!("{name}.timings.json")), &timings.to_json())?;
    Ok(outcome)
}
