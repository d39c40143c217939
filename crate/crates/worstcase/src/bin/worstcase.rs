//! Thin command-line front end over the library: load a JSON problem spec,
//! run the reformulation builders, the embedded solver, the verification
//! suites or the grid oracles, and emit canonical JSON reports.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use worstcase::cli::{self, CmdOutput, Mode};

#[derive(Parser)]
#[command(name = "worstcase", version, about = "Robust and distributionally robust reformulation engine")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Feasibility tolerance override.
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    /// Optimality tolerance override.
    #[arg(long, global = true)]
    tol_opt: Option<f64>,
    /// Seed for randomized verification runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Grid resolution override for oracle runs.
    #[arg(long, global = true)]
    grid_res: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Primal,
    Dual,
    Both,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Primal => Mode::Primal,
            ModeArg::Dual => Mode::Dual,
            ModeArg::Both => Mode::Both,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emit the finite convex reformulation of a problem spec as JSON.
    Reformulate {
        spec: PathBuf,
        /// Output path (stdout when omitted).
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[arg(long)]
        mode: Option<ModeArg>,
    },
    /// Build, solve and report values, distributions and duality verdicts.
    Solve {
        spec: PathBuf,
        #[arg(long, default_value = "both")]
        mode: ModeArg,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run an invariant suite against the spec's objects.
    Verify {
        spec: PathBuf,
        #[arg(long, default_value = "conjugates")]
        suite: String,
    },
    /// Run the brute-force grid oracle.
    Oracle {
        spec: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// Spec text with tolerance overrides spliced in; `WORSTCASE_CONFIG` may
/// point at a JSON file whose fields are defaults for absent spec fields.
fn load_text(path: &PathBuf, args: &Args) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("invalid JSON: {e}"))?;
    if let Ok(cfg_path) = std::env::var("WORSTCASE_CONFIG") {
        if let Ok(cfg_text) = std::fs::read_to_string(&cfg_path) {
            if let Ok(cfg) = serde_json::from_str::<serde_json::Value>(&cfg_text) {
                for key in ["tolerances", "solver", "oracle"] {
                    if v.get(key).is_none() {
                        if let Some(val) = cfg.get(key) {
                            v[key] = val.clone();
                        }
                    }
                }
            }
        }
    }
    if args.tol_feas.is_some() || args.tol_opt.is_some() {
        let t = v["tolerances"].clone();
        let mut t = if t.is_object() { t } else { serde_json::json!({}) };
        if let Some(f) = args.tol_feas {
            t["feas"] = serde_json::json!(f);
        }
        if let Some(o) = args.tol_opt {
            t["opt"] = serde_json::json!(o);
        }
        v["tolerances"] = t;
    }
    Ok(v.to_string())
}

fn emit(out: &CmdOutput, target: Option<&PathBuf>) -> ExitCode {
    let text = cli::canonical_pretty(&out.report);
    match target {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(4);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(out.exit as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let (spec_path, run): (&PathBuf, Box<dyn Fn(&str) -> CmdOutput>) = match &args.command {
        Command::Reformulate { spec, mode, .. } => {
            let mode = mode.map(Mode::from);
            (spec, Box::new(move |t: &str| cli::cmd_reformulate(t, mode)))
        }
        Command::Solve { spec, mode, .. } => {
            let mode = Mode::from(*mode);
            (spec, Box::new(move |t: &str| cli::cmd_solve(t, mode)))
        }
        Command::Verify { spec, suite } => {
            let suite = suite.clone();
            let seed = args.seed;
            (
                spec,
                Box::new(move |t: &str| cli::cmd_verify(t, &suite, seed)),
            )
        }
        Command::Oracle { spec, .. } => {
            let res = args.grid_res;
            (spec, Box::new(move |t: &str| cli::cmd_oracle(t, res)))
        }
    };
    let text = match load_text(spec_path, &args) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let out = run(&text);
    let target = match &args.command {
        Command::Reformulate { out, .. } | Command::Solve { out, .. } | Command::Oracle { out, .. } => {
            out.as_ref()
        }
        Command::Verify { .. } => None,
    };
    emit(&out, target)
}
