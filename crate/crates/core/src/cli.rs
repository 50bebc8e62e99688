//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or load error, 2 solver did not converge,
//! 3 certificate failure or diagnostic violation.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::certify::certify;
use crate::diagnostics::{check_fpt_lsc_at, check_lsc_at, check_quasiconcave, FptOptions, DEFAULT_RADII};
use crate::examples;
use crate::expr::{parse, Expr};
use crate::geometry::ConvexSet;
use crate::model::{load_candidate, load_instance, own_var, GameInstance, GameKind};
use crate::oracle::{brute_force, DEFAULT_BUDGET};
use crate::response::ResponseConfig;
use crate::solver::{solve, SolveConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

const DEFAULT_SEED: u64 = 42;
const DIAGNOSE_SAMPLES: usize = 2000;

#[derive(Debug, Parser)]
#[command(name = "bestapprox", version, about = "Best approximate solutions of generalized Nash games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the damped fixed-point solver on an instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol_fp: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, default_value_t = 8)]
        starts: usize,
        /// Defaults to `metadata.damping` in the instance, else 1.
        #[arg(long)]
        damping: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        trace: bool,
    },
    /// Check a candidate pair against the four solution conditions.
    Certify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Enumerate grid solutions by brute force.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long)]
        match_tol: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Write a bundled instance.
    Example {
        #[arg(long)]
        name: String,
        /// Output path; standard output when absent.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Sampling checks of quasi-concavity and (FPT) lower semi-continuity.
    Diagnose {
        #[arg(long, conflicts_with = "function", required_unless_present = "function")]
        instance: Option<PathBuf>,
        /// Expression to check; variables are taken in sorted order.
        #[arg(long)]
        function: Option<String>,
        #[arg(long, value_enum)]
        check: Option<Check>,
        #[arg(long)]
        player: Option<usize>,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Option<Vec<f64>>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Quasiconcave,
    Lsc,
    Fptlsc,
}

/// Outcome of a command: exit code, JSON report and a one-line summary.
struct Outcome {
    code: i32,
    report: Value,
    summary: String,
}

type CmdResult = Result<Outcome, String>;

/// Rounds every non-integer number to 12 significant digits.
pub fn round_report(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(0.0);
            let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            let r = if r == 0.0 { 0.0 } else { r };
            if let Some(num) = serde_json::Number::from_f64(r) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_report),
        Value::Object(map) => map.values_mut().for_each(round_report),
        _ => {}
    }
}

pub fn render_report(mut v: Value) -> String {
    round_report(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn read_instance(path: &Path) -> Result<GameInstance, String> {
    load_instance(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report serializes")
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let (result, report_path) = match cli.command {
        Command::Solve {
            instance,
            report,
            tol,
            tol_fp,
            max_iter,
            starts,
            damping,
            seed,
            trace,
        } => {
            let cfg = SolveArgs {
                tol,
                tol_fp,
                max_iter,
                starts,
                damping,
                seed,
                trace,
            };
            (cmd_solve(&instance, &cfg), report)
        }
        Command::Certify {
            instance,
            candidate,
            report,
            tol,
            seed,
        } => (cmd_certify(&instance, &candidate, tol, seed), report),
        Command::Oracle {
            instance,
            report,
            grid,
            match_tol,
            budget,
            seed,
        } => (cmd_oracle(&instance, grid, match_tol, budget, seed), report),
        Command::Example { name, emit } => return cmd_example(&name, emit.as_deref(), out, err),
        Command::Diagnose {
            instance,
            function,
            check,
            player,
            point,
            epsilon,
            report,
            seed,
        } => {
            let d = DiagnoseArgs {
                instance,
                function,
                check,
                player,
                point,
                epsilon,
                seed,
            };
            (cmd_diagnose(&d), report)
        }
    };
    match result {
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Ok(o) => {
            let text = render_report(o.report);
            match report_path {
                Some(p) => {
                    if let Err(e) = std::fs::write(&p, text) {
                        let _ = writeln!(err, "error: cannot write {}: {e}", p.display());
                        return EXIT_USAGE;
                    }
                    let _ = writeln!(out, "{}", o.summary);
                }
                None => {
                    let _ = write!(out, "{text}");
                    let _ = writeln!(err, "{}", o.summary);
                }
            }
            o.code
        }
    }
}

struct SolveArgs {
    tol: f64,
    tol_fp: f64,
    max_iter: usize,
    starts: usize,
    damping: Option<f64>,
    seed: u64,
    trace: bool,
}

fn cmd_solve(path: &Path, a: &SolveArgs) -> CmdResult {
    let inst = read_instance(path)?;
    let damping = a
        .damping
        .or_else(|| inst.metadata.get("damping").and_then(Value::as_f64))
        .unwrap_or(1.0);
    let cfg = SolveConfig {
        tol_fp: a.tol_fp,
        tol_cert: a.tol,
        max_iter: a.max_iter,
        damping,
        multistart: a.starts,
        seed: a.seed,
        response: ResponseConfig {
            seed: a.seed,
            ..ResponseConfig::default()
        },
        trace: a.trace,
        exhaust_starts: false,
    };
    let rep = solve(&inst, &cfg).map_err(|e| e.to_string())?;
    let mut obj = Map::new();
    obj.insert("converged".into(), json!(rep.converged));
    obj.insert("x_tilde".into(), to_value(&rep.solution.x_tilde));
    obj.insert("y_tilde".into(), to_value(&rep.solution.y_tilde));
    obj.insert("residuals".into(), to_value(&rep.residuals));
    obj.insert("iterations".into(), json!(rep.iterations));
    obj.insert("seed".into(), json!(rep.seed));
    if let Some(t) = &rep.trace {
        obj.insert("trace".into(), to_value(t));
    }
    let summary = format!(
        "{}: {} after {} iterations, max residual {:.3e}",
        path.display(),
        if rep.converged { "converged" } else { "not converged" },
        rep.iterations,
        rep.residuals.max
    );
    Ok(Outcome {
        code: if rep.converged { EXIT_OK } else { EXIT_NOT_CONVERGED },
        report: Value::Object(obj),
        summary,
    })
}

fn cmd_certify(inst_path: &Path, cand_path: &Path, tol: f64, seed: u64) -> CmdResult {
    let inst = read_instance(inst_path)?;
    let cand = load_candidate(&read(cand_path)?).map_err(|e| format!("{}: {e}", cand_path.display()))?;
    let cfg = ResponseConfig {
        seed,
        ..ResponseConfig::default()
    };
    let rep = certify(&inst, &cand, tol, &cfg).map_err(|e| e.to_string())?;
    let summary = format!(
        "certificate {}: max residual {:.3e} (tol {:e})",
        if rep.passed { "passed" } else { "failed" },
        rep.max,
        tol
    );
    Ok(Outcome {
        code: if rep.passed { EXIT_OK } else { EXIT_FAILED },
        report: json!({
            "passed": rep.passed,
            "x_tilde": cand.x_tilde,
            "y_tilde": cand.y_tilde,
            "residuals": to_value(&rep),
            "seed": seed,
        }),
        summary,
    })
}

fn cmd_oracle(path: &Path, grid: usize, match_tol: Option<f64>, budget: u64, seed: u64) -> CmdResult {
    let inst = read_instance(path)?;
    let rep = brute_force(&inst, grid, match_tol, budget).map_err(|e| e.to_string())?;
    let summary = format!(
        "{} grid candidates at resolution {} (match tolerance {:.3e})",
        rep.candidates.len(),
        rep.resolution,
        rep.match_tol
    );
    let mut v = to_value(&rep);
    if let Value::Object(m) = &mut v {
        m.insert("seed".into(), json!(seed));
    }
    Ok(Outcome {
        code: EXIT_OK,
        report: v,
        summary,
    })
}

fn cmd_example(name: &str, emit: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(text) = examples::by_name(name) else {
        let _ = writeln!(
            err,
            "error: unknown example {name:?}; available: {}",
            examples::names().collect::<Vec<_>>().join(", ")
        );
        return EXIT_USAGE;
    };
    match emit {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text) {
                let _ = writeln!(err, "error: cannot write {}: {e}", p.display());
                return EXIT_USAGE;
            }
            let _ = writeln!(out, "wrote {name} to {}", p.display());
        }
        None => {
            let _ = write!(out, "{text}");
        }
    }
    EXIT_OK
}

struct DiagnoseArgs {
    instance: Option<PathBuf>,
    function: Option<String>,
    check: Option<Check>,
    player: Option<usize>,
    point: Option<Vec<f64>>,
    epsilon: Option<f64>,
    seed: u64,
}

fn cmd_diagnose(a: &DiagnoseArgs) -> CmdResult {
    let inst = a.instance.as_deref().map(read_instance).transpose()?;
    let meta = inst
        .as_ref()
        .and_then(|i| i.metadata.get("diagnostics"))
        .cloned()
        .unwrap_or(Value::Null);
    let player = a
        .player
        .or_else(|| meta.get("player").and_then(Value::as_u64).map(|p| p as usize))
        .unwrap_or(1);
    let check = match a.check {
        Some(c) => c,
        None => match meta.get("check").and_then(Value::as_str) {
            Some("quasiconcave") => Check::Quasiconcave,
            Some("lsc") => Check::Lsc,
            Some("fptlsc") => Check::Fptlsc,
            _ => return Err("--check is required".into()),
        },
    };
    let point = a.point.clone().or_else(|| {
        meta.get("point")
            .and_then(Value::as_array)
            .map(|xs| xs.iter().filter_map(Value::as_f64).collect())
    });
    let epsilon = a
        .epsilon
        .or_else(|| meta.get("epsilon").and_then(Value::as_f64))
        .unwrap_or(0.5);

    let f: Expr = match (&inst, &a.function) {
        (_, Some(text)) => parse(text).map_err(|e| format!("--function: {e}"))?,
        (Some(inst), None) => {
            if player == 0 || player > inst.n_players() {
                return Err(format!("--player {player} out of range 1..={}", inst.n_players()));
            }
            inst.players[player - 1].objective.clone()
        }
        (None, None) => return Err("one of --instance or --function is required".into()),
    };

    let (passed, report) = match check {
        Check::Quasiconcave => {
            let set = match (&inst, &a.function) {
                (Some(inst), None) => inst.players[player - 1].strategy_set.clone(),
                _ => {
                    let d = f.variables().len();
                    let expected: Vec<String> = (0..d).map(own_var).collect();
                    if f.variables().into_iter().collect::<Vec<_>>() != expected {
                        return Err("quasi-concavity checks over --function need variables z_1..z_d".into());
                    }
                    ConvexSet::Box {
                        lower: vec![-1.0; d],
                        upper: vec![1.0; d],
                    }
                }
            };
            let r = check_quasiconcave(&f, &set, DIAGNOSE_SAMPLES, 1e-12, a.seed).map_err(|e| e.to_string())?;
            (r.quasiconcave, to_value(&r))
        }
        Check::Lsc => {
            let vars: Vec<String> = f.variables().into_iter().collect();
            let point = point.ok_or("--point is required for lsc")?;
            let r = check_lsc_at(&f, &vars, &point, epsilon, &DEFAULT_RADII, DIAGNOSE_SAMPLES, a.seed)
                .map_err(|e| e.to_string())?;
            let mut v = to_value(&r);
            if let Value::Object(m) = &mut v {
                m.insert("variables".into(), json!(vars));
            }
            (!r.violated, v)
        }
        Check::Fptlsc => {
            let inst = inst.as_ref().ok_or("fptlsc needs --instance")?;
            let point = point.ok_or("--point is required for fptlsc")?;
            let p = &inst.players[player - 1];
            let u_vars: Vec<String> = match inst.kind {
                GameKind::Gnep => inst
                    .public_slots()
                    .into_iter()
                    .filter(|s| !s.starts_with(&format!("x{player}_")))
                    .collect(),
                GameKind::Quopt => inst.public_slots(),
            };
            let v_vars: Vec<String> = (0..p.dim).map(own_var).collect();
            if point.len() != u_vars.len() + v_vars.len() {
                return Err(format!(
                    "--point needs {} coordinates ({} then {})",
                    u_vars.len() + v_vars.len(),
                    u_vars.join(","),
                    v_vars.join(",")
                ));
            }
            let (u, v) = point.split_at(u_vars.len());
            let opts = FptOptions {
                epsilon,
                seed: a.seed,
                ..FptOptions::default()
            };
            let r = check_fpt_lsc_at(&f, &p.constraint_map, &u_vars, &v_vars, u, v, &opts)
                .map_err(|e| e.to_string())?;
            (r.passed, to_value(&r))
        }
    };
    let name = match check {
        Check::Quasiconcave => "quasiconcave",
        Check::Lsc => "lsc",
        Check::Fptlsc => "fptlsc",
    };
    let mut report = report;
    if let Value::Object(m) = &mut report {
        m.insert("check".into(), json!(name));
        m.insert("passed".into(), json!(passed));
        m.insert("seed".into(), json!(a.seed));
    }
    Ok(Outcome {
        code: if passed { EXIT_OK } else { EXIT_FAILED },
        report,
        summary: format!("{name}: {} (sampling evidence only)", if passed { "pass" } else { "violation" }),
    })
}
