//! `liquid-drop`: batch front end for the equilibrium solver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use liquid_drop::branch::{branch_csv, trace_branch_with, SolverConfig};
use liquid_drop::operator::{Discretization, R_STAR};
use liquid_drop::shape::{ball_reference, fmt_f64};
use liquid_drop::verify::{self, VerifyOptions};
use liquid_drop::{Error, Shape};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "liquid-drop", version, about = "Axisymmetric liquid drop equilibria near the ball of volume 10")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML file with solver settings; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Highest Legendre degree (even, >= 8)
    #[arg(long, global = true)]
    lmax: Option<usize>,
    /// Gauss–Legendre grid order
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Newton tolerance on the projected residual norm
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file; stdout when absent
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Where to write the run manifest; defaults to `<out>.manifest.json`,
    /// or stderr without `--out`
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form and quadrature energies of a ball
    Ball {
        #[arg(long = "r", value_parser = positive)]
        radius: f64,
    },
    /// Linearized spectrum at a ball: analytic against numeric
    Spectrum {
        #[arg(long = "r", value_parser = positive, default_value_t = R_STAR)]
        radius: f64,
    },
    /// Trace the bifurcating branch and write it as CSV
    Branch {
        #[arg(long, allow_hyphen_values = true)]
        s_start: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        s_end: Option<f64>,
        #[arg(long)]
        ds: Option<f64>,
    },
    /// Run the reference checks and print a pass/fail table
    Verify {
        /// Multiply every tolerance by this factor
        #[arg(long, value_parser = positive, default_value_t = 1.0)]
        tol_scale: f64,
        /// Run only these checks (repeatable or comma separated)
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Energy report for a shape file
    Eval { shape: PathBuf },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} must be positive and finite")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    config: serde_json::Value,
    version: &'static str,
    wall_time_s: f64,
    outputs: Vec<String>,
    status: &'a str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    /// Exit 2.
    Usage(String),
    /// Exit 1.
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse(_) | Error::InvalidBasis { .. } | Error::InvalidOrder(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Run(e.to_string()),
        }
    }
}

struct Outcome {
    body: String,
    config: serde_json::Value,
    status: &'static str,
    notes: Vec<String>,
}

fn load_config(common: &Common) -> Result<SolverConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?
        }
        None => SolverConfig::default(),
    };
    if let Some(v) = common.lmax {
        cfg.lmax = v;
    }
    if let Some(v) = common.grid {
        cfg.grid_order = v;
    }
    if let Some(v) = common.tol {
        cfg.tol = v;
    }
    if let Some(v) = &common.out {
        cfg.output = Some(v.clone());
    }
    Ok(cfg)
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn run(command: &Command, mut cfg: SolverConfig) -> Result<Outcome, Failure> {
    match command {
        Command::Ball { radius } => {
            cfg.validate()?;
            let disc = cfg.discretization()?;
            let shape = Shape::ball(*radius)?;
            let exact = ball_reference(*radius)?;
            let quad = disc.energy_report(&shape);
            let body = serde_json::to_string_pretty(&serde_json::json!({
                "radius": radius,
                "closed_form": exact,
                "quadrature": quad,
                "max_rel_discrepancy": exact.max_rel_discrepancy(&quad),
            }))
            .expect("plain data serializes");
            Ok(Outcome {
                body: body + "\n",
                config: serde_json::json!({ "radius": radius, "solver": json(&cfg) }),
                status: "ok",
                notes: vec![],
            })
        }
        Command::Spectrum { radius } => {
            cfg.validate()?;
            let disc = cfg.discretization()?;
            let mut body = String::from("l,analytic,numeric,abs_diff\n");
            for row in disc.spectrum(*radius, cfg.fd_step)? {
                body.push_str(&format!(
                    "{},{},{},{}\n",
                    row.l,
                    fmt_f64(row.analytic),
                    fmt_f64(row.numeric),
                    fmt_f64(row.abs_diff())
                ));
            }
            Ok(Outcome {
                body,
                config: serde_json::json!({ "radius": radius, "solver": json(&cfg) }),
                status: "ok",
                notes: vec![],
            })
        }
        Command::Branch { s_start, s_end, ds } => {
            if let Some(v) = s_start {
                cfg.s_start = *v;
            }
            if let Some(v) = s_end {
                cfg.s_end = *v;
            }
            if let Some(v) = ds {
                cfg.ds = *v;
            }
            cfg.validate()?;
            let disc = cfg.discretization()?;
            let trace = trace_branch_with(&cfg, &disc);
            let mut notes = Vec::new();
            if cfg.is_experimental() {
                notes.push("experimental: window extends beyond |s| <= 0.15".to_string());
            }
            let status = match &trace.failure {
                Some(e) => {
                    notes.push(format!("stopped early: {e}"));
                    "diverged"
                }
                None => "ok",
            };
            Ok(Outcome {
                body: branch_csv(&trace.points, cfg.lmax),
                config: json(&cfg),
                status,
                notes,
            })
        }
        Command::Verify { tol_scale, only } => {
            let opts = VerifyOptions {
                config: cfg.clone(),
                tol_scale: *tol_scale,
                only: (!only.is_empty()).then(|| only.clone()),
            };
            let report = verify::run(&opts)?;
            Ok(Outcome {
                body: report.table(),
                config: serde_json::json!({ "solver": json(&cfg), "tol_scale": tol_scale, "only": only }),
                status: if report.all_pass() { "ok" } else { "failed" },
                notes: report.notes.clone(),
            })
        }
        Command::Eval { shape } => {
            cfg.validate()?;
            let text = fs::read_to_string(shape).map_err(|e| Failure::Usage(format!("{}: {e}", shape.display())))?;
            let s = Shape::from_text(&text).map_err(|e| Failure::Usage(format!("{}: {e}", shape.display())))?;
            let disc = Discretization::new(cfg.lmax.max(s.lmax()), cfg.grid_order.max(2 * s.lmax()))?;
            let report = disc.energy_report(&s);
            let f = disc.full_operator(&s);
            let body = serde_json::to_string_pretty(&serde_json::json!({
                "shape": shape.display().to_string(),
                "energy": report,
                "mu_mean_F": f.sphere_mean(disc.grid()),
                "F_sup_variation": f.sup_variation(),
                "prolate": s.is_prolate(),
            }))
            .expect("plain data serializes");
            Ok(Outcome {
                body: body + "\n",
                config: serde_json::json!({ "shape": shape, "solver": json(&cfg) }),
                status: "ok",
                notes: vec![],
            })
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ball { .. } => "ball",
        Command::Spectrum { .. } => "spectrum",
        Command::Branch { .. } => "branch",
        Command::Verify { .. } => "verify",
        Command::Eval { .. } => "eval",
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    if cli.common.threads > 0 {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.common.threads).build_global();
    }
    let outcome = load_config(&cli.common).and_then(|cfg| run(&cli.command, cfg));
    let outcome = match outcome {
        Ok(o) => o,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
    };
    let mut outputs = Vec::new();
    match &cli.common.out {
        Some(p) => {
            if let Err(Failure::Run(m) | Failure::Usage(m)) = write_file(p, &outcome.body) {
                eprintln!("error: {m}");
                return ExitCode::from(1);
            }
            outputs.push(p.display().to_string());
        }
        None => {
            let _ = std::io::stdout().write_all(outcome.body.as_bytes());
        }
    }
    for n in &outcome.notes {
        eprintln!("{n}");
    }
    let manifest = RunManifest {
        command: command_name(&cli.command),
        config: outcome.config,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        status: outcome.status,
        notes: outcome.notes,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("plain data serializes") + "\n";
    let target = cli
        .common
        .manifest
        .clone()
        .or_else(|| cli.common.out.as_ref().map(|p| PathBuf::from(format!("{}.manifest.json", p.display()))));
    match target {
        Some(p) => {
            if let Err(Failure::Run(m) | Failure::Usage(m)) = write_file(&p, &text) {
                eprintln!("error: {m}");
                return ExitCode::from(1);
            }
        }
        None => eprint!("{text}"),
    }
    if outcome.status == "ok" {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
