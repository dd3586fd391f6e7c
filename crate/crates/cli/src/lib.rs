//! Command-line front end: parse arguments, run the pipeline, write outputs
//! and map the overall verdict to an exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use isofcq::report::{self, Command, RunConfig};
use isofcq::Verdict;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "isofcq", version, about = "Formal conserved quantities of isothermic profile-curve surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Frame Gram relations and structure equation residuals.
    FrameCheck(RunArgs),
    /// Build the series and check conservation and parallelism.
    Fcq(RunArgs),
    /// Special isothermic type tests.
    Detect(RunArgs),
    /// Everything.
    Report(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration (JSON, schema 1).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the series depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Override the number of grid points.
    #[arg(long = "grid-n")]
    pub grid_n: Option<usize>,
    /// Override the detector tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for report.json and fields/*.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print the report JSON to stdout.
    #[arg(long)]
    pub json: bool,
}

impl Sub {
    fn split(&self) -> (Command, &RunArgs) {
        match self {
            Sub::FrameCheck(a) => (Command::FrameCheck, a),
            Sub::Fcq(a) => (Command::Fcq, a),
            Sub::Detect(a) => (Command::Detect, a),
            Sub::Report(a) => (Command::Report, a),
        }
    }
}

pub fn load_config(args: &RunArgs) -> anyhow::Result<RunConfig> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(d) = args.depth {
        cfg.depth = d;
    }
    if let Some(n) = args.grid_n {
        cfg.grid.n = n;
    }
    if let Some(t) = args.tol {
        cfg.tolerances.detect = Some(t);
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> anyhow::Result<Verdict> {
    let (command, args) = cli.command.split();
    let cfg = load_config(args)?;
    let out = report::run(&cfg, command)?;
    let dir = args.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from));
    if let Some(dir) = &dir {
        out.write_to(dir, &cfg.output.fields)
            .with_context(|| format!("writing outputs to {}", dir.display()))?;
    }
    if args.json {
        stdout.write_all(out.report.to_json()?.as_bytes())?;
    } else {
        for c in &out.report.checks {
            writeln!(
                stdout,
                "{:<24} {:<12} residual {:.3e}  tol {:.1e}",
                c.check,
                format!("{:?}", c.verdict).to_lowercase(),
                c.residual,
                c.tolerance
            )?;
        }
        if let Some(loc) = out.report.detection.as_ref().and_then(|d| d.location.as_ref()) {
            let space = loc
                .space_form
                .map(|s| format!("{:?}", s.tag).to_lowercase())
                .unwrap_or_else(|| "undefined".into());
            let ev = if loc.in_e_v_infinity == Some(true) { " in E(v_inf)" } else { "" };
            writeln!(stdout, "type <= {} ({space} space form{ev})", loc.d)?;
        }
        writeln!(stdout, "overall: {:?}", out.report.verdict)?;
    }
    Ok(out.report.verdict)
}

/// Run with explicit arguments; returns the process exit code.
pub fn main_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_CONFIG;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_PASS;
        }
    };
    match execute(&cli, stdout) {
        Ok(v) => exit_code(v),
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_CONFIG
        }
    }
}
