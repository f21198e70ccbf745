use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spider_cli::{emit, emit_to, run, CliError, ExperimentSpec, FnMode, Format, Kind, Params, THREADS_ENV};

/// Run a spider random-walk experiment and write its records.
#[derive(Debug, Parser)]
#[command(name = "spiderwalk", version)]
struct Args {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Worker threads; does not affect the output.
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::JsonLines)]
    format: Format,
    /// Progress file for legs-growth and coupon sweeps, reused when present.
    #[arg(long)]
    resume: Option<PathBuf>,

    /// Number of legs (urns for coupon); a comma list sweeps legs-growth and coupon.
    #[arg(long = "N", value_delimiter = ',')]
    legs: Vec<u32>,
    /// Target height.
    #[arg(long = "L")]
    height: Option<u64>,
    /// Constant scale factor for legs-growth.
    #[arg(long)]
    c: Option<f64>,
    /// Growing or shrinking scale factor for legs-growth.
    #[arg(long = "fN-mode", value_enum)]
    fn_mode: Option<FnMode>,
    /// Required visits per leg.
    #[arg(long)]
    k: Option<u64>,
    #[arg(long = "y-grid", value_delimiter = ',', allow_negative_numbers = true)]
    y_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    checkpoints: Vec<u64>,
    /// Walk length in steps.
    #[arg(long = "n")]
    steps: Option<u64>,
    /// Leg weights, summing to one.
    #[arg(long, value_delimiter = ',')]
    weights: Vec<f64>,
    /// Balls required per urn.
    #[arg(long)]
    m: Option<u64>,
    /// Ball-count offsets for coupon; positions for density-scaling.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Brownian grid step, 1/k.
    #[arg(long)]
    dt: Option<f64>,
    /// Exponent a in g(n) = (log n)^(-a) for hirsch-trace.
    #[arg(long = "g-power", allow_negative_numbers = true)]
    g_power: Option<f64>,
    /// Accept L > N / log N in legs-growth.
    #[arg(long)]
    allow_outside_regime: bool,
}

impl Args {
    fn into_spec(self) -> ExperimentSpec {
        ExperimentSpec {
            kind: self.kind,
            seed: self.seed,
            trials: self.trials,
            threads: self.threads,
            out: self.out,
            format: self.format,
            resume: self.resume,
            params: Params {
                legs: self.legs,
                height: self.height,
                c: self.c,
                fn_mode: self.fn_mode,
                k: self.k,
                y_grid: self.y_grid,
                checkpoints: self.checkpoints,
                steps: self.steps,
                weights: self.weights,
                m: self.m,
                x: self.x,
                dt: self.dt,
                g_power: self.g_power,
                allow_outside_regime: self.allow_outside_regime,
            },
        }
    }
}

fn main() -> ExitCode {
    let spec = Args::parse().into_spec();
    let (out, format) = (spec.out.clone(), spec.format);
    let result = match run(spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("spiderwalk: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match &out {
        Some(path) => emit(&result.output, format, path),
        None => emit_to(&result.output, format, std::io::stdout().lock()),
    };
    if let Err(e) = written {
        eprintln!("spiderwalk: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    eprintln!("{}", serde_json::to_string(&result.metrics).expect("metrics serialize"));
    if !result.summary.is_empty() {
        eprintln!("{}", result.summary);
    }
    if !result.violations.is_empty() {
        for v in &result.violations {
            eprintln!("spiderwalk: invariant violated: {v}");
        }
        let e = CliError::Runtime {
            trial: None,
            message: String::new(),
        };
        return ExitCode::from(e.exit_code() as u8);
    }
    ExitCode::SUCCESS
}
