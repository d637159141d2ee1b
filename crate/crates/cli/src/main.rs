use clap::{Args, Parser, Subcommand};
use grushin_cli::report::Writer;
use grushin_cli::{commands, verify, CliError, CliResult, Config};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerics for the parabolic spherical Grushin equation.
#[derive(Parser)]
#[command(name = "grushin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue table and Gram deviations.
    Spectrum,
    /// Free or controlled evolution of the configured initial field.
    Simulate,
    /// Highest-weight ratios against the minimal-time threshold.
    Mintime,
    /// Scan of the per-mode observability constant C_n(T).
    Observability,
    /// Penalized HUM controls over the epsilon sweep.
    Control,
    /// Carleman weight report, kernel bounds and diagnostic.
    Carleman {
        /// Re-run the constant search for (A1, A2, A3).
        #[arg(long)]
        search: bool,
    },
    /// Full invariant suite; exit 0 iff every criterion passes.
    Verify,
}

#[derive(Args)]
struct Overrides {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Also write a JSON mirror of every CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Output directory (output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Any configuration key, as key=value; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Inner latitude of the observation band (region.a).
    #[arg(long, global = true)]
    a: Option<String>,
    /// Outer latitude of the observation band (region.b).
    #[arg(long, global = true)]
    b: Option<String>,
    /// Time horizon (time.T).
    #[arg(long = "T", global = true)]
    horizon: Option<String>,
    /// Number of time steps (time.steps).
    #[arg(long, global = true)]
    steps: Option<String>,
    /// Largest Fourier index |n| (modes.nMax).
    #[arg(long, global = true)]
    n_max: Option<String>,
    /// Largest Legendre degree (truncation.L).
    #[arg(long, global = true)]
    l_max: Option<String>,
    /// Latitude quadrature order, 0 for automatic (quadrature.order).
    #[arg(long, global = true)]
    order: Option<String>,
    /// Comma-separated HUM penalties (hum.epsilonList).
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Inner edge of the Carleman transition zone (carleman.aPrime).
    #[arg(long, global = true)]
    a_prime: Option<String>,
    /// Outer edge of the Carleman transition zone (carleman.bPrime).
    #[arg(long, global = true)]
    b_prime: Option<String>,
    /// Multiplier on the admissible Carleman parameter (carleman.sFactor).
    #[arg(long, global = true)]
    s_factor: Option<String>,
    /// Initial modes as n:l:cos|sin:coeff, comma-separated (initial.modes).
    #[arg(long, global = true)]
    init: Option<String>,
    /// Control source CSV for simulate (simulate.control).
    #[arg(long, global = true)]
    control_file: Option<String>,
}

fn configure(o: &Overrides) -> CliResult<Config> {
    let mut cfg = match &o.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for kv in &o.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    let flags = [
        ("region.a", &o.a),
        ("region.b", &o.b),
        ("time.T", &o.horizon),
        ("time.steps", &o.steps),
        ("modes.nMax", &o.n_max),
        ("truncation.L", &o.l_max),
        ("quadrature.order", &o.order),
        ("hum.epsilonList", &o.eps),
        ("carleman.aPrime", &o.a_prime),
        ("carleman.bPrime", &o.b_prime),
        ("carleman.sFactor", &o.s_factor),
        ("initial.modes", &o.init),
        ("simulate.control", &o.control_file),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    if let Some(p) = &o.out {
        cfg.output_dir = p.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> CliResult<bool> {
    let cfg = configure(&cli.opts)?;
    let mut out = Writer::new(&cfg.output_dir, cli.opts.json)?;
    let (text, ok) = match &cli.command {
        Command::Spectrum => (commands::spectrum(&cfg, &mut out)?, true),
        Command::Simulate => (commands::simulate(&cfg, &mut out)?, true),
        Command::Mintime => (commands::mintime(&cfg, &mut out)?, true),
        Command::Observability => (commands::observability(&cfg, &mut out)?, true),
        Command::Control => (commands::control(&cfg, &mut out)?, true),
        Command::Carleman { search } => (commands::carleman(&cfg, *search, &mut out)?, true),
        Command::Verify => verify::verify(&cfg, &mut out)?,
    };
    print!("{text}");
    for p in &out.written {
        println!("wrote {}", p.display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("grushin: invariant failure");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("grushin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
