use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semlab::controls::fit_power_control;
use semlab::scenario::{self, ControlSpec, ScenarioConfig, ScenarioReport, SpaceSource, TimeGrid};
use semlab::suite::{configure_threads, CheckFamily};
use semlab::{Error, HeatOperator, Result};

/// Heat-semigroup smoothing laboratory for finite weighted graphs.
#[derive(Parser)]
#[command(name = "semlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite and write report, summary, sweep and control files.
    Verify(VerifyArgs),
    /// Write the table t, c_star, C_star, theta for a space.
    Sweep(SweepArgs),
    /// Fit a power control to (t, c_star) samples.
    Fit(FitArgs),
    /// Print the summary of an existing report.
    Report(ReportArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Scenario configuration file; other flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generator spec such as cycle:n=12, or a space file.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// log:<min>,<max>,<count>
    #[arg(long = "t-grid")]
    t_grid: Option<String>,
    /// all, or a comma-separated list of check families.
    #[arg(long)]
    suite: Option<String>,
    /// Random samples per check family.
    #[arg(long)]
    samples: Option<usize>,
    /// Control file, or fit, fit:b=<b>, power:m=<M>,b=<b>, rcd:k=<K>,m=<M>.
    #[arg(long)]
    control: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    space: String,
    #[arg(long = "t-grid", default_value = "log:0.001,1,40")]
    t_grid: String,
    /// CSV destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Two-column numeric text (t, c_star); a non-numeric first line is a header.
    #[arg(long)]
    samples: PathBuf,
    /// Fixed exponent in (0, 1).
    #[arg(long)]
    b: Option<f64>,
    /// Control file destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json written by verify.
    input: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Verify(args) => verify(args),
        Command::Sweep(args) => sweep(args).map(|_| true),
        Command::Fit(args) => fit(args).map(|_| true),
        Command::Report(args) => report(&args.input),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_control(s: &str) -> Result<ControlSpec> {
    match s.parse::<ControlSpec>() {
        Ok(spec) => Ok(spec),
        Err(_) if !s.contains(':') || Path::new(s).exists() => Ok(ControlSpec::File(PathBuf::from(s))),
        Err(e) => Err(e),
    }
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let mut config = match (&args.config, &args.space) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            ScenarioConfig::parse(&text).map_err(|e| Error::File { path: path.clone(), message: e.to_string() })?
        }
        (None, Some(space)) => ScenarioConfig::new(space.parse()?),
        (None, None) => return Err(Error::InvalidArgument("verify needs --space or --config".into())),
    };
    if let (Some(_), Some(space)) = (&args.config, &args.space) {
        config.space = space.parse()?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(grid) = &args.t_grid {
        config.t_grid = grid.parse()?;
    }
    if let Some(suite) = &args.suite {
        config.suite = CheckFamily::parse_list(suite)?;
    }
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(control) = &args.control {
        config.control = parse_control(control)?;
    }
    if let Some(out) = args.out {
        config.out = out;
    }
    let artifacts = scenario::run_scenario(&config)?;
    print!("{}", artifacts.summary_text());
    Ok(artifacts.pass())
}

fn sweep(args: SweepArgs) -> Result<()> {
    let source: SpaceSource = args.space.parse()?;
    let grid: TimeGrid = args.t_grid.parse()?;
    let (space, dirichlet) = source.load()?;
    let profile = HeatOperator::new(space, dirichlet)?.profile(&grid.times()?)?;
    let table = scenario::sweep_csv(&profile);
    match args.out {
        Some(path) => std::fs::write(&path, table).map_err(|e| Error::Io { path, source: e }),
        None => {
            print!("{table}");
            Ok(())
        }
    }
}

fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect();
        let parsed: Option<Vec<f64>> = fields.iter().take(2).map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => samples.push((v[0], v[1])),
            _ if samples.is_empty() && i == 0 => continue,
            _ => {
                return Err(Error::File {
                    path: path.to_path_buf(),
                    message: format!("line {}: expected two numbers, got '{line}'", i + 1),
                })
            }
        }
    }
    Ok(samples)
}

fn fit(args: FitArgs) -> Result<()> {
    let samples = read_samples(&args.samples)?;
    let control = fit_power_control(&samples, args.b).map_err(|e| Error::File {
        path: args.samples.clone(),
        message: e.to_string(),
    })?;
    let json = control.to_json() + "\n";
    match args.out {
        Some(path) => std::fs::write(&path, json).map_err(|e| Error::Io { path, source: e }),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn report(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let report: ScenarioReport =
        serde_json::from_str(&text).map_err(|e| Error::File { path: path.to_path_buf(), message: e.to_string() })?;
    print!("{}", scenario::summary_text(&report));
    Ok(report.pass)
}
