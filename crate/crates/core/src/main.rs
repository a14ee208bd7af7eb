use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netwave::harness::{
    emit, load_scenario, run_campaign, run_monte_carlo, run_robustness, write_csv, Format,
    FrameRecord, Scenario, Tabular,
};
use netwave::verify::run_checks;
use netwave::Error;

#[derive(Parser)]
#[command(
    name = "netwave",
    version,
    about = "Slow-time code design for networked radar tracking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One designed campaign plus the reference-code campaign.
    Run(Common),
    /// Designed campaigns for every ζ plus the reference-code campaign.
    Sweep(Common),
    /// Monte-Carlo average over random target powers.
    Mc(Common),
    /// Prediction-error robustness study.
    Robust(Common),
    /// Runs the invariant and oracle suites on a scenario.
    Check(Common),
    /// Scenario file utilities.
    Scenario {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    /// Parses and validates a scenario file (or built-in name).
    Validate { path: PathBuf },
}

#[derive(Args)]
struct Common {
    /// Scenario file, or the name of a built-in scenario.
    #[arg(long, default_value = "four_node")]
    scenario: PathBuf,
    /// Comma-separated similarity parameters; overrides the scenario list.
    #[arg(long, value_delimiter = ',')]
    zeta: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; rows go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: String,
    /// Worker threads for trial-parallel studies (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the scenario frame count.
    #[arg(long)]
    frames: Option<usize>,
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn load(common: &Common) -> Result<Scenario, Failure> {
    let mut s = load_scenario(&common.scenario).map_err(|e| match e {
        Error::Io(io) => Failure::Validation(format!(
            "cannot read scenario {}: {io}",
            common.scenario.display()
        )),
        other => other.into(),
    })?;
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    if let Some(k) = common.frames {
        if k == 0 {
            return Err(Failure::Validation("--frames must be at least 1".into()));
        }
        s.frames = k;
    }
    if let Some(z) = &common.zeta {
        if z.is_empty() || z.iter().any(|v| !(0.0..=2.0).contains(v)) {
            return Err(Failure::Validation(format!(
                "--zeta values must lie in [0, 2], got {z:?}"
            )));
        }
        s.zetas = z.clone();
    }
    Ok(s)
}

fn output<R: Tabular>(
    common: &Common,
    name: &str,
    nodes: usize,
    records: &[R],
) -> Result<(), Failure> {
    let format: Format = common
        .format
        .parse()
        .map_err(|e: Error| Failure::Validation(e.to_string()))?;
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(Error::from)?;
            let path = dir.join(format!("{name}.{}", format.extension()));
            emit(records, nodes, &path, format)?;
            eprintln!("wrote {}", path.display());
        }
        None => match format {
            Format::Csv => write_csv(records, nodes, std::io::stdout().lock())?,
            Format::Json => println!("{}", netwave::harness::to_json(records)?),
        },
    }
    Ok(())
}

/// Reference-code campaign followed by one campaign per ζ.
fn campaigns(s: &Scenario, zetas: &[f64]) -> Result<Vec<FrameRecord>, Failure> {
    let mut out = Vec::new();
    if !zetas.contains(&0.0) {
        out.extend(run_campaign(s, 0.0)?);
    }
    for &z in zetas {
        out.extend(run_campaign(s, z).map_err(|e| e.context(format!("zeta {z}")))?);
    }
    Ok(out)
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run(common) => {
            let s = load(&common)?;
            let zeta = match &common.zeta {
                Some(z) if z.len() == 1 => z[0],
                Some(_) => {
                    return Err(Failure::Validation(
                        "`run` takes a single --zeta value".into(),
                    ))
                }
                None => s.zetas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            };
            output(&common, "run", s.nodes.len(), &campaigns(&s, &[zeta])?)
        }
        Command::Sweep(common) => {
            let s = load(&common)?;
            output(&common, "sweep", s.nodes.len(), &campaigns(&s, &s.zetas)?)
        }
        Command::Mc(common) => {
            let s = load(&common)?;
            let mut zetas = vec![0.0];
            zetas.extend(s.zetas.iter().filter(|z| **z != 0.0));
            let records = with_threads(common.threads, || run_monte_carlo(&s, &zetas))?;
            output(&common, "mc", s.nodes.len(), &records)
        }
        Command::Robust(common) => {
            let s = load(&common)?;
            let zetas = common.zeta.clone();
            let records = with_threads(common.threads, || run_robustness(&s, zetas.as_deref()))?;
            output(&common, "robust", s.nodes.len(), &records)
        }
        Command::Check(common) => {
            let s = load(&common)?;
            let outcomes = with_threads(common.threads, || run_checks(&s))?;
            let mut ok = true;
            for o in &outcomes {
                println!(
                    "{} {}: {}",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail
                );
                ok &= o.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Numerical("one or more checks failed".into()))
            }
        }
        Command::Scenario {
            action: ScenarioAction::Validate { path },
        } => {
            let s = load_scenario(&path).map_err(|e| match e {
                Error::Io(io) => {
                    Failure::Validation(format!("cannot read scenario {}: {io}", path.display()))
                }
                other => other.into(),
            })?;
            println!(
                "ok: {} ({} nodes, {} frames, zetas {:?})",
                s.name,
                s.nodes.len(),
                s.frames,
                s.zetas
            );
            Ok(())
        }
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> netwave::Result<T> + Send,
) -> Result<T, Failure> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Failure::Validation(format!("--threads: {e}")))?;
            Ok(pool.install(f)?)
        }
        None => Ok(f()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
