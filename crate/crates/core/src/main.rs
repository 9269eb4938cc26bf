use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use risbeam::output::{emit_results, write_csv, Format, RunManifest};
use risbeam::{run_sweep, Overrides, ScenarioConfig, Scheme, SweepParam, SweepSpec};

#[derive(Parser)]
#[command(name = "risbeam", version, about = "RIS-aided multi-user downlink beamforming simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sum rate versus the grouping threshold.
    SweepEta(RunArgs),
    /// Sum rate versus the number of RIS elements.
    SweepN(RunArgs),
    /// Sum rate versus the RIS configuration overhead.
    SweepTp(RunArgs),
    /// Codebook designs against the sub-surface refined search, versus N.
    CompareRs(RunArgs),
    /// A single configuration, every scheme.
    Single(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// TOML scenario file; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per grid point [default: 200, or 1 for `single`].
    #[arg(long)]
    trials: Option<u64>,
    /// Output file; CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    /// Comma-separated grid replacing the subcommand's default.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long)]
    n_ris: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    tp: Option<f64>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    codebook: Option<usize>,
    #[arg(long)]
    subsurfaces: Option<usize>,
}

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    // round to kill accumulated binary error in the printed values
    (0..count).map(|i| ((start + step * i as f64) * 1e9).round() / 1e9).collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (name, args, param, default_grid, schemes) = match cli.command {
        Command::SweepEta(a) => (
            "sweep-eta",
            a,
            SweepParam::Eta,
            grid(0.4, 0.05, 12),
            vec![Scheme::Unified, Scheme::GroupBased, Scheme::NoGrouping],
        ),
        Command::SweepN(a) => (
            "sweep-n",
            a,
            SweepParam::N,
            grid(20.0, 20.0, 10),
            vec![Scheme::Unified, Scheme::GroupBased, Scheme::NoGrouping],
        ),
        Command::SweepTp(a) => (
            "sweep-tp",
            a,
            SweepParam::Tp,
            grid(0.0, 0.005, 7),
            vec![Scheme::Unified, Scheme::GroupBased, Scheme::NoGrouping],
        ),
        Command::CompareRs(a) => (
            "compare-rs",
            a,
            SweepParam::N,
            vec![50.0, 100.0, 150.0, 200.0],
            vec![Scheme::Unified, Scheme::GroupBased, Scheme::RsUnified, Scheme::RsGroupBased],
        ),
        Command::Single(a) => ("single", a, SweepParam::Single, vec![0.0], Scheme::ALL.to_vec()),
    };

    let mut base = match &args.config {
        Some(p) => ScenarioConfig::from_toml_file(p)?,
        None => ScenarioConfig::default(),
    };
    base.apply(&Overrides {
        n: args.n_ris,
        k: args.users,
        l: args.codebook,
        eta: args.eta,
        t_p: args.tp,
        subsurfaces: args.subsurfaces,
        seed: args.seed,
    });
    base.validate()?;

    let default_trials = if param == SweepParam::Single { 1 } else { 200 };
    let spec = SweepSpec {
        param,
        grid: args.grid.clone().unwrap_or(default_grid),
        trials: args.trials.unwrap_or(default_trials),
        schemes,
        base,
    };

    let started = Instant::now();
    let table = run_sweep(&spec)?;
    let mut manifest = RunManifest::new(name, &spec);
    manifest.wall_clock_s = started.elapsed().as_secs_f64();
    manifest.total_evaluations = table.total_evaluations(spec.trials);

    let format = match args.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    };
    match &args.out {
        Some(path) => {
            manifest.outputs.push(path.clone());
            emit_results(&table, &manifest, format, path)?;
            log::info!("wrote {}", path.display());
        }
        None => match format {
            Format::Csv => write_csv(&table, &manifest.hash(), std::io::stdout().lock())?,
            Format::Json => {
                let doc = risbeam::output::ResultsDocument {
                    manifest_sha256: manifest.hash(),
                    manifest,
                    rows: table.rows,
                };
                let mut out = std::io::stdout().lock();
                serde_json::to_writer_pretty(&mut out, &doc)?;
                writeln!(out)?;
            }
        },
    }
    Ok(())
}
