use std::path::PathBuf;
use std::process::ExitCode;

use aaslab::pipeline::{ExperimentConfig, Pipeline};
use aaslab::{Error, ErrorKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "aaslab", version, about = "Benchmark generation, landscape features and selector training-set experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, conflicts_with = "desk_scale")]
    config: Option<PathBuf>,
    /// Use the built-in small-scale configuration.
    #[arg(long)]
    desk_scale: bool,
    /// Worker threads.
    #[arg(long, default_value_t = default_jobs())]
    jobs: usize,
    /// Replace the master seed of the configuration.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Keep portfolio checkpoints and continue from them.
    #[arg(long)]
    resume: bool,
    /// Replace the output directory of the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the problem suite and scale factors.
    Generate(Common),
    /// Compute, prune and normalize landscape features.
    Features(Common),
    /// Run the optimizer portfolio.
    Run(Common),
    /// Build training instance sets.
    Select(Common),
    /// Train one selector per instance set.
    Train(Common),
    /// Cross-evaluate the selectors.
    Evaluate(Common),
    /// Powerset gaps, summary and plots.
    Report(Common),
    /// Every stage in order.
    All(Common),
    /// Print the effective configuration as TOML.
    Config(Common),
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Capacity => 4,
        ErrorKind::Staleness => 5,
        ErrorKind::Io => 6,
    }
}

fn load(c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match (&c.config, c.desk_scale) {
        (Some(p), _) => ExperimentConfig::load(p)?,
        (None, true) => ExperimentConfig::desk_scale(),
        (None, false) => ExperimentConfig::full_scale(),
    };
    if let Some(s) = c.seed_override {
        cfg.master_seed = s;
    }
    if let Some(o) = &c.output {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cmd: Command) -> Result<(), Error> {
    let common = match &cmd {
        Command::Generate(c)
        | Command::Features(c)
        | Command::Run(c)
        | Command::Select(c)
        | Command::Train(c)
        | Command::Evaluate(c)
        | Command::Report(c)
        | Command::All(c)
        | Command::Config(c) => c.clone(),
    };
    let cfg = load(&common)?;
    if let Command::Config(_) = cmd {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let mut p = Pipeline::new(cfg, common.jobs)?;
    p.resume = common.resume;
    log::info!("config hash {}", p.hash);
    match cmd {
        Command::Generate(_) => {
            let s = p.generate()?;
            println!("{} generated problems, {} component problems", s.generated.len(), s.components.len());
        }
        Command::Features(_) => {
            let f = p.features()?;
            println!("{} retained features: {}", f.names.len(), f.names.join(", "));
        }
        Command::Run(_) => {
            let t = p.run()?;
            println!("{} problems x {} algorithms", t.problem_ids.len(), t.algorithm_ids.len());
        }
        Command::Select(_) => println!("{} instance sets", p.select()?.len()),
        Command::Train(_) => println!("{} selectors", p.train()?.len()),
        Command::Evaluate(_) => {
            let m = p.evaluate()?;
            println!("{} x {} cross-evaluation cells", m.rows.len(), m.columns.len());
        }
        Command::Report(_) | Command::All(_) => {
            let s = if matches!(cmd, Command::All(_)) { p.all()? } else { p.report()? };
            println!("SBS {} with gap {:.4}", s.sbs_id, s.full_gap);
            for o in &s.observations {
                println!("{o}");
            }
        }
        Command::Config(_) => unreachable!(),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
