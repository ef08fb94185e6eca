//! Command-line pipeline: generate, preprocess, train, encode, project,
//! cluster, score and plot, each stage reading the previous one's artifacts.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod plot;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ClusterMethod, PipelineConfig, ProjectionMethod};
use crate::error::CliResult;

#[derive(Debug, Parser)]
#[command(name = "rotor-vrae", version, about = "Unsupervised icing detection from blade-load time series")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file layered on top of the preset.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Named base configuration: two-class or multi-class.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for every artifact.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub hidden: Option<usize>,
    #[arg(long, global = true)]
    pub latent: Option<usize>,
    /// More log output; repeat for debug level.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the fleet and write CSV files.
    Generate,
    /// Window, label, split and scale the simulations.
    Preprocess,
    /// Train the autoencoder.
    Train,
    /// Encode the evaluation windows to latent means.
    Encode,
    /// Reduce the latents to a 2-D embedding.
    Project {
        #[arg(long, value_enum)]
        method: Option<ProjectionMethod>,
    },
    /// Cluster the embedding.
    Cluster {
        #[arg(long, value_enum)]
        method: Option<ClusterMethod>,
    },
    /// Match clusters to classes and report metrics.
    Score {
        #[arg(long, value_enum)]
        method: Option<ClusterMethod>,
    },
    /// Write an SVG scatter plot of the embedding.
    Plot {
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// All stages in order.
    Run,
    /// Print the resolved configuration as TOML.
    ShowConfig,
}

impl GlobalArgs {
    /// Preset, then the config file, then individual flags.
    pub fn resolve(&self) -> CliResult<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path, self.preset.as_deref())?,
            None => PipelineConfig::preset(self.preset.as_deref().unwrap_or("two-class"))?,
        };
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(o) = &self.out {
            config.out_dir = o.clone();
        }
        if let Some(e) = self.epochs {
            config.model.epochs = e;
        }
        if let Some(h) = self.hidden {
            config.model.hidden_units = h;
        }
        if let Some(z) = self.latent {
            config.model.latent_dim = z;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Executes one parsed command, printing its human-readable result to stdout.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let config = cli.global.resolve()?;
    match &cli.command {
        Command::ShowConfig => print!("{}", config.to_toml()),
        Command::Generate => {
            let files = pipeline::generate(&config)?;
            println!("wrote {} files to {}", files.len(), pipeline::Layout::new(&config).data_dir().display());
        }
        Command::Preprocess => {
            let (train, test) = pipeline::preprocess(&config)?;
            println!("{} training windows, {} test windows", train.len(), test.len());
        }
        Command::Train => {
            let history = pipeline::train(&config)?;
            if let Some(last) = history.last() {
                println!(
                    "trained {} epochs; final loss {:.6} (reconstruction {:.6}, KL {:.4})",
                    history.len(),
                    last.train.total,
                    last.train.recon,
                    last.train.kl
                );
            }
        }
        Command::Encode => {
            let set = pipeline::encode(&config)?;
            println!("encoded {} windows", set.labels.len());
        }
        Command::Project { method } => {
            let e = pipeline::project(&config, *method)?;
            println!("{} embedding of {} points", e.params.name(), e.len());
        }
        Command::Cluster { method } => {
            for a in pipeline::cluster(&config, *method)? {
                println!("{}: {} clusters, {} noise", a.params.name(), a.n_clusters(), a.noise_count());
            }
        }
        Command::Score { method } => print!("{}", pipeline::score(&config, *method)?.text),
        Command::Plot { output } => {
            let path = pipeline::plot(&config, output.as_deref())?;
            println!("wrote {}", path.display());
        }
        Command::Run => print!("{}", pipeline::run(&config)?.text),
    }
    Ok(())
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.global.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

