use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use koopnet::cli::{
    cmd_ablation, cmd_datagen, cmd_demo_identity, cmd_encoder_dft, cmd_eval, cmd_homotopy,
    cmd_predict, cmd_spectrum, cmd_sweep_rank, cmd_train, CommonOpts,
};

/// Learn coordinate transformations that make nonlinear PDE dynamics linear:
/// generate trajectory data, train the residual Koopman autoencoder, and
/// analyze the learned linear dynamics.
#[derive(Parser)]
#[command(name = "koopnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override data.seed and opt.seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for data generation and training (deterministic:
    /// results are identical for any thread count).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trajectory dataset (KPD1) from a config file.
    Datagen {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train a model on the datasets named by the config's paths.* keys.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Start from an existing checkpoint (architectures must match).
        #[arg(long)]
        warm_start: Option<PathBuf>,
    },
    /// Multi-step prediction from a checkpoint.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Take the initial state from this dataset...
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// ...at this trajectory index.
        #[arg(long, default_value_t = 0)]
        traj: usize,
        /// Or sample a fresh initial condition of this class
        /// (white_noise, sine, square, gaussian, triangle); needs --config.
        #[arg(long)]
        ic: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of prediction steps.
        #[arg(long)]
        horizon: usize,
    },
    /// Eigenvalues of the learned dynamics matrix and decoded eigenfunctions.
    Spectrum {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Snapshot spacing used to transform eigenvalues to decay rates.
        #[arg(long)]
        dt: f64,
    },
    /// Per-IC-class prediction errors over a test dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated horizons, e.g. 1,5,20.
        #[arg(long, value_delimiter = ',')]
        horizons: Vec<usize>,
    },
    /// Train one model per latent rank under identical budgets.
    SweepRank {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ranks: Vec<usize>,
    },
    /// Chained training across increasing time steps, warm vs cold.
    Homotopy {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated snapshot spacings, e.g. 0.125,0.25.
        #[arg(long, value_delimiter = ',')]
        dts: Vec<f64>,
    },
    /// The small identity-fitting experiment.
    DemoIdentity {
        #[arg(long, default_value_t = 0)]
        demo_seed: u64,
        #[arg(long, default_value_t = 6)]
        trials: usize,
    },
    /// Encoder coordinates next to dominant DFT coefficients for one state.
    EncoderDft {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        traj: usize,
    },
    /// The data-diversity x skip-connection ablation grid.
    Ablation {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
        horizons: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let opts = CommonOpts {
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out.clone(),
        argv: argv.join(" "),
    };
    let result = match &cli.command {
        Command::Datagen { config } => cmd_datagen(config, &opts),
        Command::Train { config, warm_start } => cmd_train(config, warm_start.as_deref(), &opts),
        Command::Predict {
            checkpoint,
            dataset,
            traj,
            ic,
            config,
            horizon,
        } => cmd_predict(
            checkpoint,
            dataset.as_deref(),
            *traj,
            config.as_deref(),
            ic.as_deref(),
            *horizon,
            &opts,
        ),
        Command::Spectrum { checkpoint, dt } => cmd_spectrum(checkpoint, *dt, &opts),
        Command::Eval {
            checkpoint,
            dataset,
            horizons,
        } => cmd_eval(checkpoint, dataset, horizons, &opts),
        Command::SweepRank { config, ranks } => cmd_sweep_rank(config, ranks, &opts),
        Command::Homotopy { config, dts } => cmd_homotopy(config, dts, &opts),
        Command::DemoIdentity { demo_seed, trials } => {
            cmd_demo_identity(cli.seed.unwrap_or(*demo_seed), *trials, &opts)
        }
        Command::EncoderDft {
            checkpoint,
            dataset,
            traj,
        } => cmd_encoder_dft(checkpoint, dataset, *traj, &opts),
        Command::Ablation { config, horizons } => cmd_ablation(config, horizons, &opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
