use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lsf::lsfnet::{gradient_check_max_rel_error, init_model, LayerDims};
use lsf::pipeline::{
    cmd_build_index, cmd_classify, cmd_evaluate, cmd_extract, cmd_fit_selector, cmd_train_fusion,
    LabelTask, PipelineConfig,
};
use lsf::synthetic::{generate, SyntheticConfig};
use lsf::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lsf",
    about = "Fuse trajectory-aligned video descriptors and classify videos by projection similarity search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the pipeline stages; any flag overrides the same key in
/// the --config file.
#[derive(Args)]
struct CommonArgs {
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train_manifest: Option<PathBuf>,
    #[arg(long)]
    test_manifest: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    selector: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    /// Output directory for reports and curve/score CSVs
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// background (multi-class) or foreground (binary)
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    quiet: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut config = PipelineConfig::default();
        if let Some(path) = &self.config {
            config.apply_file(path)?;
        }
        if let Some(v) = &self.train_manifest {
            config.train_manifest = Some(v.clone());
        }
        if let Some(v) = &self.test_manifest {
            config.test_manifest = Some(v.clone());
        }
        if let Some(v) = &self.model {
            config.model_path = v.clone();
        }
        if let Some(v) = &self.selector {
            config.selector_path = v.clone();
        }
        if let Some(v) = &self.index {
            config.index_path = v.clone();
        }
        if let Some(v) = &self.out {
            config.out_dir = v.clone();
        }
        if let Some(v) = self.seed {
            config.seed = v;
            config.train.seed = v;
        }
        if let Some(v) = &self.task {
            config.task = LabelTask::parse(v)?;
        }
        config.quiet = self.quiet;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Phase 1: train the fusion network on sampled labeled descriptors
    TrainFusion {
        #[command(flatten)]
        common: CommonArgs,
        /// Descriptor rows to sample (capped at the population)
        #[arg(long)]
        sample_size: Option<usize>,
        /// Epoch cap
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Phase 2: encode and pool every video of a manifest into a features CSV
    Extract {
        #[command(flatten)]
        common: CommonArgs,
        /// Manifest to extract (defaults to the train manifest)
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Output CSV path
        #[arg(long)]
        features: PathBuf,
    },
    /// Fisher-rank training features and persist the top-q% selector
    FitSelector {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        features: PathBuf,
        /// Percentage of components to keep
        #[arg(long)]
        q: Option<f64>,
    },
    /// Build the per-class projection index over selected features
    BuildIndex {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        features: PathBuf,
        /// Number of hash functions
        #[arg(short = 'n', long)]
        num_hashes: Option<usize>,
    },
    /// Classify one descriptor file against the persisted artifacts
    Classify {
        #[command(flatten)]
        common: CommonArgs,
        descriptor: PathBuf,
        /// Neighbours per class bucket
        #[arg(short = 'k', long)]
        k: Option<usize>,
    },
    /// Sweep (N, K) pairs over the test manifest and report accuracies
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Replace the deterministic grid with this many random (N, K) pairs
        #[arg(long)]
        random_pairs: Option<usize>,
    },
    /// Generate a labeled synthetic Gaussian-cluster descriptor dataset
    GenSynthetic {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        classes: usize,
        #[arg(long, default_value_t = 600)]
        train_videos: usize,
        #[arg(long, default_value_t = 300)]
        test_videos: usize,
        #[arg(long, default_value_t = 50)]
        min_trajectories: usize,
        #[arg(long, default_value_t = 500)]
        max_trajectories: usize,
        /// Inter-centroid distance as a multiple of the within-class sigma
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        #[arg(long, default_value_t = 0.1)]
        noise_sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check analytic gradients against central finite differences
    Gradcheck {
        #[arg(long, default_value_t = 20)]
        input: usize,
        #[arg(long, default_value_t = 12)]
        hidden: usize,
        #[arg(long, default_value_t = 8)]
        code: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainFusion {
            common,
            sample_size,
            iterations,
            batch_size,
        } => {
            let mut config = common.resolve()?;
            if let Some(v) = sample_size {
                config.sample_size = v;
            }
            if let Some(v) = iterations {
                config.train.iterations = v;
            }
            if let Some(v) = batch_size {
                config.train.batch_size = v;
            }
            cmd_train_fusion(&config)?;
        }
        Command::Extract {
            common,
            manifest,
            features,
        } => {
            let config = common.resolve()?;
            let manifest = match manifest {
                Some(path) => path,
                None => config
                    .train_manifest
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument("--manifest or train_manifest required".into()))?,
            };
            cmd_extract(&config, &manifest, &features)?;
        }
        Command::FitSelector {
            common,
            features,
            q,
        } => {
            let mut config = common.resolve()?;
            if let Some(v) = q {
                config.q = v;
            }
            cmd_fit_selector(&config, &features)?;
        }
        Command::BuildIndex {
            common,
            features,
            num_hashes,
        } => {
            let mut config = common.resolve()?;
            if let Some(v) = num_hashes {
                config.num_hashes = v;
            }
            cmd_build_index(&config, &features)?;
        }
        Command::Classify {
            common,
            descriptor,
            k,
        } => {
            let mut config = common.resolve()?;
            if let Some(v) = k {
                config.k = v;
            }
            cmd_classify(&config, &descriptor)?;
        }
        Command::Evaluate {
            common,
            random_pairs,
        } => {
            let mut config = common.resolve()?;
            if let Some(v) = random_pairs {
                config.random_pairs = Some(v);
            }
            let report = cmd_evaluate(&config)?;
            print!("{}", report.render());
        }
        Command::GenSynthetic {
            out,
            classes,
            train_videos,
            test_videos,
            min_trajectories,
            max_trajectories,
            separation,
            noise_sigma,
            seed,
        } => {
            let config = SyntheticConfig {
                classes,
                train_videos,
                test_videos,
                min_trajectories,
                max_trajectories,
                separation,
                noise_sigma,
                seed,
                ..SyntheticConfig::default()
            };
            let dataset = generate(&out, &config)?;
            println!("train manifest: {}", dataset.train_manifest.display());
            println!("test manifest: {}", dataset.test_manifest.display());
        }
        Command::Gradcheck {
            input,
            hidden,
            code,
            classes,
            seed,
        } => {
            let model = init_model(LayerDims::new(input, hidden, code), classes, seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let rows = Array2::from_shape_fn((5, input), |_| rng.gen_range(-1.0..1.0));
            let labels: Vec<usize> = (0..5).map(|i| i % classes).collect();
            let worst = gradient_check_max_rel_error(&model, &rows.view(), &labels, 1e-6)?;
            println!("max relative gradient error: {worst:.3e}");
            if worst >= 1e-5 {
                return Err(Error::Divergence(format!(
                    "gradient check failed: {worst:.3e} >= 1e-5"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not usage errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
