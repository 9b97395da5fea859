use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spectralweight::pipeline::synth::{generate, write_dataset, SynthOptions};
use spectralweight::pipeline::{
    describe_manifest, evaluate, extract, predict_mesh, train, DatasetManifest, DescriptorCache, DictionaryMode,
    FeatureTable, ModelBundle, PipelineConfig,
};
use spectralweight::regression::EvalReport;
use spectralweight::{Error, Result};

/// Predict carcass composition from 3D surface scans.
#[derive(Parser)]
#[command(name = "spectralweight", version)]
struct Cli {
    /// JSON file overriding pipeline defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CacheArgs {
    /// Defaults to `.swcache` next to the manifest.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long, conflicts_with = "cache_dir")]
    no_cache: bool,
}

impl CacheArgs {
    fn cache(&self, beside: &Path) -> DescriptorCache {
        match (&self.cache_dir, self.no_cache) {
            (_, true) => DescriptorCache::disabled(),
            (Some(dir), false) => DescriptorCache::at(dir),
            (None, false) => DescriptorCache::at(beside.parent().unwrap_or(Path::new(".")).join(".swcache")),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Describe every mesh of a manifest and write the feature matrix.
    Extract {
        manifest: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Leave out meshes that fail instead of aborting.
        #[arg(long)]
        skip_bad: bool,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// Fit PLS for one target column and write a model bundle.
    Train {
        features: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Leave-one-out evaluation for one or more target columns.
    Evaluate {
        manifest: PathBuf,
        /// Repeat for several targets; defaults to every target column.
        #[arg(long)]
        target: Vec<String>,
        /// Learn one dictionary on all meshes instead of one per fold.
        #[arg(long)]
        shared_dictionary: bool,
        #[arg(long)]
        skip_bad: bool,
        /// Also write the reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// Predict the bundle's target for one mesh.
    Predict {
        bundle: PathBuf,
        mesh: PathBuf,
        /// Carcass weight in kg.
        #[arg(long)]
        carcass_weight: f64,
        #[command(flatten)]
        cache: CacheArgs,
    },
    /// Write a synthetic dataset of bumpy ellipsoids with known targets.
    Synth {
        #[arg(long, default_value_t = 40)]
        n: usize,
        #[arg(short, long)]
        out: PathBuf,
        /// Relative standard deviation of target noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Icosphere subdivision level of each mesh.
        #[arg(long, default_value_t = 5)]
        level: u32,
    },
}

fn load_config(cli: &Cli) -> Result<Option<PipelineConfig>> {
    let Some(path) = &cli.config else {
        return Ok(cli.seed.map(|seed| PipelineConfig { seed, ..PipelineConfig::default() }));
    };
    let mut config = PipelineConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(Some(config))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Extract {
            manifest,
            out,
            skip_bad,
            cache,
        } => {
            let config = config.unwrap_or_default();
            let data = DatasetManifest::load(manifest)?;
            let set = describe_manifest(&data, &config, &cache.cache(manifest), *skip_bad)?;
            for s in &set.skipped {
                eprintln!("skipped {}: {}", s.id, s.reason);
            }
            let table = extract(&set, &config)?;
            write(out, &table.to_json()?)?;
            eprintln!(
                "extracted {} x {} features ({} cache hits, {} skipped)",
                table.rows.len(),
                table.feature_names.len(),
                set.cache_hits(),
                set.skipped.len()
            );
        }
        Command::Train { features, target, out } => {
            let table = FeatureTable::load(features)?;
            let config = config.unwrap_or_else(|| table.config.clone());
            let bundle = train(&table, target, &config)?;
            write(out, &bundle.to_json()?)?;
            if cli.verbose {
                eprintln!("trained {} components on {} samples", bundle.model.n_components(), table.rows.len());
            }
        }
        Command::Evaluate {
            manifest,
            target,
            shared_dictionary,
            skip_bad,
            json,
            cache,
        } => {
            let config = config.unwrap_or_default();
            let data = DatasetManifest::load(manifest)?;
            let targets = if target.is_empty() { data.target_names().to_vec() } else { target.clone() };
            for t in &targets {
                data.target(t)?;
            }
            let set = describe_manifest(&data, &config, &cache.cache(manifest), *skip_bad)?;
            for s in &set.skipped {
                eprintln!("skipped {}: {}", s.id, s.reason);
            }
            let mode = if *shared_dictionary { DictionaryMode::Shared } else { DictionaryMode::PerFold };
            let reports = targets
                .iter()
                .map(|t| evaluate(&set, t, &config, mode))
                .collect::<Result<Vec<_>>>()?;
            print!("{}", EvalReport::table(&reports));
            if let Some(path) = json {
                let values = reports
                    .iter()
                    .map(|r| Ok(serde_json::from_str::<serde_json::Value>(&r.to_json()?)?))
                    .collect::<Result<Vec<_>>>()?;
                write(path, &serde_json::to_string_pretty(&values)?)?;
            }
        }
        Command::Predict {
            bundle,
            mesh,
            carcass_weight,
            cache,
        } => {
            let bundle = ModelBundle::load(bundle)?;
            if let Some(config) = &config {
                bundle.ensure_compatible(config)?;
            }
            let prediction = predict_mesh(&bundle, mesh, *carcass_weight, &cache.cache(mesh))?;
            if cli.verbose {
                eprint!("{}", prediction.diagnostics(&bundle));
            }
            println!("{} {:.6} kg", bundle.target, prediction.value);
        }
        Command::Synth { n, out, noise, level } => {
            let opts = SynthOptions {
                n: *n,
                seed: cli.seed.or(config.map(|c| c.seed)).unwrap_or(SynthOptions::default().seed),
                noise: *noise,
                level: *level,
            };
            let samples = generate(&opts)?;
            let path = write_dataset(&samples, out)?;
            eprintln!("wrote {} meshes and {}", samples.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
