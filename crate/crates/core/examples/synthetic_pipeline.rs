//! The whole pipeline through the library: synthesize a dataset, extract
//! features, train, evaluate by leave-one-out and predict one mesh.
//!
//!     cargo run --example synthetic_pipeline -- [n] [noise]

use spectralweight::pipeline::synth::{generate, write_dataset, SynthOptions, PRIMARY_TARGET};
use spectralweight::pipeline::{
    describe_manifest, evaluate, extract, predict_mesh, train, DatasetManifest, DescriptorCache, DictionaryMode,
    PipelineConfig,
};
use spectralweight::regression::EvalReport;

fn main() -> spectralweight::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(16, |s| s.parse().expect("n must be an integer"));
    let noise: f64 = args.next().map_or(0.03, |s| s.parse().expect("noise must be a number"));
    let dir = std::env::temp_dir().join(format!("spectralweight-example-{}", std::process::id()));

    let samples = generate(&SynthOptions { n, seed: 7, noise, level: 4 })?;
    let manifest_path = write_dataset(&samples, &dir)?;
    println!("wrote {n} meshes to {}", dir.display());

    let config = PipelineConfig {
        target_vertices: 500,
        ..PipelineConfig::default()
    };
    let manifest = DatasetManifest::load(&manifest_path)?;
    let cache = DescriptorCache::at(dir.join(".swcache"));
    let set = describe_manifest(&manifest, &config, &cache, false)?;
    let table = extract(&set, &config)?;
    println!("feature matrix {} x {}", table.rows.len(), table.feature_names.len());

    let reports = manifest
        .target_names()
        .iter()
        .map(|t| evaluate(&set, t, &config, DictionaryMode::PerFold))
        .collect::<spectralweight::Result<Vec<_>>>()?;
    print!("{}", EvalReport::table(&reports));

    let bundle = train(&table, PRIMARY_TARGET, &config)?;
    let first = &manifest.rows()[0];
    let p = predict_mesh(&bundle, &manifest.resolve(first), first.carcass_weight, &cache)?;
    println!(
        "{}: predicted {:.3} kg, recorded {:.3} kg",
        first.mesh_path, p.value, first.targets[PRIMARY_TARGET]
    );
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
