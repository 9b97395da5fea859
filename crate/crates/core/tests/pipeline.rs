use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use spectralweight::pipeline::synth::{generate, write_dataset, SynthOptions, PRIMARY_TARGET};
use spectralweight::pipeline::{
    describe_manifest, evaluate, extract, predict_mesh, train, DatasetManifest, DescriptorCache, DictionaryMode,
    FeatureTable, ModelBundle, PipelineConfig,
};
use spectralweight::regression::predict;
use spectralweight::Error;

fn small_config() -> PipelineConfig {
    PipelineConfig {
        target_vertices: 200,
        eig_count: 60,
        dictionary_k: 12,
        ..PipelineConfig::default()
    }
}

fn dataset(dir: &Path, n: usize, noise: f64) -> PathBuf {
    let samples = generate(&SynthOptions { n, seed: 11, noise, level: 3 }).unwrap();
    write_dataset(&samples, dir).unwrap()
}

fn table(manifest: &Path, cache: &DescriptorCache) -> FeatureTable {
    let config = small_config();
    let data = DatasetManifest::load(manifest).unwrap();
    extract(&describe_manifest(&data, &config, cache, false).unwrap(), &config).unwrap()
}

#[test]
fn extract_shape_and_cache_reuse() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 8, 0.0);
    let config = small_config();
    let data = DatasetManifest::load(&manifest).unwrap();
    let cache = DescriptorCache::at(dir.path().join(".swcache"));

    let first = describe_manifest(&data, &config, &cache, false).unwrap();
    let second = describe_manifest(&data, &config, &cache, false).unwrap();
    assert_eq!((first.cache_hits(), second.cache_hits()), (0, 8));

    let a = extract(&first, &config).unwrap();
    let b = extract(&second, &config).unwrap();
    assert_eq!(a.matrix().shape(), (8, 15));
    assert_eq!(a.feature_names.len(), config.feature_dim());
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());

    let uncached = table(&manifest, &DescriptorCache::disabled());
    assert_eq!(uncached.to_json().unwrap(), a.to_json().unwrap());
    assert_eq!(FeatureTable::from_json(&a.to_json().unwrap()).unwrap(), a);
}

#[test]
fn default_dimensions() {
    let c = PipelineConfig::default();
    assert_eq!(c.feature_dim(), 35);
    assert_eq!(spectralweight::encoding::feature_names(c.dictionary_k).len(), 35);
}

#[test]
fn missing_mesh_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 5, 0.0);
    fs::remove_file(dir.path().join("meshes/synth_003.obj")).unwrap();
    let err = DatasetManifest::load(&manifest).unwrap_err();
    assert!(err.to_string().contains("row 5 (meshes/synth_003.obj)"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn bad_mesh_aborts_unless_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 6, 0.0);
    fs::write(dir.path().join("meshes/synth_002.obj"), "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 5 0 0\nv 6 0 0\nv 5 1 0\nf 1 2 3\nf 4 5 6\n").unwrap();
    let data = DatasetManifest::load(&manifest).unwrap();
    let config = small_config();
    let err = describe_manifest(&data, &config, &DescriptorCache::disabled(), false).unwrap_err();
    assert!(err.to_string().contains("meshes/synth_002.obj"), "{err}");
    let set = describe_manifest(&data, &config, &DescriptorCache::disabled(), true).unwrap();
    assert_eq!(set.samples.len(), 5);
    assert_eq!(set.skipped[0].id, "meshes/synth_002.obj");
}

#[test]
fn train_reload_predict() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 8, 0.02);
    let cache = DescriptorCache::at(dir.path().join(".swcache"));
    let features = table(&manifest, &cache);
    let config = small_config();

    let bundle = train(&features, PRIMARY_TARGET, &config).unwrap();
    let path = dir.path().join("model.json");
    fs::write(&path, bundle.to_json().unwrap()).unwrap();
    let reloaded = ModelBundle::load(&path).unwrap();
    assert_eq!(reloaded, bundle);

    let x = features.matrix();
    for i in 0..x.nrows() {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        let a = predict(&bundle.model, &row).unwrap();
        let b = predict(&reloaded.model, &row).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    // A training mesh predicts its own fitted value, the same each time.
    let row = &features.rows[2];
    let data = DatasetManifest::load(&manifest).unwrap();
    let weight = data.rows().iter().find(|r| r.mesh_path == row.id).unwrap().carcass_weight;
    let mesh = dir.path().join(&row.id);
    let fitted = predict(&bundle.model, &row.features).unwrap();
    let p1 = predict_mesh(&reloaded, &mesh, weight, &cache).unwrap();
    let p2 = predict_mesh(&reloaded, &mesh, weight, &DescriptorCache::disabled()).unwrap();
    assert!((p1.value - fitted).abs() <= 1e-9 * fitted.abs(), "{} vs {fitted}", p1.value);
    assert_eq!(p1.value, p2.value);
    assert!(p1.diagnostics(&reloaded).contains("volume"));
}

#[test]
fn bundle_contract_errors() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 6, 0.0);
    let features = table(&manifest, &DescriptorCache::disabled());
    let config = small_config();

    let unknown = train(&features, "no_such_column", &config).unwrap_err();
    assert!(matches!(unknown, Error::Argument(_)), "{unknown}");
    let other = PipelineConfig { resolution: 3, ..config.clone() };
    assert!(matches!(train(&features, PRIMARY_TARGET, &other), Err(Error::Format(_))));

    let bundle = train(&features, PRIMARY_TARGET, &config).unwrap();
    let json = bundle.to_json().unwrap();
    let corrupt = json.replacen("\"version\": 1", "\"version\": 99", 1);
    assert!(matches!(ModelBundle::from_json(&corrupt), Err(Error::Format(_))));
    assert!(matches!(ModelBundle::from_json(&json[..json.len() / 2]), Err(Error::Format(_))));
    let wrong_k = json.replacen("\"dictionary_k\": 12", "\"dictionary_k\": 20", 1);
    let err = ModelBundle::from_json(&wrong_k).unwrap_err();
    assert!(matches!(err, Error::Format(_)) && err.exit_code() == 2, "{err}");
    assert!(bundle.ensure_compatible(&PipelineConfig::default()).is_err());
    assert!(bundle.ensure_compatible(&config).is_ok());
}

#[test]
fn evaluate_is_order_invariant_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dataset(dir.path(), 8, 0.0);
    let config = small_config();
    let cache = DescriptorCache::at(dir.path().join(".swcache"));
    let data = DatasetManifest::load(&manifest).unwrap();
    let set = describe_manifest(&data, &config, &cache, false).unwrap();
    let report = evaluate(&set, PRIMARY_TARGET, &config, DictionaryMode::PerFold).unwrap();

    let mut rows = data.rows().to_vec();
    rows.reverse();
    rows.rotate_left(3);
    let shuffled = DatasetManifest::new(data.root(), data.target_names().to_vec(), rows).unwrap();
    let set2 = describe_manifest(&shuffled, &config, &cache, false).unwrap();
    let report2 = evaluate(&set2, PRIMARY_TARGET, &config, DictionaryMode::PerFold).unwrap();
    assert_eq!(report.to_json().unwrap(), report2.to_json().unwrap());

    let shared = evaluate(&set, PRIMARY_TARGET, &config, DictionaryMode::Shared).unwrap();
    assert_eq!(shared.predictions.len(), 8);
    assert_ne!(shared, report);

    let mut constant = data.rows().to_vec();
    constant.iter_mut().for_each(|r| {
        r.targets.insert(PRIMARY_TARGET.into(), 5.0);
    });
    let flat = DatasetManifest::new(data.root(), data.target_names().to_vec(), constant).unwrap();
    let flat_set = describe_manifest(&flat, &config, &cache, false).unwrap();
    let err = evaluate(&flat_set, PRIMARY_TARGET, &config, DictionaryMode::PerFold).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");

    let few = DatasetManifest::new(data.root(), data.target_names().to_vec(), data.rows()[..3].to_vec()).unwrap();
    let few_set = describe_manifest(&few, &config, &cache, false).unwrap();
    let err = evaluate(&few_set, PRIMARY_TARGET, &config, DictionaryMode::PerFold).unwrap_err();
    assert!(matches!(err, Error::Argument(_)), "{err}");
}

#[test]
fn synth_is_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let opts = SynthOptions { n: 20, seed: 7, noise: 0.05, level: 2 };
    write_dataset(&generate(&opts).unwrap(), a.path()).unwrap();
    write_dataset(&generate(&opts).unwrap(), b.path()).unwrap();
    for name in ["manifest.csv", "meshes/synth_000.obj", "meshes/synth_019.obj"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_spectralweight")).args(args).output().unwrap()
}

#[test]
fn cli_round_trip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    fs::write(d("config.json"), serde_json::to_string(&small_config()).unwrap()).unwrap();

    let out = cli(&["synth", "--n", "3", "--out", &d("data")]);
    assert_eq!(out.status.code(), Some(2));
    let out = cli(&["--seed", "5", "synth", "--n", "6", "--level", "3", "--out", &d("data")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let manifest = d("data/manifest.csv");
    let out = cli(&["--config", &d("config.json"), "extract", &manifest, "--out", &d("features.json")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cli(&["train", &d("features.json"), "--target", "primal_kg", "--out", &d("model.json")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = cli(&["train", &d("features.json"), "--target", "nope", "--out", &d("x.json")]);
    assert_eq!(out.status.code(), Some(2));

    let out = cli(&["--verbose", "predict", &d("model.json"), &d("data/meshes/synth_001.obj"), "--carcass-weight", "80"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("primal_kg ") && stdout.trim_end().ends_with(" kg"), "{stdout}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("geodesic_diameter"));

    // Default configuration conflicts with the bundle.
    fs::write(d("default.json"), "{}").unwrap();
    let out = cli(&["--config", &d("default.json"), "predict", &d("model.json"), &d("data/meshes/synth_001.obj"), "--carcass-weight", "80"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cli(&["--config", &d("config.json"), "evaluate", &manifest, "--target", "trim_kg", "--json", &d("report.json")]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("CVe") && table.contains("trim_kg"), "{table}");
    let reports: serde_json::Value = serde_json::from_str(&fs::read_to_string(d("report.json")).unwrap()).unwrap();
    assert_eq!(reports[0]["target"], "trim_kg");

    let out = cli(&["predict", &d("missing.json"), &d("data/meshes/synth_001.obj"), "--carcass-weight", "80"]);
    assert_eq!(out.status.code(), Some(1));
}
